"""Batch driver wiring the library: sieve caching, counting, Gaussian
comparison and the fluctuation experiments, with deterministic CSV/JSON
output.

Exit codes: 0 success, 1 usage error, 2 resource or runtime failure.
Config precedence: command-line flags over --config file (key=value lines)
over built-in defaults.  The sieve cache honors $RMFLAB_SIEVE_CACHE.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .arith import PolySpec, build_sieve, load_sieve, save_sieve
from .energy import (EquationKind, TopPrimeConstraint, count_fourth_moment,
                     count_fourth_moment_oracle, epsilon_report)
from .errors import ResourceError, UsageError
from .experiments import (run_clt_experiment, run_poly_fluctuation,
                          run_short_fluctuation, run_slow_variation,
                          verify_count_at_scales)
from .gaussian import gaussian_max_prob
from .model import RmfModel, TwistSelector, default_twist
from .reporting import csv_lines, json_text, write_csv, write_json
from .scales import HSpec, make_short_scales
from .sets import ArithSet, Interval, PolyImage, explicit_set, prepare_set

SIEVE_CACHE_ENV = "RMFLAB_SIEVE_CACHE"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_poly(text: str) -> PolySpec:
    try:
        return PolySpec(tuple(int(c) for c in text.split(",")))
    except ValueError as exc:
        raise UsageError(f"bad polynomial {text!r}: comma-separated integer "
                         "coefficients, ascending degree") from exc


def parse_set_spec(text: str, squarefree: bool = False):
    """interval:N,H | range:a,b | poly:c0,c1,...:N | values:v1,v2,..."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "interval":
            n, h = (int(v) for v in rest.split(","))
            return ArithSet(Interval(n, h), squarefree_only=squarefree)
        if kind == "range":
            a, b = (int(v) for v in rest.split(","))
            return ArithSet(Interval(b, b - a + 1), squarefree_only=squarefree)
        if kind == "poly":
            coeffs, n = rest.rsplit(":", 1)
            return ArithSet(PolyImage(parse_poly(coeffs), int(n)),
                            squarefree_only=squarefree)
        if kind == "values":
            return ("values", [int(v) for v in rest.split(",")], squarefree)
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(f"bad set spec {text!r}") from exc
    raise UsageError(
        f"unknown set kind {kind!r}; expected interval/range/poly/values")


def _materialize(sieve, spec):
    if isinstance(spec, tuple) and spec[0] == "values":
        return explicit_set(sieve, spec[1], squarefree_only=spec[2])
    return prepare_set(sieve, spec)


def _spec_sieve_need(spec) -> int:
    if isinstance(spec, tuple) and spec[0] == "values":
        vals = spec[1]
        return max(math.isqrt(max(vals)) + 1, 3)
    kind = spec.kind
    if isinstance(kind, Interval):
        return kind.N
    peak = max(abs(kind.poly(n)) for n in range(1, kind.N + 1))
    return max(math.isqrt(peak) + 1, kind.N + 1)


def get_sieve(limit_needed: int, override: int | None = None):
    """Build (or load through $RMFLAB_SIEVE_CACHE) a sieve covering the
    request."""
    limit = max(int(limit_needed), int(override or 0), 2)
    cache = os.environ.get(SIEVE_CACHE_ENV)
    if cache and os.path.exists(cache):
        sieve = load_sieve(cache)
        if sieve.limit >= limit:
            return sieve
    sieve = build_sieve(limit)
    if cache:
        save_sieve(sieve, cache)
    return sieve


def _read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"bad config line {line!r}; expected k=v")
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


def _apply_config(args: argparse.Namespace, defaults: dict) -> None:
    """flags > config file > defaults; unset flags arrive as None."""
    file_vals = _read_config_file(args.config) if getattr(
        args, "config", None) else {}
    for key, default in defaults.items():
        if getattr(args, key, None) is not None:
            continue
        if key in file_vals:
            raw = file_vals[key]
            caster = type(default) if default is not None else str
            if caster is bool:
                setattr(args, key, raw.lower() in ("1", "true", "yes"))
            else:
                setattr(args, key, caster(raw))
        else:
            setattr(args, key, default)


def _model(args) -> RmfModel:
    try:
        return RmfModel(args.model)
    except ValueError as exc:
        raise UsageError(f"unknown model {args.model!r}") from exc


def _twist(args, model: RmfModel) -> TwistSelector:
    if args.twist in (None, "auto"):
        return default_twist(model)
    try:
        return TwistSelector(args.twist)
    except ValueError as exc:
        raise UsageError(f"unknown twist {args.twist!r}") from exc


def _config_echo(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys if getattr(args, k) is not None}


def _emit(args, command: str, config: dict, results,
          csv_payload=None) -> None:
    envelope = {"command": command, "seed": int(config.get("seed", 0)),
                "config": config, "results": results}
    if csv_payload is not None:
        header, rows = csv_payload
        comments = [f"{k}={config[k]}" for k in sorted(config)]
        if args.out:
            write_csv(args.out, header, rows, comments)
        else:
            sys.stdout.write("\n".join(csv_lines(header, rows, comments))
                             + "\n")
    if args.json:
        write_json(args.json, envelope)
    elif csv_payload is None:
        sys.stdout.write(json_text(envelope))


# ---------------------------------------------------------------------------
# subcommands


def _cmd_sieve(args) -> int:
    _apply_config(args, {"limit": 1000, "cache": None})
    sieve = build_sieve(args.limit)
    path = args.cache or os.environ.get(SIEVE_CACHE_ENV)
    if path:
        save_sieve(sieve, path)
    config = {"limit": args.limit, "seed": 0}
    _emit(args, "sieve", config,
          {"limit": sieve.limit, "prime_count": int(sieve.primes.size),
           "cache": path})
    return 0


def _cmd_count(args) -> int:
    _apply_config(args, {"eq": "ratio", "constraint": "none",
                         "squarefree": False, "budget": 10_000_000_000,
                         "epsilon": False, "sieve_limit": None})
    kind = EquationKind.SQUARE_PRODUCT if args.eq == "square" \
        else EquationKind.RATIO_MATCH
    if args.set_all:
        specs = [parse_set_spec(args.set_all, args.squarefree)] * 4
    elif args.sets:
        specs = [parse_set_spec(s, args.squarefree) for s in args.sets]
    else:
        raise UsageError("need --set-all or --sets")
    need = max(_spec_sieve_need(s) for s in specs)
    sieve = get_sieve(need, args.sieve_limit)
    preps = [_materialize(sieve, s) for s in specs]
    config = {"eq": args.eq, "constraint": args.constraint,
              "squarefree": args.squarefree, "seed": 0,
              "sets": [p.label() for p in preps]}
    if args.epsilon:
        rep = epsilon_report(sieve, preps, kind, args.budget)
        _emit(args, "count", config, rep.to_json_dict())
        return 0
    if len(preps) != 4:
        raise UsageError("tally mode needs exactly four sets")
    constraint = {"none": TopPrimeConstraint.NONE,
                  "paired": TopPrimeConstraint.PAIRED_TWO_TWO,
                  "allequal": TopPrimeConstraint.ALL_EQUAL}[args.constraint]
    tally = count_fourth_moment(sieve, preps, kind, constraint, args.budget)
    _emit(args, "count", config, tally.to_json_dict())
    return 0


def _cmd_clt(args) -> int:
    _apply_config(args, {"model": "rademacher", "twist": None, "trials": 1000,
                         "seed": 0, "workers": 1, "sieve_limit": None,
                         "diag_budget": 200_000_000, "squarefree": None})
    model = _model(args)
    twist = _twist(args, model)
    if not args.set:
        raise UsageError("need at least one --set")
    squarefree = args.squarefree
    if squarefree is None:
        squarefree = model is RmfModel.RADEMACHER
    specs = [parse_set_spec(s, squarefree) for s in args.set]
    need = max(_spec_sieve_need(s) for s in specs)
    sieve = get_sieve(need, args.sieve_limit)
    preps = [_materialize(sieve, s) for s in specs]
    reports = run_clt_experiment(model, sieve, preps, twist, args.trials,
                                 args.seed, args.workers, args.diag_budget)
    config = {"model": model.value, "twist": twist.value,
              "trials": args.trials, "seed": args.seed,
              "squarefree": squarefree,
              "sets": [p.label() for p in preps]}
    header = ["trial"] + [f"S_{i + 1}" for i in range(len(reports))]
    rows = ([t] + [rep.sums[t] for rep in reports]
            for t in range(args.trials))
    _emit(args, "clt", config, [rep.to_json_dict() for rep in reports],
          csv_payload=(header, rows))
    return 0


def _cmd_fluct_poly(args) -> int:
    _apply_config(args, {"model": "rademacher", "twist": None, "poly": "0,1,1",
                         "X": 100, "eps0": 0.5, "k": None, "trials": 100,
                         "seed": 0, "workers": 1})
    model = _model(args)
    twist = _twist(args, model)
    P = parse_poly(args.poly)
    rep = run_poly_fluctuation(model, P, args.X, args.eps0, twist,
                               args.trials, args.seed, k_override=args.k,
                               workers=args.workers)
    config = {"model": model.value, "twist": twist.value, "poly": args.poly,
              "X": args.X, "eps0": args.eps0, "k": rep.k,
              "trials": args.trials, "seed": args.seed}
    _emit(args, "fluct-poly", config, rep.json_summary(),
          csv_payload=(rep.csv_header(), rep.csv_rows()))
    return 0


def _cmd_fluct_short(args) -> int:
    _apply_config(args, {"model": "rademacher", "twist": None, "X": 10000,
                         "hspec": "pow:0.75", "delta": 1.25, "eps0": 0.478,
                         "eps": 0.5, "trials": 100, "seed": 0, "workers": 1})
    model = _model(args)
    twist = _twist(args, model)
    rep = run_short_fluctuation(model, args.X, HSpec.parse(args.hspec),
                                args.delta, args.eps0, args.eps, twist,
                                args.trials, args.seed, workers=args.workers)
    config = {"model": model.value, "twist": twist.value, "X": args.X,
              "hspec": args.hspec, "delta": args.delta, "eps0": args.eps0,
              "eps": args.eps, "trials": args.trials, "seed": args.seed}
    _emit(args, "fluct-short", config, rep.json_summary(),
          csv_payload=(rep.csv_header(), rep.csv_rows()))
    return 0


def _cmd_slowvar(args) -> int:
    _apply_config(args, {"model": "rademacher", "twist": None, "poly": "0,1,1",
                         "c": 0.7, "lmax": 8, "grid": 64, "trials": 100,
                         "seed": 0, "decay_power": 1.0, "workers": 1})
    model = _model(args)
    twist = _twist(args, model)
    rep = run_slow_variation(model, parse_poly(args.poly), args.c, args.lmax,
                             args.grid, twist, args.trials, args.seed,
                             decay_power=args.decay_power,
                             workers=args.workers)
    config = {"model": model.value, "twist": twist.value, "poly": args.poly,
              "c": args.c, "lmax": args.lmax, "grid": args.grid,
              "decay_power": args.decay_power, "trials": args.trials,
              "seed": args.seed}
    _emit(args, "slowvar", config, rep.json_summary(),
          csv_payload=(rep.csv_header(), rep.csv_rows()))
    return 0


def _cmd_gaussmax(args) -> int:
    _apply_config(args, {"k": 4, "t": 0.0, "rho": 0.0, "trials": 10000,
                         "seed": 0, "slepian": None})
    if args.k < 1:
        raise UsageError("k must be >= 1")
    cov = (1.0 - args.rho) * np.eye(args.k) \
        + args.rho * np.ones((args.k, args.k))
    slepian = None
    if args.slepian:
        try:
            d, e = (float(v) for v in args.slepian.split(","))
        except ValueError as exc:
            raise UsageError("--slepian wants delta,eps") from exc
        slepian = (d, e)
    rep = gaussian_max_prob(cov, args.t, args.trials, args.seed,
                            slepian=slepian)
    config = {"k": args.k, "t": args.t, "rho": args.rho,
              "trials": args.trials, "seed": args.seed}
    _emit(args, "gaussmax", config, rep.to_json_dict())
    return 0


def _cmd_verify_scales(args) -> int:
    _apply_config(args, {"X": 2000, "hspec": "pow:0.8", "delta": 1.5,
                         "eps0": 0.456, "eps": 0.5, "eq": "square",
                         "oracle": False, "budget": 10_000_000_000})
    kind = EquationKind.SQUARE_PRODUCT if args.eq == "square" \
        else EquationKind.RATIO_MATCH
    family = make_short_scales(args.X, HSpec.parse(args.hspec), args.delta,
                               args.eps0, args.eps)
    sieve = get_sieve(family.max_scale + 1)
    results = []
    for l1 in family.prime_indices:
        for l2 in family.prime_indices:
            rep = verify_count_at_scales(sieve, family, l1, l2, kind,
                                         args.budget)
            entry = rep.to_json_dict()
            if args.oracle:
                from .experiments import scale_pair_sets
                o = count_fourth_moment_oracle(
                    sieve, scale_pair_sets(sieve, family, l1, l2, kind),
                    kind, TopPrimeConstraint.PAIRED_TWO_TWO)
                entry["oracle"] = {"total": o[0], "trivial": o[1],
                                   "nontrivial": o[2]}
                entry["oracle_agrees"] = o == (rep.tally.total,
                                               rep.tally.trivial,
                                               rep.tally.nontrivial)
            results.append(entry)
    config = {"X": args.X, "hspec": args.hspec, "delta": args.delta,
              "eps0": args.eps0, "eps": args.eps, "eq": args.eq, "seed": 0}
    _emit(args, "verify-scales", config, results)
    return 0


# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, stochastic: bool = True) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--json", help="write the JSON summary here")
    p.add_argument("--out", help="write the CSV payload here")
    if stochastic:
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--model",
                       choices=[m.value for m in RmfModel])
        p.add_argument("--twist",
                       choices=["auto"] + [t.value for t in TwistSelector])


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="rmflab", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sieve", help="build and cache the factor sieve")
    _add_common(p, stochastic=False)
    p.add_argument("--limit", type=int)
    p.add_argument("--cache")
    p.set_defaults(func=_cmd_sieve)

    p = sub.add_parser("count", help="fourth-moment tallies / epsilon report")
    _add_common(p, stochastic=False)
    p.add_argument("--eq", choices=["ratio", "square"])
    p.add_argument("--constraint", choices=["none", "paired", "allequal"])
    p.add_argument("--set-all", dest="set_all")
    p.add_argument("--sets", nargs="+")
    p.add_argument("--squarefree", action="store_const", const=True)
    p.add_argument("--epsilon", action="store_const", const=True)
    p.add_argument("--budget", type=int)
    p.add_argument("--sieve-limit", dest="sieve_limit", type=int)
    p.set_defaults(func=_cmd_count)

    p = sub.add_parser("clt", help="normal-comparison distances and bounds")
    _add_common(p)
    p.add_argument("--set", action="append")
    p.add_argument("--squarefree", action="store_const", const=True)
    p.add_argument("--diag-budget", dest="diag_budget", type=int)
    p.add_argument("--sieve-limit", dest="sieve_limit", type=int)
    p.set_defaults(func=_cmd_clt)

    p = sub.add_parser("fluct-poly", help="polynomial-image scale maxima")
    _add_common(p)
    p.add_argument("--poly")
    p.add_argument("--X", type=int)
    p.add_argument("--eps0", type=float)
    p.add_argument("--k", type=int)
    p.set_defaults(func=_cmd_fluct_poly)

    p = sub.add_parser("fluct-short", help="short-interval scale maxima")
    _add_common(p)
    p.add_argument("--X", type=int)
    p.add_argument("--hspec")
    p.add_argument("--delta", type=float)
    p.add_argument("--eps0", type=float)
    p.add_argument("--eps", type=float)
    p.set_defaults(func=_cmd_fluct_short)

    p = sub.add_parser("slowvar", help="between-scale increment maxima")
    _add_common(p)
    p.add_argument("--poly")
    p.add_argument("--c", type=float)
    p.add_argument("--lmax", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--decay-power", dest="decay_power", type=float)
    p.set_defaults(func=_cmd_slowvar)

    p = sub.add_parser("gaussmax", help="Gaussian max-probability estimate")
    _add_common(p)
    p.add_argument("--k", type=int)
    p.add_argument("--t", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--slepian", help="delta,eps for the comparison RHS")
    p.set_defaults(func=_cmd_gaussmax)

    p = sub.add_parser("verify-scales",
                       help="multi-scale counting verification")
    _add_common(p, stochastic=False)
    p.add_argument("--X", type=int)
    p.add_argument("--hspec")
    p.add_argument("--delta", type=float)
    p.add_argument("--eps0", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--eq", choices=["ratio", "square"])
    p.add_argument("--oracle", action="store_const", const=True)
    p.add_argument("--budget", type=int)
    p.set_defaults(func=_cmd_verify_scales)
    return top


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))
