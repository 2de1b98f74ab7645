"""Counting, simulation and Gaussian-comparison toolkit for sums of random
multiplicative functions over structured integer sets."""

from .arith import (FactorSieve, PolySpec, build_sieve, count_omega_exceed,
                    count_squarefree_rough, factorize, hmyrova_curve,
                    is_squarefree, largest_prime_factor, load_sieve,
                    omega_big, psi_poly_smooth, psi_smooth, save_sieve,
                    squarefree_kernel, tau3, tau3_interval_sum)
from .energy import (BoundValue, CltDiagnostics, CoefficientVector,
                     EpsilonReport, EquationKind, SolutionTally,
                     TopPrimeConstraint, compute_A, compute_B,
                     conditional_bound, count_fourth_moment,
                     count_fourth_moment_oracle, count_top_prime_pairs,
                     epsilon_report, fitted_exponent, normal_comparison_bound,
                     theorem_bound)
from .errors import ConsistencyError, ResourceError, UsageError
from .experiments import (CltSetReport, FluctuationReport, GapReport,
                          ScaleCountReport, SlowVariationReport,
                          run_clt_experiment, run_poly_fluctuation,
                          run_short_fluctuation, run_slow_variation,
                          scale_pair_sets, verify_count_at_scales)
from .gaussian import (CholeskyFactor, CovarianceMatrix, EmpiricalSample,
                       GaussianMaxReport, cholesky, empirical_covariance,
                       gaussian_max_prob, kolmogorov_distance,
                       normal_quantile, slepian_rhs, std_normal_cdf,
                       wasserstein1_distance)
from .model import (ConditionalSplit, RmfModel, RmfSample, TrialEngine,
                    TwistSelector, conditional_decompose, default_twist,
                    f_at, m_values, martingale_slices, monte_carlo_sums,
                    normalized_sum, twisted_sum, validate_twist)
from .scales import (HKind, HSpec, PolyScaleFamily, ShortScaleFamily,
                     make_poly_scales, make_short_scales)
from .sets import (ArithSet, Interval, PolyImage, PreparedSet, enumerate_set,
                   explicit_set, prepare_set)

__version__ = "0.1.0"
