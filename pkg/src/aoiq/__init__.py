"""aoiq: age-of-information toolkit for bufferless message processors.

Exact discrete-event sample paths of the age and arrival-gap processes under
pushout/blocking-style admission policies, cross-validated against closed-form
Laplace transforms, means and zero-atoms, and against renewal-equation grid
solvers for the general-renewal cases.
"""

from .analytic import (Model, NoSignChange, SolverOptions, UnstableModel,
                       crossover, fifo_mean_aoi_mm, lt_aoi, lt_naoi, mean_aoi,
                       mean_naoi, mm_blocking_naoi_cond_lt,
                       mm_blocking_naoi_cond_lt_scaled,
                       mm_blocking_naoi_density, naoi_atom, table_means)
from .dist import (CrossMoments, Deterministic, Dist, DistValidationError,
                   Erlang, Exponential, Mixture, UniformInterval,
                   cross_moments, dist_from_config, dist_to_config)
from .paths import (DriftPath, EmptyWindow, PathStats, StepPath,
                    batch_time_means,
                    compare_fifo_p2, compare_plifo_pushout, default_window,
                    extract_aoi_path, extract_naoi_path, ks_distance,
                    path_cdf, path_quantiles, path_stats, stats_to_json)
from .policies import (ALL_POLICIES, Blocking, BlockThenPush, Fifo,
                       InstabilityWarning, OutcomeSeq, parse_policy,
                       policy_label, PreemptiveLifo, Pushout, PushoutTwo,
                       PushThenBlock, simulate)
from .quadrature import QuadratureNonConvergence
from .volterra import (GridFn, RenewalGrids, StepTooCoarse, expect_against,
                       laplace_residuals, renewal_grids, solve_volterra)
from .workload import (TraceFormatError, Workload, generate, load_workload,
                       save_workload)

__version__ = "0.1.0"
