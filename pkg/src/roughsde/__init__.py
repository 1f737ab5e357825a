"""Numerical rough paths: truncated tensor algebra, sampled rough paths and
their metrics, pair lifts, Brownian drivers, level-2 RDE solvers and a small
experiment harness."""
from . import brownian, experiments, lift, path_space, rde, tensor_algebra
from .brownian import BrownianSample, dyadic_refine, linear_approx, reference_lift, sample_bm, scale_lift
from .errors import (
    ConfigError,
    DivergenceError,
    DomainError,
    RegistryError,
    ResourceError,
    RoughPathError,
    ShapeError,
)
from .experiments import ExperimentConfig, RateReport, rate_function, run_experiment, stratonovich_sum
from .lift import DiagnosticsReport, diag_lift, good_seq_diag, pair_lift, sig_pwl, young_cross
from .path_space import (
    LINEAR,
    Control,
    PointPath,
    SampledRoughPath,
    Subdivision,
    control_eval,
    dist_modulus,
    dist_pvar,
    increment,
)
from .rde import (
    OneForm,
    Scenario,
    VectorFieldSet,
    build_anticipating_scenario,
    rough_integral,
    solve_ode_ref,
    solve_rde2,
)
from .tensor_algebra import GroupElement, TruncatedTensor

__version__ = "0.1.0"
