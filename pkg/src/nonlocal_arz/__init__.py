"""Nonlocal Aw-Rascle-Zhang traffic model with Arrhenius look-ahead.

Solvers for the model hierarchy (LWR, first-order nonlocal, local ARZ,
nonlocal ARZ), critical threshold curves in the (rho, rho_x) plane, tracing
of characteristic paths and a config-driven experiment runner.
"""

from .errors import (
    InvalidParameterError,
    InvalidStateError,
    NonlocalARZError,
    NumericalFailure,
    ODEFailure,
    SingularPointError,
    TruncatedSupportError,
    UndefinedConstantError,
    UnsupportedModelError,
)
from .experiments import (
    ExperimentConfig,
    blowup_time_bound,
    named_config,
    run_experiment,
    run_sweep,
)
from .flux import FluxModel, blowup_beta, make_custom_flux, make_pipes_flux
from .kernels import (
    Kernel,
    compute_rho_tilde,
    custom_kernel,
    interaction_integral,
    truncated_exponential_kernel,
    uniform_kernel,
    zero_kernel,
)
from .phase_plane import (
    CharacteristicTrace,
    Tracer,
    coupled_rhs,
    decay_envelope,
    integrate_coupled_ode,
    integrate_first_order_trajectory,
    mediant_lower_bound,
    trace_characteristics,
    verify_comparison,
)
from .presets import preset_state, read_initial_csv, write_initial_csv
from .solver import (
    ModelVariant,
    RunReport,
    SolverConfig,
    confirm_gradient_blowup,
    run,
    stable_dt,
    step,
)
from .state import (
    Grid,
    TrafficState,
    build_initial_state,
    compute_F0_G0,
    state_from_psi,
    validate_assumptions,
)
from .thresholds import (
    ThresholdCurve,
    classify_initial_data,
    eta_constant_from_data,
    sigma_closed_form,
    solve_threshold_ode,
)

__version__ = "0.1.0"
