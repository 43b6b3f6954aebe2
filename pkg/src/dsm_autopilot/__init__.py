"""Conventional and dynamic sliding-mode pitch autopilots for a time-varying launch vehicle."""

from .controller_csm import CsmConfig, csm_control, csm_surface, sat
from .controller_dsm import (
    DsmConfig,
    ManifoldFilterState,
    WCoefficients,
    closed_loop_charpoly,
    dsm_control,
    dsm_manifold,
    itae_quintic,
    match_w_coefficients,
    solve_w_coefficients,
    update_w_realization,
)
from .errors import (
    AutopilotError,
    ConfigError,
    DegeneratePlantError,
    IllConditionedError,
    InvalidInputError,
    NotRealizableError,
    NumericalBlowupError,
    SingularGainError,
)
from .poly_tf import (
    Polynomial,
    RationalTransferFunction,
    StateSpaceRealization,
    pitch_plant_tf,
    poly_add,
    poly_mul,
    poly_scale,
    realize_canonical,
)
from .sim import (
    Metrics,
    ReferenceProgram,
    Scenario,
    TrajectoryLog,
    compute_metrics,
    reachability_monitor,
    rk4_step,
    run_scenario,
    simulate,
)
from .vehicle import (
    CoefficientSchedule,
    DisturbanceSpec,
    PitchCoefficients,
    Ramp,
    Sine,
    Step,
    coeffs_at,
    disturbance_eval,
    gyro_deriv,
    plant_deriv,
    servo_deriv,
)

__version__ = "0.1.0"
