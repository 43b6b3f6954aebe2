"""Conventional sliding-mode pitch-rate autopilot with boundary-layer smoothing."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInputError, SingularGainError

MIN_CONTROL_GAIN = 1e-9


@dataclass(frozen=True)
class CsmConfig:
    K: float = 1.0  # 1/s, surface slope
    rho: float = 0.01  # switching gain
    epsilon: float = 1e-3  # boundary-layer half-width
    use_sign: bool = False  # discontinuous switching, for chattering demos

    def __post_init__(self):
        for name in ("K", "rho", "epsilon"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise InvalidInputError(f"csm.{name} must be a positive finite number, got {v}")


def sat(x: float, eps: float) -> float:
    """``x/eps`` clipped to [-1, 1]."""
    if not eps > 0.0:
        raise InvalidInputError(f"boundary layer width must be positive, got {eps}")
    y = x / eps
    if y > 1.0:
        return 1.0
    if y < -1.0:
        return -1.0
    return y


def csm_surface(theta_e: float, q_e: float, K: float) -> float:
    return q_e + K * theta_e


def csm_control(q_c, q_c_dot, q_e, v_z, q, c, S, cfg: CsmConfig) -> float:
    """Thrust deflection that drives the surface with ``S' = -rho*sat(S/eps)``.

    The equivalent part cancels the known pitch dynamics; only the switching
    term acts on the surface value.
    """
    if abs(c.M_de) < MIN_CONTROL_GAIN:
        raise SingularGainError(f"|M_de| = {abs(c.M_de):.3g} is below {MIN_CONTROL_GAIN}")
    if cfg.use_sign:
        switch = math.copysign(1.0, S) if S != 0.0 else 0.0
    else:
        switch = sat(S, cfg.epsilon)
    return (q_c_dot + cfg.K * q_e - c.M_vz * v_z - c.M_q * q + cfg.rho * switch) / c.M_de
