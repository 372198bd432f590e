"""Linear-motor mechanics: a moving mass driven by input force minus nonlinear friction.

The continuous dynamics m*y'' = u - F_fric are discretized exactly under the
assumption that the net force is constant between samples (zero-order hold),
which at Ts = 1e-4 s is accurate to well below the tracking error scales of
interest. Friction combines viscous, Coulomb, Stribeck and a position-dependent
sinusoidal component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .signals import sign0


@dataclass(frozen=True)
class FrictionParams:
    """Static friction model coefficients.

    f_v viscous [N/(m/s)], f_c Coulomb [N], f_s static/Stribeck peak [N],
    v_s Stribeck velocity [m/s], c_1 sinusoidal amplitude [N],
    omega spatial frequency of the sinusoidal term [rad/m].
    """

    f_v: float = 41.22
    f_c: float = 8.72
    f_s: float = 14.63
    v_s: float = 1.23e-3
    c_1: float = -1.44
    omega: float = 2.21

    def validate(self) -> None:
        if self.f_v < 0.0 or self.f_c < 0.0:
            raise ValueError("f_v and f_c must be non-negative")
        if not self.f_s >= self.f_c >= abs(self.c_1):
            raise ValueError("expected f_s >= f_c >= |c_1|")
        if self.v_s <= 0.0:
            raise ValueError("v_s must be positive")


@dataclass(frozen=True)
class RippleParams:
    """Optional sinusoidal force ripple standing in for unmodeled electromagnetics."""

    amplitude: float = 0.0
    spatial_frequency: float = 0.0
    phase: float = 0.0


@dataclass(frozen=True)
class PlantParams:
    """Moving mass [kg], friction model, optional ripple, and sample time [s]."""

    mass: float = 19.96
    friction: FrictionParams = field(default_factory=FrictionParams)
    ripple: RippleParams | None = None
    sample_time: float = 1e-4

    def validate(self) -> None:
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        if self.sample_time <= 0.0:
            raise ValueError("sample_time must be positive")
        self.friction.validate()


@dataclass(frozen=True)
class PlantState:
    """Position y [m] and velocity v [m/s]."""

    y: float = 0.0
    v: float = 0.0


def friction_force(y: float, v: float, p: FrictionParams) -> float:
    """Friction force at position y and velocity v, with sign(0) = 0."""
    s = sign0(v)
    return (
        p.f_v * v
        + p.f_c * s
        + (p.f_s - p.f_c) * s * math.exp(-((v / p.v_s) ** 2))
        + p.c_1 * math.sin(p.omega * y)
    )


def ripple_force(y: float, p: PlantParams) -> float:
    if p.ripple is None or p.ripple.amplitude == 0.0:
        return 0.0
    return p.ripple.amplitude * math.sin(p.ripple.spatial_frequency * y + p.ripple.phase)


def step(state: PlantState, u: float, p: PlantParams) -> PlantState:
    """Advance one sample with the net force held constant over the step.

    Friction and ripple are evaluated at the pre-step state, then
    y+ = y + Ts v + Ts^2 F / (2m), v+ = v + Ts F / m (exact ZOH response).
    """
    f_net = u - friction_force(state.y, state.v, p.friction) - ripple_force(state.y, p)
    ts = p.sample_time
    return PlantState(
        y=state.y + ts * state.v + ts * ts * f_net / (2.0 * p.mass),
        v=state.v + ts * f_net / p.mass,
    )


def transfer_form_check(u_series, p: PlantParams, y0: float = 0.0) -> np.ndarray:
    """Evaluate the position response via the second-order difference equation.

    y(k+1) = 2 y(k) - y(k-1) + (Ts^2 / 2m) (F(k) + F(k-1)) with F = u - friction,
    friction evaluated from the recursion's own state. Starts from rest at y0.
    Exists purely as a cross-validation oracle for step(); both paths must agree
    to ~1e-10 m.
    """
    u_series = np.asarray(u_series, dtype=float)
    n = len(u_series)
    ts = p.sample_time
    c = ts * ts / (2.0 * p.mass)
    y = np.empty(n + 1)
    y[0] = y0
    v = 0.0
    f_prev = 0.0  # at rest before the first sample: u(-1) - F_fric(-1) = 0
    for k in range(n):
        f_k = u_series[k] - friction_force(y[k], v, p.friction) - ripple_force(y[k], p)
        y_prev = y[k - 1] if k >= 1 else y0
        y[k + 1] = 2.0 * y[k] - y_prev + c * (f_k + f_prev)
        v = v + ts * f_k / p.mass
        f_prev = f_k
    return y[:n]
