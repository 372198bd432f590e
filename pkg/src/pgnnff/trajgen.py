"""Jerk-limited third-order point-to-point trajectory generation.

Profiles are classic symmetric 7-segment S-curves (jerk in {-j_max, 0, +j_max})
evaluated analytically at the sample instants, so the emitted positions respect
the velocity/acceleration/jerk limits to machine precision. Endpoint dwell is
padded so that cruise samples make up a requested fraction of the whole motion
cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# segment labels
DWELL, ACCEL, CRUISE, DECEL = 0, 1, 2, 3
LABEL_NAMES = {DWELL: "dwell", ACCEL: "accel", CRUISE: "cruise", DECEL: "decel"}


class InfeasibleTrajectory(ValueError):
    """Raised when a spec cannot be realized with the requested limits."""


@dataclass(frozen=True)
class TrajectorySpec:
    """Kinematic description of one point-to-point move.

    displacement [m], v_max [m/s], a_max [m/s^2], j_max [m/s^3],
    cruise_fraction in (0, 1) of the full cycle spent at constant velocity,
    sample_time [s].
    """

    displacement: float
    v_max: float
    a_max: float
    j_max: float
    cruise_fraction: float = 0.5
    sample_time: float = 1e-4

    def validate(self) -> None:
        if self.displacement < 0.0:
            raise InfeasibleTrajectory("displacement must be >= 0")
        for name in ("v_max", "a_max", "j_max", "sample_time"):
            if getattr(self, name) <= 0.0:
                raise InfeasibleTrajectory(f"{name} must be strictly positive")
        if not 0.0 < self.cruise_fraction < 1.0:
            raise InfeasibleTrajectory("cruise_fraction must lie in (0, 1)")


@dataclass
class SetpointProfile:
    """Sampled reference positions with per-sample segment labels.

    positions[k] is the setpoint at t = k * sample_time. labels[k] is one of
    DWELL/ACCEL/CRUISE/DECEL. segments holds the (duration, jerk) table of a
    single planned move (None for concatenated profiles).
    """

    positions: np.ndarray
    labels: np.ndarray
    spec: TrajectorySpec
    segments: list | None = None

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def sample_time(self) -> float:
        return self.spec.sample_time

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.positions)) * self.spec.sample_time


def _ramp_times(v: float, a: float, j: float) -> tuple[float, float]:
    """Durations (t_jerk, t_const_accel) of one 0 -> v acceleration ramp."""
    if v * j >= a * a:
        tj = a / j
    else:
        tj = math.sqrt(v / j)
    ta = max(v / (j * tj) - tj, 0.0)
    return tj, ta


def plan_motion(spec: TrajectorySpec) -> SetpointProfile:
    """Plan a single rest-to-rest move of `displacement` with trailing/leading dwell.

    The move itself is a symmetric 7-segment jerk-limited profile that reaches
    v_max during cruise. Dwell is split evenly before and after the move so
    that cruise samples account for cruise_fraction of the cycle duration.
    """
    spec.validate()
    ts = spec.sample_time

    if spec.displacement == 0.0:
        return SetpointProfile(
            positions=np.zeros(1), labels=np.zeros(1, dtype=np.int8), spec=spec, segments=[]
        )

    tj, ta = _ramp_times(spec.v_max, spec.a_max, spec.j_max)
    d_ramp = 0.5 * spec.v_max * (2.0 * tj + ta)
    if 2.0 * d_ramp >= spec.displacement:
        raise InfeasibleTrajectory(
            f"v_max={spec.v_max} unreachable before midpoint: ramps need "
            f"{2.0 * d_ramp:.6g} m of the {spec.displacement:.6g} m stroke"
        )
    t_cruise = (spec.displacement - 2.0 * d_ramp) / spec.v_max
    t_move = 2.0 * (2.0 * tj + ta) + t_cruise

    t_cycle = t_cruise / spec.cruise_fraction
    t_dwell = t_cycle - t_move
    if t_dwell < 2.0 * ts:
        raise InfeasibleTrajectory(
            f"cruise_fraction={spec.cruise_fraction} unattainable: move cruises "
            f"{t_cruise / t_move:.3f} of its own duration"
        )

    j = spec.j_max
    segments = [(tj, j), (ta, 0.0), (tj, -j), (t_cruise, 0.0), (tj, -j), (ta, 0.0), (tj, j)]

    # cumulative state at each segment start, for analytic evaluation
    starts = []
    t0 = p = v = a = 0.0
    for dur, jerk in segments:
        starts.append((t0, p, v, a, jerk))
        p += v * dur + 0.5 * a * dur * dur + jerk * dur**3 / 6.0
        v += a * dur + 0.5 * jerk * dur * dur
        a += jerk * dur
        t0 += dur

    def move_pos(tau: float) -> float:
        if tau <= 0.0:
            return 0.0
        if tau >= t_move:
            return spec.displacement
        idx = 0
        for i in range(len(starts) - 1, -1, -1):
            if tau >= starts[i][0]:
                idx = i
                break
        s0, p0, v0, a0, jerk = starts[idx]
        dt = tau - s0
        return p0 + v0 * dt + 0.5 * a0 * dt * dt + jerk * dt**3 / 6.0

    # symmetric dwell split keeps the sampled profile an exact mirror about
    # displacement/2 whenever the move duration is grid-aligned
    n_lead = round(0.5 * t_dwell / ts)
    n_move = math.ceil(t_move / ts - 1e-9)
    n_total = 2 * n_lead + n_move + 1
    t_start = n_lead * ts
    t_accel_end = 2.0 * tj + ta
    t_cruise_end = t_accel_end + t_cruise

    positions = np.empty(n_total)
    labels = np.empty(n_total, dtype=np.int8)
    for k in range(n_total):
        tau = k * ts - t_start
        positions[k] = move_pos(tau)
        if tau < 0.0 or tau >= t_move:
            labels[k] = DWELL
        elif tau < t_accel_end:
            labels[k] = ACCEL
        elif tau < t_cruise_end:
            labels[k] = CRUISE
        else:
            labels[k] = DECEL

    return SetpointProfile(positions=positions, labels=labels, spec=spec, segments=segments)


def back_and_forth(profile: SetpointProfile, cycles: int) -> SetpointProfile:
    """Concatenate forward move, dwell, mirrored return move, dwell, `cycles` times.

    The return leg is the vertical mirror displacement - positions, which keeps
    segment labels valid (its accelerating phase is still labelled ACCEL) and
    makes positions continuous at every join.
    """
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    fwd = profile.positions
    ret = profile.spec.displacement - fwd
    pos = np.tile(np.concatenate([fwd, ret]), cycles)
    lab = np.tile(np.concatenate([profile.labels, profile.labels]), cycles)
    return SetpointProfile(positions=pos, labels=lab, spec=profile.spec, segments=None)


def scaled_spec(base: TrajectorySpec, velocity_scale: float, accel_scale: float) -> TrajectorySpec:
    """Scale v_max and a_max, keeping displacement, jerk limit and sampling unchanged."""
    if velocity_scale <= 0.0 or accel_scale <= 0.0:
        raise ValueError("scales must be positive")
    return replace(base, v_max=base.v_max * velocity_scale, a_max=base.a_max * accel_scale)


def export_csv(profile: SetpointProfile, path) -> None:
    """Write the profile as CSV with columns (k, t, r) at 17 significant digits."""
    ts = profile.sample_time
    with open(path, "w") as fh:
        fh.write("k,t,r\n")
        for k, r in enumerate(profile.positions):
            fh.write(f"{k},{k * ts:.17g},{r:.17g}\n")
