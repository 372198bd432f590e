"""Closed-loop data generation with dithering, partitioning, and convex identification.

Identification runs the feedback loop alone (no feedforward) while a held
zero-mean force dither excites the plant, logs (t, r, y, u), and splits the
usable rows contiguously 70/15/15 in time order. The inverse-model parameters
(m, f_v, f_c) then follow from ordinary least squares on the telescoped
recursion

    u(t) + u(t-1) = m * acc2(y, t) + f_v (ydot(t) + ydot(t-1))
                  + f_c (sign ydot(t) + sign ydot(t-1)),

with velocities computed from the measured positions by central differences.
Neural regression sets are assembled from the same measured series; deployment
later swaps the reference in for the measured position, which is the defining
move of inversion-based feedforward.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .feedback import LtiFilter
from .feedforward import FeedforwardController, PhysicalEstimates, feature_matrix
from .plant import PlantParams, PlantState, step
from .trajgen import SetpointProfile

SPLIT_FRACTIONS = (0.70, 0.15, 0.15)
PARTITIONS = ("train", "validation", "test")


class SimulationDiverged(RuntimeError):
    """Raised when the closed loop leaves the sane operating envelope."""


class IdentificationError(RuntimeError):
    """Raised when the regression is rank-deficient (reference not persistently exciting)."""


@dataclass
class DitherConfig:
    """Held (zero-order) Gaussian force dither: std [N], redraw period [s]."""

    std: float = 80.0
    update_period: float = 0.01

    def validate(self, ts: float) -> None:
        if self.std < 0.0:
            raise ValueError("dither std must be non-negative")
        n = self.update_period / ts
        if abs(n - round(n)) > 1e-9 or round(n) < 1:
            raise ValueError("update period must be a positive integer multiple of the sample time")

    def hold_samples(self, ts: float) -> int:
        return int(round(self.update_period / ts))


@dataclass
class Dataset:
    """Time-indexed records of one identification run with a contiguous 70/15/15 split."""

    t: np.ndarray
    r: np.ndarray
    y: np.ndarray
    u: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def sample_time(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else float(self.meta.get("sample_time", 0.0))

    def usable_rows(self) -> np.ndarray:
        """Row indices k with full k-2 .. k+1 history available."""
        return np.arange(2, len(self.t) - 1)

    def partition_rows(self, name: str) -> np.ndarray:
        """Row indices (into the full arrays) of one partition of the usable rows."""
        usable = self.usable_rows()
        n = len(usable)
        n_train = int(SPLIT_FRACTIONS[0] * n)
        n_val = int(SPLIT_FRACTIONS[1] * n)
        if name == "train":
            return usable[:n_train]
        if name == "validation":
            return usable[n_train : n_train + n_val]
        if name == "test":
            return usable[n_train + n_val :]
        raise KeyError(f"unknown partition {name!r}")


def generate_dataset(
    plant: PlantParams,
    fb: LtiFilter,
    profile: SetpointProfile,
    dither: DitherConfig,
    seed: int,
    feedforward: FeedforwardController | None = None,
) -> Dataset:
    """Simulate the closed loop over the profile and log (t, r, y, u).

    The dither force is redrawn from N(0, std^2) every update period and held
    in between. u is the total applied plant input (feedback + optional
    feedforward + dither). Aborts if |y| exceeds 10x the stroke.
    """
    plant.validate()
    ts = plant.sample_time
    dither.validate(ts)
    hold = dither.hold_samples(ts)
    r = profile.positions
    n = len(r)
    stroke = max(profile.spec.displacement, 1e-3)
    rng = np.random.default_rng(seed)

    ctrl = fb.copy()
    ctrl.reset()
    if feedforward is not None:
        feedforward.bind(r, ts)

    y = np.zeros(n)
    u = np.zeros(n)
    state = PlantState()
    d = 0.0
    for k in range(n):
        if dither.std > 0.0 and k % hold == 0:
            d = rng.normal(0.0, dither.std)
        e = r[k] - state.y
        u_k = ctrl.step(e) + d
        if feedforward is not None:
            u_k += feedforward.step()
        y[k] = state.y
        u[k] = u_k
        state = step(state, u_k, plant)
        if abs(state.y) > 10.0 * stroke:
            raise SimulationDiverged(
                f"|y|={abs(state.y):.3g} m exceeded 10x stroke ({stroke:.3g} m) at sample {k}"
            )

    meta = {
        "seed": seed,
        "sample_time": ts,
        "dither": {"std": dither.std, "update_period": dither.update_period},
        "trajectory": {
            "displacement": profile.spec.displacement,
            "v_max": profile.spec.v_max,
            "a_max": profile.spec.a_max,
            "j_max": profile.spec.j_max,
            "cruise_fraction": profile.spec.cruise_fraction,
            "sample_time": profile.spec.sample_time,
        },
        "split": list(SPLIT_FRACTIONS),
    }
    return Dataset(t=np.arange(n) * ts, r=r.copy(), y=y, u=u, meta=meta)


def ls_identify(data: Dataset) -> PhysicalEstimates:
    """Ordinary least squares for (m, f_v, f_c) on the training partition."""
    rows = data.partition_rows("train")
    if len(rows) == 0:
        raise IdentificationError("empty training partition")
    ts = data.sample_time
    y, u = data.y, data.u
    k = rows
    target = u[k] + u[k - 1]
    acc2 = (2.0 / (ts * ts)) * (y[k + 1] - 2.0 * y[k] + y[k - 1])
    v = (y[k + 1] - y[k - 1]) / (2.0 * ts)
    v1 = (y[k] - y[k - 2]) / (2.0 * ts)
    x = np.column_stack([acc2, v + v1, np.sign(v) + np.sign(v1)])
    theta, _, rank, _ = np.linalg.lstsq(x, target, rcond=None)
    if rank < 3:
        raise IdentificationError(
            f"regressor matrix rank {rank} < 3: reference not persistently exciting"
        )
    est = PhysicalEstimates(mass=float(theta[0]), f_v=float(theta[1]), f_c=float(theta[2]))
    est.validate()
    return est


def build_regression(data: Dataset, tags) -> dict:
    """Per-partition (X, target) matrices with features built from measured y and u."""
    x_all, u_all, k_all = feature_matrix(tags, data.y, data.u, data.sample_time)
    offset = k_all[0]
    out = {}
    for name in PARTITIONS:
        rows = data.partition_rows(name) - offset
        if len(rows) == 0:
            raise IdentificationError(f"partition {name!r} empty after boundary drops")
        out[name] = (x_all[rows], u_all[rows])
    return out


def save_dataset(data: Dataset, csv_path) -> None:
    """Write k,t,r,y,u rows at 17 significant digits plus a metadata sidecar JSON."""
    csv_path = Path(csv_path)
    with open(csv_path, "w") as fh:
        fh.write("k,t,r,y,u\n")
        for k in range(len(data)):
            fh.write(
                f"{k},{data.t[k]:.17g},{data.r[k]:.17g},{data.y[k]:.17g},{data.u[k]:.17g}\n"
            )
    with open(csv_path.with_suffix(".meta.json"), "w") as fh:
        json.dump(data.meta, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_dataset(csv_path) -> Dataset:
    csv_path = Path(csv_path)
    raw = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    meta_path = csv_path.with_suffix(".meta.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return Dataset(t=raw[:, 1], r=raw[:, 2], y=raw[:, 3], u=raw[:, 4], meta=meta)
