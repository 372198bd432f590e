"""Discrete reference operators and min-max normalization shared by all controllers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sign0(x: float) -> float:
    """Sign function with sign0(0) = 0, the convention used throughout the friction model."""
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def central_velocity(r, k: int, ts: float) -> float:
    """Central-difference velocity (r[k+1] - r[k-1]) / (2 Ts).

    Exact for signals that are linear in time, which makes it the natural
    pairing for the zero-order-hold position recursion.
    """
    if k < 1 or k > len(r) - 2:
        raise IndexError(f"central_velocity needs k-1 and k+1 in range, got k={k} for n={len(r)}")
    return (r[k + 1] - r[k - 1]) / (2.0 * ts)


def zoh_accel(r, k: int, ts: float) -> float:
    """ZOH-paired second difference (2 / Ts^2) * (r[k+1] - 2 r[k] + r[k-1]).

    Note the factor 2: this operator is defined to telescope against the
    (1 + q^-1) output filter of the inverted plant recursion, so on a
    constant-acceleration signal it returns TWICE the physical acceleration.
    """
    if k < 1 or k > len(r) - 2:
        raise IndexError(f"zoh_accel needs k-1 and k+1 in range, got k={k} for n={len(r)}")
    return (2.0 / (ts * ts)) * (r[k + 1] - 2.0 * r[k] + r[k - 1])


@dataclass
class AffineScaler:
    """Per-channel affine map between physical units and the normalized domain [-1, 1].

    normalize(x) = (x - center) / half ; denormalize is the exact inverse.
    Fitted from training-set extremes only.
    """

    center: np.ndarray
    half: np.ndarray

    def __post_init__(self):
        self.center = np.atleast_1d(np.asarray(self.center, dtype=float))
        self.half = np.atleast_1d(np.asarray(self.half, dtype=float))
        if self.center.shape != self.half.shape:
            raise ValueError("center and half must have identical shapes")
        if np.any(self.half <= 0.0):
            raise ValueError("half-ranges must be strictly positive")

    @property
    def n_channels(self) -> int:
        return self.center.size

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.center) / self.half

    def denormalize(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.half + self.center

    @staticmethod
    def identity(n_channels: int) -> "AffineScaler":
        return AffineScaler(np.zeros(n_channels), np.ones(n_channels))


def fit_scaler(columns: np.ndarray) -> AffineScaler:
    """Fit a min-max scaler mapping each column of a training matrix onto [-1, 1].

    Rejects constant columns (zero spread), which would make the map singular.
    """
    cols = np.asarray(columns, dtype=float)
    if cols.ndim == 1:
        cols = cols[:, None]
    lo = cols.min(axis=0)
    hi = cols.max(axis=0)
    if np.any(hi - lo <= 0.0):
        bad = np.nonzero(hi - lo <= 0.0)[0]
        raise ValueError(f"constant column(s) {bad.tolist()}: cannot normalize zero spread")
    return AffineScaler(center=(hi + lo) / 2.0, half=(hi - lo) / 2.0)
