"""Inversion-based feedforward controllers driven by the known reference.

All controllers share the inverted-plant recursion structure

    u(t) = -u(t-1) + m_hat * acc2(r, t) + (1 + q^-1) F_hat(r(t), rdot(t)),

where acc2 is the ZOH-paired second difference (twice the physical
acceleration, which absorbs the factor 2 of the inertial term) and F_hat is
whatever friction model the controller carries: none (mass-acceleration),
viscous+Coulomb (friction compensator), or the full nonlinear model (ideal
oracle). The neural controllers replace the whole right-hand side by a trained
network over physics-guided features of the reference and their own previous
output.

Controllers are stateful sample-by-sample generators: bind() a reference
series, then step() once per sample. run() is the batch evaluator (the same
recursion over the full horizon).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mlp import Mlp, forward
from .plant import PlantParams, friction_force
from .signals import AffineScaler, sign0

# feature tags over a position series q (reference r online, measured y offline)
NNARX_INPUTS = ("r+1", "r", "r-1", "r-2", "u-1")
PGNN_INPUTS = ("acc", "u-1", "r", "r-1", "v", "v-1", "sign_v", "sign_v-1")
KNOWN_TAGS = frozenset(NNARX_INPUTS) | frozenset(PGNN_INPUTS)

# physics-guided branch reads these positions of the PGNN input vector,
# ordered (u(t-1), acc, v(t), v(t-1), sign v(t), sign v(t-1))
PGL_INDICES = (1, 0, 4, 5, 6, 7)


def validate_input_spec(tags) -> tuple:
    tags = tuple(tags)
    if len(set(tags)) != len(tags):
        raise ValueError("feature tags must be unique")
    unknown = [t for t in tags if t not in KNOWN_TAGS]
    if unknown:
        raise ValueError(f"unknown feature tags {unknown}")
    return tags


def feature_matrix(tags, q: np.ndarray, u: np.ndarray, ts: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Assemble (X, target, k) for rows k = 2 .. N-2 of a logged series.

    q is the position series the features are built from and u the applied
    input series (also the regression target). Boundary rows lacking k-2 or
    k+1 history are dropped rather than padded.
    """
    tags = validate_input_spec(tags)
    q = np.asarray(q, dtype=float)
    u = np.asarray(u, dtype=float)
    n = len(q)
    if n < 4:
        raise ValueError("series too short for feature assembly")
    k = np.arange(2, n - 1)
    v = (q[k + 1] - q[k - 1]) / (2.0 * ts)
    v1 = (q[k] - q[k - 2]) / (2.0 * ts)
    cols = {
        "r+1": q[k + 1],
        "r": q[k],
        "r-1": q[k - 1],
        "r-2": q[k - 2],
        "u-1": u[k - 1],
        "v": v,
        "v-1": v1,
        "sign_v": np.sign(v),
        "sign_v-1": np.sign(v1),
        "acc": (2.0 / (ts * ts)) * (q[k + 1] - 2.0 * q[k] + q[k - 1]),
    }
    x = np.column_stack([cols[t] for t in tags])
    return x, u[k], k


@dataclass(frozen=True)
class PhysicalEstimates:
    """Identified inverse-model parameters: mass [kg], viscous and Coulomb friction."""

    mass: float
    f_v: float
    f_c: float

    def validate(self) -> None:
        if self.mass <= 0.0:
            raise ValueError("estimated mass must be positive")


class FeedforwardController:
    """Base streaming controller; subclasses implement _output(t)."""

    name = "base"

    def __init__(self):
        self._rp = None
        self._ts = None
        self._t = 0
        self.u_prev = 0.0

    def bind(self, r: np.ndarray, ts: float) -> None:
        """Attach a reference series and reset to the at-rest initial state."""
        r = np.asarray(r, dtype=float)
        # pad two samples of pre-start history with r(0) and one preview sample
        self._rp = np.concatenate([[r[0], r[0]], r, [r[-1]]])
        self._ts = ts
        self._t = 0
        self.u_prev = 0.0
        self._bind_extra()

    def _bind_extra(self) -> None:
        pass

    # padded accessor: r(t + j) for j in [-2, 1]
    def _r(self, j: int) -> float:
        return self._rp[self._t + 2 + j]

    def _vel(self, j: int = 0) -> float:
        return (self._r(j + 1) - self._r(j - 1)) / (2.0 * self._ts)

    def _acc2(self) -> float:
        ts = self._ts
        return (2.0 / (ts * ts)) * (self._r(1) - 2.0 * self._r(0) + self._r(-1))

    def _output(self) -> float:
        raise NotImplementedError

    def step(self) -> float:
        u = self._output()
        self.u_prev = u
        self._t += 1
        return u

    def run(self, r: np.ndarray, ts: float) -> np.ndarray:
        """Batch evaluation: bind and stream the whole horizon."""
        self.bind(r, ts)
        return np.array([self.step() for _ in range(len(r))])


class ZeroFeedforward(FeedforwardController):
    name = "none"

    def _output(self) -> float:
        return 0.0


class MassAccelFeedforward(FeedforwardController):
    """u(t) = -u(t-1) + m_hat * acc2(t); compensates inertia only."""

    name = "mass_acc"

    def __init__(self, est: PhysicalEstimates):
        super().__init__()
        est.validate()
        self.est = est

    def _output(self) -> float:
        return -self.u_prev + self.est.mass * self._acc2()


class _InvertedModelFeedforward(FeedforwardController):
    """Shared (1 + q^-1) friction-term recursion; subclasses supply the friction model."""

    def _friction(self, r: float, v: float) -> float:
        raise NotImplementedError

    def _mass(self) -> float:
        raise NotImplementedError

    def _bind_extra(self) -> None:
        # at rest before the start: friction evaluated at (r(0), 0)
        self._f_prev = self._friction(self._rp[1], 0.0)

    def _output(self) -> float:
        f_now = self._friction(self._r(0), self._vel(0))
        u = -self.u_prev + self._mass() * self._acc2() + f_now + self._f_prev
        self._f_prev = f_now
        return u


class FrictionCompFeedforward(_InvertedModelFeedforward):
    """Mass-acceleration plus viscous and Coulomb friction compensation."""

    name = "friction_comp"

    def __init__(self, est: PhysicalEstimates):
        super().__init__()
        est.validate()
        self.est = est

    def _mass(self) -> float:
        return self.est.mass

    def _friction(self, r: float, v: float) -> float:
        return self.est.f_v * v + self.est.f_c * sign0(v)


class IdealFeedforward(_InvertedModelFeedforward):
    """Exact inverse of the simulated plant: full friction model and true mass."""

    name = "ideal"

    def __init__(self, params: PlantParams):
        super().__init__()
        params.validate()
        self.params = params

    def _mass(self) -> float:
        return self.params.mass

    def _friction(self, r: float, v: float) -> float:
        return friction_force(r, v, self.params.friction)


class NnarxFeedforward(FeedforwardController):
    """Black-box network over (r(t+1), r(t), r(t-1), r(t-2), u(t-1))."""

    name = "nnarx"

    def __init__(self, net: Mlp):
        super().__init__()
        if net.n_in != len(NNARX_INPUTS):
            raise ValueError(f"NNARX network must take {len(NNARX_INPUTS)} inputs, got {net.n_in}")
        self.net = net

    def _features(self) -> np.ndarray:
        return np.array([self._r(1), self._r(0), self._r(-1), self._r(-2), self.u_prev])

    def _output(self) -> float:
        z = self.net.in_scaler.normalize(self._features())
        return float(self.net.out_scaler.denormalize(forward(self.net, z)))


class PgnnFeedforward(NnarxFeedforward):
    """Physics-guided network over (acc, u(t-1), r, r(t-1), v, v(t-1), sign v, sign v(t-1)).

    The same streaming evaluation serves PGNN-I (no physics-guided branch) and
    PGNN-II (parallel linear branch inside the network).
    """

    name = "pgnn"

    def __init__(self, net: Mlp):
        FeedforwardController.__init__(self)
        if net.n_in != len(PGNN_INPUTS):
            raise ValueError(f"PGNN network must take {len(PGNN_INPUTS)} inputs, got {net.n_in}")
        self.net = net

    def _features(self) -> np.ndarray:
        v = self._vel(0)
        v1 = self._vel(-1)
        return np.array(
            [self._acc2(), self.u_prev, self._r(0), self._r(-1), v, v1, sign0(v), sign0(v1)]
        )


def ff_none() -> ZeroFeedforward:
    return ZeroFeedforward()


def ff_mass_acc(est: PhysicalEstimates) -> MassAccelFeedforward:
    return MassAccelFeedforward(est)


def ff_friction_comp(est: PhysicalEstimates) -> FrictionCompFeedforward:
    return FrictionCompFeedforward(est)


def ff_nnarx(net: Mlp) -> NnarxFeedforward:
    return NnarxFeedforward(net)


def ff_pgnn1(net: Mlp) -> PgnnFeedforward:
    if net.pgl_idx is not None:
        raise ValueError("PGNN-I must not carry a physics-guided branch")
    ctrl = PgnnFeedforward(net)
    ctrl.name = "pgnn1"
    return ctrl


def ff_pgnn2(net: Mlp) -> PgnnFeedforward:
    if net.pgl_idx is None:
        raise ValueError("PGNN-II requires the physics-guided branch")
    ctrl = PgnnFeedforward(net)
    ctrl.name = "pgnn2"
    return ctrl


def ideal_ff(profile, params: PlantParams) -> np.ndarray:
    """Feedforward force series that exactly inverts the simulated plant model."""
    return IdealFeedforward(params).run(profile.positions, params.sample_time)


def pgl_init_weights(
    est: PhysicalEstimates,
    in_scaler: AffineScaler,
    out_scaler: AffineScaler,
    u_prev_coeff: float = -1.0,
) -> tuple[np.ndarray, float]:
    """Physics-guided layer weights in normalized coordinates, plus output-bias correction.

    The physical linear map over the branch features
    (u(t-1), acc, v, v(t-1), sign v, sign v(t-1)) is
    (u_prev_coeff, m_hat, f_v, f_v, f_c, f_c); exact embedding of the friction
    compensator requires u_prev_coeff = -1 (a coefficient of 0 on u(t-1) is
    available for the literal published initialization). For normalized
    features x~ = (x - c) / s and output u~ = (u - c_u) / s_u the converted
    weights are w~_i = w_i s_i / s_u with bias correction
    (sum_i w_i c_i - c_u) / s_u folded into the output bias.
    """
    est.validate()
    w_phys = np.array([u_prev_coeff, est.mass, est.f_v, est.f_v, est.f_c, est.f_c])
    s_u = float(out_scaler.half[0])
    c_u = float(out_scaler.center[0])
    idx = list(PGL_INDICES)
    s_i = in_scaler.half[idx]
    c_i = in_scaler.center[idx]
    w_norm = w_phys * s_i / s_u
    bias_correction = (float(np.dot(w_phys, c_i)) - c_u) / s_u
    return w_norm, bias_correction


def make_pgnn2_net(
    hidden: int,
    activation: str,
    in_scaler: AffineScaler,
    out_scaler: AffineScaler,
    est: PhysicalEstimates,
    u_prev_coeff: float = -1.0,
) -> Mlp:
    """PGNN-II template: zero hidden-to-output weights, physically initialized branch.

    With the hidden path zeroed the network output is exactly the friction
    compensator, so training starts from the physical model and can only
    improve on it.
    """
    from .mlp import make_mlp

    w_pgl, bias = pgl_init_weights(est, in_scaler, out_scaler, u_prev_coeff)
    net = make_mlp(
        len(PGNN_INPUTS), hidden, activation, in_scaler, out_scaler,
        pgl_idx=PGL_INDICES, pgl_weights=w_pgl, kind="pgnn2",
    )
    net.biases[-1] = np.array([bias])
    return net
