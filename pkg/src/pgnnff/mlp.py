"""Small dense MLP with exact-Jacobian Levenberg-Marquardt training and multistart.

Networks are trained in normalized coordinates (inputs and target mapped onto
[-1, 1] by min-max scalers fitted on the training partition) with the quadratic
cost V(w) = (1/N) sum eps(t)^2, eps = u - u_hat. The optional physics-guided
branch adds a linear read-out of a designated subset of the (normalized) input
vector in parallel to the hidden layer:

    u_hat = W2 f(W1 x + b1) + b2 + w_pgl . x[pgl_idx]
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .signals import AffineScaler

MODEL_FORMAT_VERSION = "pgnnff-model-v1"

ACTIVATIONS = ("linear", "relu", "tansig")


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "linear":
        return z
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tansig":
        return 2.0 / (1.0 + np.exp(-2.0 * z)) - 1.0
    raise ValueError(f"unknown activation {kind!r}")


def _act_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    if kind == "linear":
        return np.ones_like(z)
    if kind == "relu":
        return (z > 0.0).astype(float)  # subgradient at exactly 0 taken as 0
    if kind == "tansig":
        return 1.0 - a * a
    raise ValueError(f"unknown activation {kind!r}")


@dataclass
class Mlp:
    """Layered perceptron: weights[i] (n_out, n_in), biases[i] (n_out,), one activation per layer.

    The final layer must be linear and scalar. pgl_idx/pgl_weights describe the
    physics-guided branch (identity transformation) over a subset of the input
    vector; only supported with exactly one hidden layer.
    """

    weights: list
    biases: list
    activations: list
    in_scaler: AffineScaler
    out_scaler: AffineScaler
    pgl_idx: tuple | None = None
    pgl_weights: np.ndarray | None = None
    kind: str = "mlp"

    def __post_init__(self):
        self.weights = [np.asarray(w, dtype=float) for w in self.weights]
        self.biases = [np.asarray(b, dtype=float) for b in self.biases]
        if len(self.weights) != len(self.biases) or len(self.weights) != len(self.activations):
            raise ValueError("weights, biases and activations must align")
        if self.activations[-1] != "linear":
            raise ValueError("output layer activation must be linear")
        for act in self.activations:
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
        for i in range(1, len(self.weights)):
            if self.weights[i].shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError("layer dimensions are inconsistent")
        if self.weights[-1].shape[0] != 1:
            raise ValueError("network output must be scalar")
        if self.pgl_idx is not None:
            if len(self.weights) != 2:
                raise ValueError("physics-guided branch requires exactly one hidden layer")
            self.pgl_weights = np.asarray(self.pgl_weights, dtype=float)
            if self.pgl_weights.shape != (len(self.pgl_idx),):
                raise ValueError("pgl_weights must match pgl_idx length")

    @property
    def n_in(self) -> int:
        return self.weights[0].shape[1]

    @property
    def layer_sizes(self) -> list:
        return [self.n_in] + [w.shape[0] for w in self.weights]

    @property
    def n_params(self) -> int:
        n = sum(w.size + b.size for w, b in zip(self.weights, self.biases))
        if self.pgl_idx is not None:
            n += len(self.pgl_idx)
        return n

    def copy(self) -> "Mlp":
        return Mlp(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activations=list(self.activations),
            in_scaler=self.in_scaler,
            out_scaler=self.out_scaler,
            pgl_idx=self.pgl_idx,
            pgl_weights=None if self.pgl_weights is None else self.pgl_weights.copy(),
            kind=self.kind,
        )


def make_mlp(
    n_in: int,
    hidden: int,
    activation: str,
    in_scaler: AffineScaler,
    out_scaler: AffineScaler,
    pgl_idx: tuple | None = None,
    pgl_weights=None,
    kind: str = "mlp",
) -> Mlp:
    """Zero-initialized network; hidden=0 yields a purely linear-in-weights model."""
    if hidden > 0:
        weights = [np.zeros((hidden, n_in)), np.zeros((1, hidden))]
        biases = [np.zeros(hidden), np.zeros(1)]
        acts = [activation, "linear"]
    else:
        weights = [np.zeros((1, n_in))]
        biases = [np.zeros(1)]
        acts = ["linear"]
    return Mlp(weights, biases, acts, in_scaler, out_scaler, pgl_idx, pgl_weights, kind)


def randomize_weights(net: Mlp, rng: np.random.Generator) -> None:
    """Random restart initialization: uniform [-0.5, 0.5] scaled by 1/sqrt(fan-in).

    Physics-guided branch weights are left untouched; they carry physical values.
    """
    for i, w in enumerate(net.weights):
        fan_in = w.shape[1]
        scale = 1.0 / math.sqrt(fan_in)
        net.weights[i] = (rng.uniform(-0.5, 0.5, size=w.shape)) * scale
        net.biases[i] = (rng.uniform(-0.5, 0.5, size=net.biases[i].shape)) * scale


def forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Normalized network output for normalized input batch x of shape (N, n_in) or (n_in,)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    a = x[None, :] if single else x
    if a.shape[1] != net.n_in:
        raise ValueError(f"input dimension {a.shape[1]} != network input {net.n_in}")
    x1 = a
    for w, b, act in zip(net.weights, net.biases, net.activations):
        a = _act(a @ w.T + b, act)
    out = a[:, 0]
    if net.pgl_idx is not None:
        out = out + x1[:, list(net.pgl_idx)] @ net.pgl_weights
    return out[0] if single else out


def predict_physical(net: Mlp, x_phys: np.ndarray) -> np.ndarray:
    """Physical-units prediction: normalize input, forward, denormalize output."""
    z = net.in_scaler.normalize(np.atleast_2d(np.asarray(x_phys, dtype=float)))
    out = forward(net, z)
    return net.out_scaler.denormalize(out)


def pack_params(net: Mlp) -> np.ndarray:
    parts = []
    for w, b in zip(net.weights, net.biases):
        parts.append(w.ravel())
        parts.append(b.ravel())
    if net.pgl_idx is not None:
        parts.append(net.pgl_weights.ravel())
    return np.concatenate(parts)


def unpack_params(net: Mlp, w: np.ndarray) -> None:
    pos = 0
    for i in range(len(net.weights)):
        n = net.weights[i].size
        net.weights[i] = w[pos : pos + n].reshape(net.weights[i].shape).copy()
        pos += n
        n = net.biases[i].size
        net.biases[i] = w[pos : pos + n].copy()
        pos += n
    if net.pgl_idx is not None:
        n = len(net.pgl_idx)
        net.pgl_weights = w[pos : pos + n].copy()
        pos += n
    if pos != w.size:
        raise ValueError("parameter vector size mismatch")


def residual_jacobian(net: Mlp, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Residuals eps = u - u_hat and Jacobian d eps / d w, both in normalized units.

    The Jacobian is assembled by reverse accumulation per sample and covers
    hidden weights, biases, and physics-guided weights jointly, in pack order.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    n = x.shape[0]
    if n == 0:
        raise ValueError("batch must be nonempty")
    cols = []
    if len(net.weights) == 1:
        out = x @ net.weights[0].T + net.biases[0]
        out = out[:, 0]
        cols.append(x)  # d u_hat / d W
        cols.append(np.ones((n, 1)))  # d u_hat / d b
    else:
        w1, w2 = net.weights
        b1, b2 = net.biases
        z1 = x @ w1.T + b1
        a1 = _act(z1, net.activations[0])
        out = (a1 @ w2.T + b2)[:, 0]
        delta = _act_grad(z1, a1, net.activations[0]) * w2[0]  # (N, h)
        cols.append((delta[:, :, None] * x[:, None, :]).reshape(n, -1))  # d/d W1
        cols.append(delta)  # d/d b1
        cols.append(a1)  # d/d W2
        cols.append(np.ones((n, 1)))  # d/d b2
    if net.pgl_idx is not None:
        xp = x[:, list(net.pgl_idx)]
        out = out + xp @ net.pgl_weights
        cols.append(xp)
    eps = u - out
    jac = -np.concatenate(cols, axis=1)
    return eps, jac


@dataclass
class TrainConfig:
    """Levenberg-Marquardt and multistart settings."""

    max_iterations: int = 200
    mu0: float = 1e-3
    mu_up: float = 10.0
    mu_down: float = 10.0
    mu_max: float = 1e10
    grad_tol: float = 1e-7
    cost_tol: float = 1e-12
    restarts: int = 50
    seed: int = 0
    constrain_mass_positive: bool = False
    pgl_mass_index: int = 1

    def validate(self) -> None:
        if self.max_iterations < 0 or self.restarts < 1:
            raise ValueError("max_iterations must be >= 0 and restarts >= 1")
        for name in ("mu0", "mu_up", "mu_down", "mu_max", "grad_tol", "cost_tol"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")
        if not (self.mu_up > 1.0 and self.mu_down > 1.0):
            raise ValueError("damping factors must satisfy up > 1 and down > 1")


@dataclass
class TrainReport:
    """Outcome of one training run; costs are physical MSE [N^2] of the retained weights."""

    cost_train: float
    cost_validation: float
    cost_test: float
    iterations: int
    accepted_steps: int
    cost_history: list
    stop_reason: str
    restart_index: int = 0


def _normalized_partitions(net: Mlp, data: dict) -> dict:
    out = {}
    for name, (x, u) in data.items():
        xn = net.in_scaler.normalize(np.asarray(x, dtype=float))
        un = net.out_scaler.normalize(np.asarray(u, dtype=float))
        out[name] = (xn, np.asarray(un, dtype=float).ravel())
    return out


def _cost(net: Mlp, xn: np.ndarray, un: np.ndarray) -> float:
    eps = un - forward(net, xn)
    return float(np.mean(eps * eps))


def train_lm(net: Mlp, data: dict, cfg: TrainConfig) -> TrainReport:
    """Damped Gauss-Newton minimization of the training cost, in place.

    Solves (J'J/N + mu I) delta = -J'eps/N; accepts a step iff the training
    cost decreases (mu /= down), otherwise rejects (mu *= up). Stops on
    gradient tolerance, relative cost tolerance, iteration budget, or damping
    overflow. The iterate with the lowest validation cost is retained
    (cross-validation without early-stopping ambiguity).
    """
    cfg.validate()
    parts = _normalized_partitions(net, data)
    if "train" not in parts:
        raise ValueError("data must contain a 'train' partition")
    x_tr, u_tr = parts["train"]
    x_va, u_va = parts.get("validation", parts["train"])

    scale2 = float(net.out_scaler.half[0] ** 2)  # normalized MSE -> N^2

    w = pack_params(net)
    eps, jac = residual_jacobian(net, x_tr, u_tr)
    n = len(eps)
    cost = float(np.mean(eps * eps))
    grad = jac.T @ eps / n
    hess = jac.T @ jac / n

    history = [cost]
    best_val = _cost(net, x_va, u_va)
    best_w = w.copy()
    mu = cfg.mu0
    accepted = 0
    iterations = 0
    stop = "max_iterations"
    eye = np.eye(len(w))

    while iterations < cfg.max_iterations:
        if np.max(np.abs(grad)) < cfg.grad_tol:
            stop = "gradient_tolerance"
            break
        iterations += 1
        try:
            delta = np.linalg.solve(hess + mu * eye, -grad)
            if not np.all(np.isfinite(delta)):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            mu *= cfg.mu_up
            if mu > cfg.mu_max:
                stop = "damping_overflow"
                break
            continue
        w_new = w + delta
        unpack_params(net, w_new)
        if cfg.constrain_mass_positive and net.pgl_idx is not None:
            net.pgl_weights[cfg.pgl_mass_index] = max(net.pgl_weights[cfg.pgl_mass_index], 0.0)
            w_new = pack_params(net)
        eps_new = u_tr - forward(net, x_tr)
        cost_new = float(np.mean(eps_new * eps_new))
        if math.isfinite(cost_new) and cost_new < cost:
            improvement = cost - cost_new
            w = w_new
            accepted += 1
            eps, jac = residual_jacobian(net, x_tr, u_tr)
            cost = cost_new
            grad = jac.T @ eps / n
            hess = jac.T @ jac / n
            history.append(cost)
            mu = max(mu / cfg.mu_down, 1e-20)
            val = _cost(net, x_va, u_va)
            if val < best_val:
                best_val = val
                best_w = w.copy()
            if improvement <= cfg.cost_tol * max(cost, 1e-300):
                stop = "cost_tolerance"
                break
        else:
            mu *= cfg.mu_up
            if mu > cfg.mu_max:
                stop = "damping_overflow"
                break

    unpack_params(net, best_w)
    rep = TrainReport(
        cost_train=_cost(net, x_tr, u_tr) * scale2,
        cost_validation=best_val * scale2,
        cost_test=(_cost(net, *parts["test"]) * scale2) if "test" in parts else float("nan"),
        iterations=iterations,
        accepted_steps=accepted,
        cost_history=[c * scale2 for c in history],
        stop_reason=stop,
    )
    return rep


def multistart(template: Mlp, data: dict, cfg: TrainConfig, jobs: int = 1) -> tuple[Mlp, list]:
    """Train M randomly initialized copies; keep the lowest-validation-cost network.

    Restart seeds are spawned deterministically from cfg.seed, so the result is
    independent of scheduling. Ties break by training cost, then restart index.
    """
    cfg.validate()
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)

    def run_one(i: int) -> tuple[Mlp, TrainReport]:
        net = template.copy()
        randomize_weights(net, np.random.default_rng(seeds[i]))
        rep = train_lm(net, data, cfg)
        rep.restart_index = i
        return net, rep

    if jobs > 1 and cfg.restarts > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_one, range(cfg.restarts)))
    else:
        results = [run_one(i) for i in range(cfg.restarts)]

    reports = [rep for _, rep in results]
    order = sorted(
        range(cfg.restarts),
        key=lambda i: (reports[i].cost_validation, reports[i].cost_train, i),
    )
    best = order[0]
    return results[best][0], reports


def to_json(net: Mlp) -> str:
    payload = {
        "format": MODEL_FORMAT_VERSION,
        "kind": net.kind,
        "layer_sizes": net.layer_sizes,
        "activations": list(net.activations),
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "pgl": None
        if net.pgl_idx is None
        else {"indices": list(net.pgl_idx), "weights": net.pgl_weights.tolist()},
        "scalers": {
            "input": {"center": net.in_scaler.center.tolist(), "half": net.in_scaler.half.tolist()},
            "output": {"center": net.out_scaler.center.tolist(), "half": net.out_scaler.half.tolist()},
        },
    }
    return json.dumps(payload, sort_keys=True, indent=2)


def from_json(text: str) -> Mlp:
    payload = json.loads(text)
    if payload.get("format") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format {payload.get('format')!r}")
    pgl = payload.get("pgl")
    return Mlp(
        weights=[np.array(w) for w in payload["weights"]],
        biases=[np.array(b) for b in payload["biases"]],
        activations=list(payload["activations"]),
        in_scaler=AffineScaler(
            np.array(payload["scalers"]["input"]["center"]),
            np.array(payload["scalers"]["input"]["half"]),
        ),
        out_scaler=AffineScaler(
            np.array(payload["scalers"]["output"]["center"]),
            np.array(payload["scalers"]["output"]["half"]),
        ),
        pgl_idx=None if pgl is None else tuple(pgl["indices"]),
        pgl_weights=None if pgl is None else np.array(pgl["weights"]),
        kind=payload.get("kind", "mlp"),
    )
