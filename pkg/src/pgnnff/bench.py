"""Tracking experiments, error metrics, and benchmark report tables."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .feedback import LtiFilter
from .feedforward import PGNN_INPUTS, FeedforwardController, PhysicalEstimates, feature_matrix
from .ident import Dataset, PARTITIONS, SimulationDiverged
from .plant import PlantParams, PlantState, step
from .trajgen import SetpointProfile

# canonical row order for all tables
CONTROLLER_ORDER = ("none", "mass_acc", "friction_comp", "nnarx", "pgnn1", "pgnn2", "ideal")
MSE_TABLE_COLUMNS = ("controller", "neurons", "activation", "mse_train", "mse_validation", "mse_test")
MAE_TABLE_COLUMNS = ("controller", "mae_nominal", "mae_fast", "mae_slow")
TRACE_COLUMNS = ("k", "t", "r", "y", "e", "u_ff", "u_fb")


def mse(predictions, targets) -> float:
    """Mean squared prediction error (1/N) sum (u - u_hat)^2."""
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.shape != targets.shape or predictions.size == 0:
        raise ValueError("series must be nonempty and of equal length")
    d = targets - predictions
    return float(np.mean(d * d))


def mae(errors) -> float:
    """Mean absolute error."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ValueError("error series must be nonempty")
    return float(np.mean(np.abs(errors)))


@dataclass
class ExperimentResult:
    """One closed-loop tracking run: MAE plus full aligned traces."""

    controller: str
    trajectory: str
    mae: float
    traces: dict = field(default_factory=dict)


def run_tracking(
    controller: FeedforwardController,
    profile: SetpointProfile,
    plant: PlantParams,
    fb: LtiFilter,
    trajectory_name: str = "nominal",
) -> ExperimentResult:
    """Simulate one cycle of the profile with feedback + feedforward, no dither.

    Per sample: e = r - y, u_fb from the feedback filter, u_ff from the
    controller, plant stepped with their sum. Starts from rest with zeroed
    controller states.
    """
    plant.validate()
    ts = plant.sample_time
    r = profile.positions
    n = len(r)
    stroke = max(profile.spec.displacement, 1e-3)

    loop = fb.copy()
    loop.reset()
    controller.bind(r, ts)

    y = np.zeros(n)
    e = np.zeros(n)
    u_ff = np.zeros(n)
    u_fb = np.zeros(n)
    state = PlantState()
    for k in range(n):
        e_k = r[k] - state.y
        ufb_k = loop.step(e_k)
        uff_k = controller.step()
        y[k] = state.y
        e[k] = e_k
        u_fb[k] = ufb_k
        u_ff[k] = uff_k
        state = step(state, ufb_k + uff_k, plant)
        if abs(state.y) > 10.0 * stroke:
            raise SimulationDiverged(
                f"controller {controller.name!r}: |y| exceeded 10x stroke at sample {k}"
            )

    traces = {"t": np.arange(n) * ts, "r": r.copy(), "y": y, "e": e, "u_ff": u_ff, "u_fb": u_fb}
    return ExperimentResult(
        controller=controller.name, trajectory=trajectory_name, mae=mae(e), traces=traces
    )


def benchmark_prediction_mse(data: Dataset, est: PhysicalEstimates | None, kind: str) -> dict:
    """Per-partition one-step prediction MSE of the non-neural benchmark models.

    Predictions are built from measured (y, u) exactly like the neural
    regression sets: 'none' predicts zero force, 'mass_acc' the inertial term,
    'friction_comp' adds the viscous+Coulomb telescoped friction estimate.
    """
    x_all, u_all, k_all = feature_matrix(PGNN_INPUTS, data.y, data.u, data.sample_time)
    acc, u_prev = x_all[:, 0], x_all[:, 1]
    v, v1, sv, sv1 = x_all[:, 4], x_all[:, 5], x_all[:, 6], x_all[:, 7]
    if kind == "none":
        pred = np.zeros_like(u_all)
    elif kind == "mass_acc":
        pred = -u_prev + est.mass * acc
    elif kind == "friction_comp":
        pred = -u_prev + est.mass * acc + est.f_v * (v + v1) + est.f_c * (sv + sv1)
    else:
        raise ValueError(f"unknown benchmark predictor {kind!r}")
    offset = k_all[0]
    out = {}
    for name in PARTITIONS:
        rows = data.partition_rows(name) - offset
        out[name] = mse(pred[rows], u_all[rows])
    return out


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_markdown(path: Path, columns, rows, flag_columns=(), skip_flag_rows=()) -> None:
    """Aligned markdown table; best/second-best numeric cells per flagged column marked."""
    marks = {}
    for col in flag_columns:
        ci = columns.index(col)
        vals = [
            (i, row[ci])
            for i, row in enumerate(rows)
            if isinstance(row[ci], float) and np.isfinite(row[ci]) and row[0] not in skip_flag_rows
        ]
        vals.sort(key=lambda iv: iv[1])
        if vals:
            marks[(vals[0][0], ci)] = " (best)"
        if len(vals) > 1:
            marks[(vals[1][0], ci)] = " (2nd)"
    cells = [[_fmt(v) + marks.get((i, j), "") for j, v in enumerate(row)] for i, row in enumerate(rows)]
    widths = [max(len(columns[j]), *(len(c[j]) for c in cells)) if cells else len(columns[j]) for j in range(len(columns))]
    with open(path, "w") as fh:
        fh.write("| " + " | ".join(c.ljust(w) for c, w in zip(columns, widths)) + " |\n")
        fh.write("|" + "|".join("-" * (w + 2) for w in widths) + "|\n")
        for row in cells:
            fh.write("| " + " | ".join(c.ljust(w) for c, w in zip(row, widths)) + " |\n")


def write_trace_csv(result: ExperimentResult, path) -> None:
    tr = result.traces
    with open(path, "w") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for k in range(len(tr["t"])):
            fh.write(
                f"{k},{tr['t'][k]:.17g},{tr['r'][k]:.17g},{tr['y'][k]:.17g},"
                f"{tr['e'][k]:.17g},{tr['u_ff'][k]:.17g},{tr['u_fb'][k]:.17g}\n"
            )


def report(mse_rows: list, mae_results: list, out_dir) -> dict:
    """Emit the training-MSE and tracking-MAE comparison tables as CSV + markdown.

    mse_rows: (controller, neurons, activation, mse_train, mse_validation, mse_test)
    mae_results: ExperimentResult list over the evaluation trajectories.
    Rows are emitted in canonical controller order regardless of input order;
    the oracle rows ('none', 'ideal') are excluded from best/second flagging.
    """
    if not mse_rows and not mae_results:
        raise ValueError("nothing to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def order_key(name: str) -> tuple:
        return (CONTROLLER_ORDER.index(name) if name in CONTROLLER_ORDER else len(CONTROLLER_ORDER), name)

    mse_rows = sorted(mse_rows, key=lambda row: order_key(row[0]))
    _write_csv(out_dir / "mse_table.csv", MSE_TABLE_COLUMNS, mse_rows)
    _write_markdown(
        out_dir / "mse_table.md", MSE_TABLE_COLUMNS, mse_rows,
        flag_columns=("mse_test",), skip_flag_rows=("none", "ideal"),
    )

    by_controller: dict = {}
    for res in mae_results:
        by_controller.setdefault(res.controller, {})[res.trajectory] = res.mae
    mae_rows = [
        (name, *(by_controller[name].get(traj, float("nan")) for traj in ("nominal", "fast", "slow")))
        for name in sorted(by_controller, key=order_key)
    ]
    _write_csv(out_dir / "mae_table.csv", MAE_TABLE_COLUMNS, mae_rows)
    _write_markdown(
        out_dir / "mae_table.md", MAE_TABLE_COLUMNS, mae_rows,
        flag_columns=("mae_nominal", "mae_fast", "mae_slow"), skip_flag_rows=("none", "ideal"),
    )
    return {"mse_rows": mse_rows, "mae_rows": mae_rows}
