"""End-to-end pipeline stages: generate -> identify -> train -> evaluate -> report.

Every stage is reproducible from (config, seed): outputs carry no timestamps
and all randomness flows from deterministic sub-seeds, so re-running a stage
overwrites its outputs with byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import asdict, replace
from pathlib import Path

from . import bench, feedforward, ident, mlp, trajgen
from .config import RunConfig
from .feedback import discretize_cfb
from .feedforward import (
    NNARX_INPUTS,
    PGNN_INPUTS,
    PhysicalEstimates,
    ff_friction_comp,
    ff_mass_acc,
    ff_none,
    ff_nnarx,
    ff_pgnn1,
    ff_pgnn2,
    make_pgnn2_net,
)
from .ident import Dataset, build_regression, generate_dataset, load_dataset, ls_identify, save_dataset
from .mlp import make_mlp, multistart
from .signals import fit_scaler
from .trajgen import back_and_forth, plan_motion, scaled_spec

EVAL_TRAJECTORIES = ("nominal", "fast", "slow")


def ident_profile(cfg: RunConfig) -> trajgen.SetpointProfile:
    return back_and_forth(plan_motion(cfg.trajectory), cfg.ident_cycles)


def eval_profiles(cfg: RunConfig) -> dict:
    specs = {
        "nominal": cfg.trajectory,
        "fast": scaled_spec(cfg.trajectory, cfg.fast_scale, cfg.fast_scale),
        "slow": scaled_spec(cfg.trajectory, cfg.slow_scale, cfg.slow_scale),
    }
    return {name: back_and_forth(plan_motion(spec), cfg.eval_cycles) for name, spec in specs.items()}


def echo_config(cfg: RunConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "resolved_config.json").write_text(cfg.to_json() + "\n")


def run_generate(cfg: RunConfig, out_dir) -> Dataset:
    cfg.validate()
    out_dir = Path(out_dir)
    echo_config(cfg, out_dir)
    fb = discretize_cfb(cfg.plant.sample_time, cfg.cfb_gain)
    data = generate_dataset(
        cfg.plant, fb, ident_profile(cfg), cfg.dither, cfg.derived_seed("dataset")
    )
    save_dataset(data, out_dir / "dataset.csv")
    return data


def run_identify(cfg: RunConfig, data: Dataset, out_dir) -> PhysicalEstimates:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    est = ls_identify(data)
    payload = {"mass": est.mass, "f_v": est.f_v, "f_c": est.f_c}
    (out_dir / "estimates.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return est


def train_controller(cfg: RunConfig, data: Dataset, spec, est: PhysicalEstimates | None, jobs: int = 1):
    """Fit one roster entry; returns (net, reports). PGNN-II needs the identified estimates."""
    tags = NNARX_INPUTS if spec.kind == "nnarx" else PGNN_INPUTS
    parts = build_regression(data, tags)
    x_tr, u_tr = parts["train"]
    in_scaler = fit_scaler(x_tr)
    out_scaler = fit_scaler(u_tr)
    if spec.kind == "pgnn2":
        if est is None:
            raise ValueError("PGNN-II initialization requires identified physical estimates")
        template = make_pgnn2_net(spec.neurons, spec.activation, in_scaler, out_scaler, est)
    else:
        template = make_mlp(len(tags), spec.neurons, spec.activation, in_scaler, out_scaler, kind=spec.kind)
    train_cfg = replace(
        cfg.lm, restarts=spec.restarts, seed=cfg.derived_seed(f"train-{spec.kind}")
    )
    net, reports = multistart(template, parts, train_cfg, jobs=jobs)
    net.kind = spec.kind
    return net, reports


class TrainOutcome:
    """Selected network plus the reports of every restart."""

    def __init__(self, net, reports, chosen: int):
        self.net = net
        self.reports = reports
        self.chosen = chosen

    @property
    def selected_report(self):
        return self.reports[self.chosen]


def run_train(cfg: RunConfig, data: Dataset, out_dir, jobs: int = 1, kinds=None, est=None) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trained = {}
    for spec in cfg.controllers:
        if kinds is not None and spec.kind not in kinds:
            continue
        net, reports = train_controller(cfg, data, spec, est, jobs=jobs)
        chosen = min(
            range(len(reports)),
            key=lambda i: (reports[i].cost_validation, reports[i].cost_train, i),
        )
        (out_dir / f"model_{spec.kind}.json").write_text(mlp.to_json(net) + "\n")
        report_payload = {
            "controller": spec.kind,
            "neurons": spec.neurons,
            "activation": spec.activation,
            "restarts": spec.restarts,
            "chosen_restart": chosen,
            "selected": asdict(reports[chosen]),
            "all_validation_costs": [r.cost_validation for r in reports],
        }
        (out_dir / f"train_report_{spec.kind}.json").write_text(
            json.dumps(report_payload, sort_keys=True, indent=2) + "\n"
        )
        trained[spec.kind] = TrainOutcome(net, reports, chosen)
    return trained


def build_controller_roster(cfg: RunConfig, est: PhysicalEstimates, models: dict) -> list:
    """All evaluation controllers in canonical order, including the oracle rows."""
    roster = [
        ff_none(),
        ff_mass_acc(est),
        ff_friction_comp(est),
    ]
    factory = {"nnarx": ff_nnarx, "pgnn1": ff_pgnn1, "pgnn2": ff_pgnn2}
    for kind in ("nnarx", "pgnn1", "pgnn2"):
        if kind in models:
            roster.append(factory[kind](models[kind]))
    roster.append(feedforward.IdealFeedforward(cfg.plant))
    return roster


def run_evaluate(cfg: RunConfig, data: Dataset, est: PhysicalEstimates, models: dict,
                 out_dir, train_reports: dict | None = None) -> dict:
    """Tracking MAE on the three references plus the training-MSE table."""
    out_dir = Path(out_dir)
    traces_dir = out_dir / "traces"
    traces_dir.mkdir(parents=True, exist_ok=True)
    fb = discretize_cfb(cfg.plant.sample_time, cfg.cfb_gain)

    results = []
    for traj_name, profile in eval_profiles(cfg).items():
        for ctrl in build_controller_roster(cfg, est, models):
            res = bench.run_tracking(ctrl, profile, cfg.plant, fb, trajectory_name=traj_name)
            bench.write_trace_csv(res, traces_dir / f"{res.controller}_{traj_name}.csv")
            results.append(res)

    mse_rows = []
    for kind in ("none", "mass_acc", "friction_comp"):
        pm = bench.benchmark_prediction_mse(data, est, kind)
        mse_rows.append((kind, 0, "-", pm["train"], pm["validation"], pm["test"]))
    roster_specs = {spec.kind: spec for spec in cfg.controllers}
    if train_reports:
        for kind, rep in train_reports.items():
            spec = roster_specs[kind]
            mse_rows.append(
                (kind, spec.neurons, spec.activation, rep.cost_train, rep.cost_validation, rep.cost_test)
            )

    tables = bench.report(mse_rows, results, out_dir)
    summary = {
        "estimates": {"mass": est.mass, "f_v": est.f_v, "f_c": est.f_c},
        "mae": {res.trajectory + "/" + res.controller: res.mae for res in results},
        "mse_table": [list(map(_jsonable, row)) for row in tables["mse_rows"]],
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return {"results": results, "tables": tables, "summary": summary}


def _jsonable(v):
    return v if not hasattr(v, "item") else v.item()


def run_reproduce(cfg: RunConfig, out_dir, jobs: int = 1) -> dict:
    """Full pipeline from one config: generate, identify, train, evaluate, report."""
    out_dir = Path(out_dir)
    data = run_generate(cfg, out_dir)
    est = run_identify(cfg, data, out_dir)
    trained = run_train(cfg, data, out_dir, jobs=jobs, est=est)
    models = {kind: outcome.net for kind, outcome in trained.items()}
    reports = {kind: outcome.selected_report for kind, outcome in trained.items()}
    out = run_evaluate(cfg, data, est, models, out_dir, train_reports=reports)
    out["dataset"] = data
    out["estimates"] = est
    out["models"] = models
    out["train_reports"] = reports
    out["trained"] = trained
    return out
