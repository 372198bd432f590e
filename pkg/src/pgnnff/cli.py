"""Command-line front end: generate / identify / train / evaluate / reproduce.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import mlp, pipeline
from .config import ConfigError, RunConfig, apply_override, load_config
from .feedforward import PhysicalEstimates
from .ident import IdentificationError, SimulationDiverged, load_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

OUT_ROOT_ENV = "PGNNFF_OUT"


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the master seed")
    parser.add_argument("--jobs", type=int, default=1, help="worker cap for multistart training")
    parser.add_argument("--quick", action="store_true", help="desk-smoke protocol: 1 cycle, 3 restarts")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="dotted config override, e.g. --set dither.std=40",
    )


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        key, value = item.split("=", 1)
        cfg = apply_override(cfg, key, value)
    if args.seed is not None:
        cfg = apply_override(cfg, "seed", str(args.seed))
    if args.quick:
        cfg = cfg.quick()
    cfg.validate()
    return cfg


def _resolve_out(args) -> Path:
    if args.out is not None:
        return args.out
    return Path(os.environ.get(OUT_ROOT_ENV, "runs"))


def _load_dataset_arg(args, out_dir: Path):
    path = args.dataset if args.dataset else out_dir / "dataset.csv"
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    return load_dataset(path)


def cmd_generate(args) -> int:
    cfg = _resolve_config(args)
    out = _resolve_out(args)
    data = pipeline.run_generate(cfg, out)
    print(f"generated {len(data)} samples -> {out / 'dataset.csv'}")
    return EXIT_OK


def cmd_identify(args) -> int:
    cfg = _resolve_config(args)
    out = _resolve_out(args)
    data = _load_dataset_arg(args, out)
    est = pipeline.run_identify(cfg, data, out)
    print(f"identified mass={est.mass:.4f} kg f_v={est.f_v:.4f} f_c={est.f_c:.4f} -> {out / 'estimates.json'}")
    return EXIT_OK


def _load_estimates(out_dir: Path) -> PhysicalEstimates:
    path = out_dir / "estimates.json"
    if not path.exists():
        raise FileNotFoundError(f"estimates file not found: {path} (run `identify` first)")
    raw = json.loads(path.read_text())
    return PhysicalEstimates(mass=raw["mass"], f_v=raw["f_v"], f_c=raw["f_c"])


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    out = _resolve_out(args)
    data = _load_dataset_arg(args, out)
    kinds = None if args.controller == "all" else [args.controller]
    if kinds is not None and kinds[0] not in [c.kind for c in cfg.controllers]:
        raise ConfigError(f"controller {kinds[0]!r} is not in the configured roster")
    est = None
    if kinds is None or "pgnn2" in kinds:
        est = _load_estimates(out)
    trained = pipeline.run_train(cfg, data, out, jobs=args.jobs, kinds=kinds, est=est)
    for kind, (_, rep) in trained.items():
        print(f"trained {kind}: test MSE {rep.cost_test:.4g} N^2 -> {out / f'model_{kind}.json'}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    out = _resolve_out(args)
    data = _load_dataset_arg(args, out)
    est = _load_estimates(out)
    models = {}
    for spec in cfg.controllers:
        path = out / f"model_{spec.kind}.json"
        if not path.exists():
            raise FileNotFoundError(f"missing model for controller {spec.kind!r}: {path}")
        models[spec.kind] = mlp.from_json(path.read_text())
    result = pipeline.run_evaluate(cfg, data, est, models, out)
    for name, value in sorted(result["summary"]["mae"].items()):
        print(f"MAE {name}: {value:.4g} m")
    print(f"tables -> {out / 'mae_table.csv'}, {out / 'mse_table.csv'}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    cfg = _resolve_config(args)
    out = _resolve_out(args)
    result = pipeline.run_reproduce(cfg, out, jobs=args.jobs)
    for name, value in sorted(result["summary"]["mae"].items()):
        print(f"MAE {name}: {value:.4g} m")
    print(f"artifacts -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pgnnff",
        description="Feedforward benchmark workbench for a simulated coreless linear motor",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "generate": (cmd_generate, "simulate the dithered identification run and write the dataset"),
        "identify": (cmd_identify, "least-squares fit of (mass, f_v, f_c) from a dataset"),
        "train": (cmd_train, "train the neural feedforward controllers"),
        "evaluate": (cmd_evaluate, "run the tracking benchmark and emit report tables"),
        "reproduce": (cmd_reproduce, "full pipeline: generate, identify, train, evaluate"),
    }
    for name, (fn, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name in ("identify", "train", "evaluate"):
            p.add_argument("--dataset", type=Path, default=None, help="dataset CSV path")
        if name == "train":
            p.add_argument("--controller", default="all", help="nnarx | pgnn1 | pgnn2 | all")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationDiverged, IdentificationError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, json.JSONDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
