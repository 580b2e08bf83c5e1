import argparse
import logging

from box import Box
from tabulate import tabulate

from pulse_iv.errors import InvalidConfig
from pulse_iv.experiments.runner import Design, ExperimentConfig, run_experiment, write_outputs
from pulse_iv.utils import load_structured_file, render_template

_log = logging.getLogger(__name__)

NAME = "experiment"
HELP = "Run a Monte Carlo experiment over one of the simulation designs"


def add_arguments(parser: argparse.ArgumentParser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", dest="experiment_config", help="Experiment config file (JSON or YAML)")
    source.add_argument("--design", help=f"One of {', '.join(d.value for d in Design)}")
    parser.add_argument("--reps", type=int, help="Repetitions per cell")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--threads", type=int, help="Worker threads (default $PULSE_THREADS or 1)")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--full-scale", action="store_true", help="Use the full-size grids of the `full_scale` profile")


def design_defaults(config: Box, full_scale: bool = False) -> dict:
    """Per-design grids from config.yaml, with the `full_scale` profile laid over them when asked."""
    defaults = {name: dict(grid or {}) for name, grid in (config.get("experiments", {}) or {}).items()}
    if full_scale:
        for name, grid in (config.get("full_scale", {}) or {}).items():
            defaults[name] = {**defaults.get(name, {}), **dict(grid or {})}
    return defaults


def experiment_config(args: argparse.Namespace, config: Box) -> ExperimentConfig:
    mapping = dict(load_structured_file(args.experiment_config)) if args.experiment_config else {"design": args.design}
    overrides = {"repetitions": args.reps, "master_seed": args.seed, "threads": args.threads}
    mapping.update({k: v for k, v in overrides.items() if v is not None})
    if args.seed is not None:
        mapping.pop("seed", None)
    defaults = design_defaults(config, args.full_scale)
    if "pulse" in config and "pulse" not in mapping:
        mapping["pulse"] = dict(config.pulse)
    return ExperimentConfig.from_mapping(mapping, defaults)


def _summary(reports) -> list[list]:
    rows = []
    for report in reports:
        cell = ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in report.cell.items())
        for label, perf in report.estimators.items():
            rows.append([cell, label, perf.rmse, perf.bias_norm, perf.median_error, perf.repetitions_used])
    return rows


def main(args: argparse.Namespace, config: Box) -> int:
    cfg = experiment_config(args, config)
    out_dir = args.out or config.get("output_dir")
    if not out_dir:
        raise InvalidConfig("An output directory is needed (--out or output_dir in config.yaml)")
    reports = run_experiment(cfg)
    written = write_outputs(cfg, reports, out_dir)
    decimals = int(config.get("table_decimals", 4))
    print(
        tabulate(
            _summary(reports),
            headers=["cell", "estimator", "rmse", "bias_norm", "median_error", "reps"],
            floatfmt=f".{decimals}f",
        )
    )
    print(render_template("messages", "experiment_done", files=[str(p) for p in written]))
    return 0
