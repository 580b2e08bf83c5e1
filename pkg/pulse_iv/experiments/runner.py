"""Monte Carlo experiments over the simulation designs."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
import itertools
import json
import logging
import os
from pathlib import Path

import numpy as np
import pandas as pd

from pulse_iv import __version__
from pulse_iv.constants import PULSE_THREADS
from pulse_iv.data.design import DesignView
from pulse_iv.errors import InvalidConfig, InvalidDesign, PulseIVError
from pulse_iv.estimators.spec import EstimatorKind, EstimatorSpec, parse_estimator
from pulse_iv.experiments.metrics import PerformanceReport, summarize, summarize_weak_instruments
from pulse_iv.fit import fit
from pulse_iv.inference.weak_instruments import weak_instrument_stat
from pulse_iv.pulse.dual import PulseConfig
from pulse_iv.sem import designs
from pulse_iv.sem.model import SemModel, sem_sample
from pulse_iv.sem.population import (
    population_kclass,
    population_pulse_underid,
    superiority_interval,
    wcmspe_curve_e1,
)
from pulse_iv.utils import to_jsonable

_log = logging.getLogger(__name__)

# Share of failed repetitions above which a cell is flagged.
FAILURE_ALERT = 0.01
# Model draws use their own stream so they do not depend on the sampling seeds.
MODEL_STREAM = 7919
# Intervention strength at which the robustness experiment compares K-class estimates.
SUPERIORITY_X = 2.0


class Design(Enum):
    UNIVARIATE = "univariate"
    MV_RANDOM = "mv-random"
    MV_FIXED = "mv-fixed"
    ROBUSTNESS_E1 = "robustness-e1"
    UNDERID_E3 = "underid-e3"

    @classmethod
    def from_name(cls, name: "str | Design") -> "Design":
        if isinstance(name, Design):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise InvalidDesign(str(name), [d.value for d in cls]) from None


DEFAULT_ESTIMATORS = {
    Design.UNIVARIATE: ("ols", "tsls", "fuller:1", "fuller:4", "pulse"),
    Design.MV_RANDOM: ("ols", "fuller:1", "fuller:4", "pulse"),
    Design.MV_FIXED: ("ols", "fuller:1", "fuller:4", "pulse"),
    Design.ROBUSTNESS_E1: ("kclass:0", "kclass:0.75", "kclass:1"),
    Design.UNDERID_E3: ("pulse", "modified-tsls"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    design: Design
    repetitions: int = 1000
    master_seed: int = 0
    estimators: tuple[EstimatorSpec, ...] = ()
    pulse: PulseConfig = field(default_factory=PulseConfig)
    threads: int = 1
    grid: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "design", Design.from_name(self.design))
        if self.repetitions < 1:
            raise InvalidConfig(f"repetitions must be positive, got {self.repetitions}")
        if self.master_seed < 0:
            raise InvalidConfig(f"master_seed must be non-negative, got {self.master_seed}")
        if self.threads < 1:
            raise InvalidConfig(f"threads must be positive, got {self.threads}")
        estimators = tuple(
            parse_estimator(e) if isinstance(e, str) else e
            for e in (self.estimators or DEFAULT_ESTIMATORS[self.design])
        )
        object.__setattr__(self, "estimators", estimators)

    @classmethod
    def from_mapping(cls, mapping, defaults=None) -> "ExperimentConfig":
        """Build from a config mapping; `defaults` holds per-design grids (config.yaml `experiments`)."""
        if "design" not in mapping:
            raise InvalidConfig("Experiment config needs a design")
        design = Design.from_name(mapping["design"])
        base = dict((defaults or {}).get(design.value, {}) or {})
        merged = {**base, **{k: v for k, v in dict(mapping).items() if v is not None}}
        pulse = merged.pop("pulse", {}) or {}
        known = {"design", "repetitions", "master_seed", "seed", "estimators", "threads"}
        grid = {k: v for k, v in merged.items() if k not in known}
        try:
            return cls(
                design=design,
                repetitions=int(merged.get("repetitions", 1000)),
                master_seed=int(merged.get("master_seed", merged.get("seed", 0))),
                estimators=tuple(merged.get("estimators", ())),
                pulse=PulseConfig(**dict(pulse)),
                threads=int(merged.get("threads") or os.getenv(PULSE_THREADS) or 1),
                grid=grid,
            )
        except TypeError as e:
            raise InvalidConfig(f"Invalid experiment config: {e}") from e


@dataclass(frozen=True)
class Cell:
    params: dict
    model: SemModel
    n: int
    target: np.ndarray


def _as_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _cells(cfg: ExperimentConfig) -> list[Cell]:
    grid = cfg.grid
    match cfg.design:
        case Design.UNIVARIATE:
            gamma = float(grid.get("gamma", 1.0))
            cells = []
            for q, rho, r2, n in itertools.product(
                _as_list(grid.get("q", [1])),
                _as_list(grid.get("rho", [0.1])),
                _as_list(grid.get("r2", [0.0001])),
                _as_list(grid.get("n", [50])),
            ):
                model = designs.univariate_weak(int(q), float(rho), float(r2), gamma)
                params = {"q": int(q), "rho": float(rho), "r2": float(r2), "n": int(n)}
                cells.append(Cell(params, model, int(n), np.array([gamma])))
            return cells
        case Design.MV_RANDOM:
            gamma = np.asarray(grid.get("gamma", [0.0, 0.0]), dtype=float)
            rng = np.random.Generator(np.random.Philox([cfg.master_seed, MODEL_STREAM]))
            cells = []
            for index in range(int(grid.get("models", 10))):
                model, info = designs.random_multivariate(rng, gamma)
                for n in _as_list(grid.get("n", [50])):
                    params = {"model": index, "rho_norm": info["rho_norm"], "n": int(n)}
                    cells.append(Cell(params, model, int(n), gamma))
            return cells
        case Design.MV_FIXED:
            gamma = np.asarray(grid.get("gamma", [0.0, 0.0]), dtype=float)
            rng = np.random.Generator(np.random.Philox([cfg.master_seed, MODEL_STREAM]))
            xis = [rng.uniform(*designs.UNIF_COEFFICIENT, size=(2, 2)) for _ in range(int(grid.get("models", 10)))]
            cells = []
            for eta, phi1, phi2 in grid.get("noise", [[0.2, 0.15, 0.15]]):
                rho_norm = designs.rho_norm_fixed_noise(eta, phi1, phi2)
                for index, xi in enumerate(xis):
                    model = designs.multivariate_fixed_noise(xi, eta, phi1, phi2, gamma)
                    for n in _as_list(grid.get("n", [50])):
                        params = {
                            "rho_norm": rho_norm,
                            "eta": float(eta),
                            "phi1": float(phi1),
                            "phi2": float(phi2),
                            "model": index,
                            "n": int(n),
                        }
                        cells.append(Cell(params, model, int(n), gamma))
            return cells
        case Design.ROBUSTNESS_E1:
            gamma = float(grid.get("gamma", 1.0))
            model = designs.robustness_e1(gamma, float(grid.get("noise_corr", 0.5)))
            return [Cell({"n": int(n)}, model, int(n), np.array([gamma])) for n in _as_list(grid.get("n", [2000]))]
        case Design.UNDERID_E3:
            rng = np.random.Generator(np.random.Philox([cfg.master_seed, MODEL_STREAM]))
            count = int(grid.get("models", 0))
            if count:
                drawn = [designs.random_underid(rng) for _ in range(count)]
            else:
                params = {k: float(grid.get(k, 1.0)) for k in ("eta", "delta1", "delta2", "gamma", "beta")}
                drawn = [(designs.underid_e3(**params), params)]
            cells = []
            for index, (model, params) in enumerate(drawn):
                target = np.array(population_pulse_underid(params["delta2"], params["gamma"], params["beta"]))
                for n in _as_list(grid.get("n", [100, 1000, 10000])):
                    cells.append(Cell({"model": index, "n": int(n)}, model, int(n), target))
            return cells


def _repetition(cfg: ExperimentConfig, cell: Cell, repetition: int) -> dict:
    ds = sem_sample(cell.model, cell.n, cfg.master_seed, repetition=repetition)
    view = DesignView.from_dataset(ds, cell.model.partition())
    outcome = {"estimates": {}, "failures": {}, "g": None}
    for spec in cfg.estimators:
        try:
            outcome["estimates"][spec.label] = fit(view, spec, cfg.pulse).alpha
        except PulseIVError as e:
            outcome["failures"][spec.label] = type(e).__name__
    try:
        outcome["g"] = weak_instrument_stat(view).g_matrix
    except PulseIVError:
        pass
    return outcome


def _robustness_extras(cfg: ExperimentConfig, cell: Cell, outcomes: list[dict]) -> tuple[dict, list]:
    """Population values, worst-case MSPE curves and per-repetition superiority ranges."""
    kappas = [float(k) for k in cfg.grid.get("kappas", [0.0, 0.75, 1.0])]
    x_grid = [float(x) for x in cfg.grid.get("x_grid", [0.0, 1.0, 2.0, 3.0, 4.0])]
    population = {k: float(population_kclass(cell.model, None, k)[0]) for k in kappas}
    extras = {f"population_kappa_{k:g}": v for k, v in population.items()}
    mid, low, high = population.get(0.75), population.get(0.0), population.get(1.0)
    if None not in (mid, low, high):
        interval = superiority_interval(mid, low, high)
        if interval:
            extras["population_superiority_lo"], extras["population_superiority_hi"] = interval

    labels = [EstimatorSpec(EstimatorKind.KCLASS, k).label for k in kappas]
    records, wins, lengths = [], 0, []
    for repetition, outcome in enumerate(outcomes):
        values = {}
        for kappa, label in zip(kappas, labels):
            if label not in outcome["estimates"]:
                continue
            estimate = float(outcome["estimates"][label][0])
            values[kappa] = estimate
            for x, wcmspe in zip(x_grid, wcmspe_curve_e1(estimate, x_grid)):
                records.append(
                    {"repetition": repetition, "kappa": kappa, "estimate": estimate, "x": x, "wcmspe": float(wcmspe)}
                )
        if all(k in values for k in (0.0, 0.75, 1.0)):
            interval = superiority_interval(values[0.75], values[0.0], values[1.0])
            if interval:
                lengths.append(interval[1] - interval[0])
                wins += interval[0] <= SUPERIORITY_X <= interval[1]
    extras["share_mid_superior_at_x2"] = wins / max(len(outcomes), 1)
    extras["median_superiority_length"] = float(np.median(lengths)) if lengths else float("nan")
    return extras, records


def run_cell(cfg: ExperimentConfig, cell: Cell, executor: ThreadPoolExecutor | None = None) -> PerformanceReport:
    reps = range(cfg.repetitions)
    if executor is None:
        outcomes = [_repetition(cfg, cell, r) for r in reps]
    else:
        outcomes = list(executor.map(lambda r: _repetition(cfg, cell, r), reps))

    estimators = {}
    for spec in cfg.estimators:
        rows = [o["estimates"][spec.label] for o in outcomes if spec.label in o["estimates"]]
        failures = {}
        for o in outcomes:
            cause = o["failures"].get(spec.label)
            if cause:
                failures[cause] = failures.get(cause, 0) + 1
        failed = sum(failures.values())
        if failed > FAILURE_ALERT * cfg.repetitions:
            _log.warning(f"{spec.label} failed in {failed}/{cfg.repetitions} repetitions of cell {cell.params}: {failures}")
        estimators[spec.label] = summarize(spec.label, np.array(rows) if rows else np.empty((0, cell.target.size)), cell.target, failures)

    extras, records = {}, []
    if cfg.design is Design.ROBUSTNESS_E1:
        extras, records = _robustness_extras(cfg, cell, outcomes)
    return PerformanceReport(
        cell=cell.params,
        target=cell.target,
        estimators=estimators,
        weak_instruments=summarize_weak_instruments([o["g"] for o in outcomes if o["g"] is not None]),
        extras=extras,
        records=records,
        repetitions=cfg.repetitions,
    )


def run_experiment(cfg: ExperimentConfig) -> list[PerformanceReport]:
    """One report per grid cell; results do not depend on the thread count."""
    cells = _cells(cfg)
    _log.info(f"Running {cfg.design.value} with {len(cells)} cells x {cfg.repetitions} repetitions.")
    reports = []
    with ThreadPoolExecutor(max_workers=cfg.threads) as executor:
        for index, cell in enumerate(cells):
            reports.append(run_cell(cfg, cell, executor if cfg.threads > 1 else None))
            _log.info(f"Finished cell {index + 1}/{len(cells)}: {cell.params}.")
    return reports


def reports_to_frame(reports: list[PerformanceReport], reference: str = "PULSE") -> pd.DataFrame:
    """Long format: cell parameters..., estimator, metric, value, repetitions_used."""
    rows = []
    for report in reports:
        def add(estimator: str, metric: str, value, used: int):
            rows.append({**report.cell, "estimator": estimator, "metric": metric, "value": value, "repetitions_used": used})

        for label, perf in report.estimators.items():
            used = perf.repetitions_used
            for name, vector in (("mean", perf.mean), ("bias", perf.bias), ("variance", perf.variance), ("iqr", perf.iqr)):
                for i, value in enumerate(np.atleast_1d(vector)):
                    add(label, f"{name}[{i}]", float(value), used)
            for metric, value in perf.scalars().items():
                add(label, metric, value, used)
            for cause, count in sorted(perf.failures.items()):
                add(label, f"failures_{cause}", count, used)
        for label, comparison in report.comparisons(reference).items():
            used = report.estimators[label].repetitions_used
            for metric, value in comparison.items():
                add(label, metric, value, used)
        if report.weak_instruments:
            wi = report.weak_instruments
            add("G_n", "mean_min_eigenvalue", wi.mean_min_eigenvalue, wi.repetitions_used)
            add("G_n", "min_eigenvalue_of_mean", wi.min_eigenvalue_of_mean, wi.repetitions_used)
        for metric, value in report.extras.items():
            add("population" if metric.startswith("population") else "summary", metric, value, report.repetitions)
    return pd.DataFrame(rows)


def write_outputs(cfg: ExperimentConfig, reports: list[PerformanceReport], out_dir: str | Path) -> list[Path]:
    """Write the report CSV, the per-repetition CSV (when present) and a manifest JSON."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = cfg.design.value
    written = []

    report_path = out_dir / f"{name}.csv"
    reports_to_frame(reports).to_csv(report_path, index=False, float_format="%.10g")
    written.append(report_path)

    records = [{**r.cell, **record} for r in reports for record in r.records]
    if records:
        records_path = out_dir / f"{name}_estimates.csv"
        pd.DataFrame(records).to_csv(records_path, index=False, float_format="%.10g")
        written.append(records_path)

    manifest_path = out_dir / f"{name}_manifest.json"
    manifest = {
        "design": name,
        "master_seed": cfg.master_seed,
        "repetitions": cfg.repetitions,
        "estimators": [str(e) for e in cfg.estimators],
        "pulse": {
            "p_min": cfg.pulse.p_min,
            "precision": cfg.pulse.precision,
            "fallback": str(cfg.pulse.fallback) if cfg.pulse.fallback else None,
            "scaling": cfg.pulse.scaling.value,
            "fast_start": cfg.pulse.fast_start,
        },
        "grid": to_jsonable(cfg.grid),
        "cells": len(reports),
        "version": __version__,
    }
    with open(manifest_path, "w", encoding="utf-8") as file:
        json.dump(manifest, file, indent=2)
    written.append(manifest_path)
    return written
