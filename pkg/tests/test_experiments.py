import json

import numpy as np
import pandas as pd
import pytest

from pulse_iv.errors import DimensionMismatch, DivisionByZero, InvalidConfig, InvalidDesign
from pulse_iv.experiments.metrics import MseOrder, mse_partial_order, relative_change, summarize, summarize_weak_instruments
from pulse_iv.experiments.runner import Design, ExperimentConfig, reports_to_frame, run_experiment, write_outputs


@pytest.mark.parametrize(
    "mse_a, mse_b, expected",
    [
        (np.eye(2), 2 * np.eye(2), MseOrder.A_LESS_OR_EQUAL),
        (2 * np.eye(2), np.eye(2), MseOrder.B_LESS_OR_EQUAL),
        (np.eye(2), np.eye(2), MseOrder.EQUAL),
        (np.diag([1.0, 3.0]), np.diag([2.0, 2.0]), MseOrder.INCOMPARABLE),
        (np.array([[1.0]]), np.array([[1.5]]), MseOrder.A_LESS_OR_EQUAL),
    ],
)
def test_mse_partial_order(mse_a, mse_b, expected):
    assert mse_partial_order(mse_a, mse_b) is expected


def test_mse_partial_order_needs_matching_shapes():
    with pytest.raises(DimensionMismatch):
        mse_partial_order(np.eye(2), np.eye(3))


def test_relative_change():
    assert relative_change(3.0, 2.0) == pytest.approx(0.5)
    assert relative_change(1.0, 2.0) == pytest.approx(-0.5)
    with pytest.raises(DivisionByZero):
        relative_change(1.0, 0.0)


def test_summarize_decomposes_mse():
    rng = np.random.default_rng(50)
    estimates = rng.normal(loc=[1.2, -0.4], scale=[0.3, 0.8], size=(500, 2))
    target = np.array([1.0, 0.0])
    perf = summarize("X", estimates, target)
    assert perf.repetitions_used == 500
    assert perf.trace == pytest.approx(perf.variance.sum() + perf.bias @ perf.bias)
    assert np.allclose(perf.bias, estimates.mean(axis=0) - target)
    assert perf.median_error == pytest.approx(np.median(np.linalg.norm(estimates - target, axis=1)))
    assert perf.rmse == pytest.approx(np.sqrt(perf.trace))


def test_summarize_without_successful_repetitions():
    perf = summarize("PULSE", np.empty((0, 1)), np.array([1.0]), {"DualInfeasible": 3})
    assert perf.repetitions_used == 0
    assert np.isnan(perf.mean).all()
    assert perf.failures == {"DualInfeasible": 3}


def test_weak_instrument_summary_readings():
    g = [np.diag([1.0, 9.0]), np.diag([9.0, 1.0])]
    summary = summarize_weak_instruments(g)
    assert summary.mean_min_eigenvalue == pytest.approx(1.0)
    assert summary.min_eigenvalue_of_mean == pytest.approx(5.0)
    assert summarize_weak_instruments([]) is None


def test_config_from_mapping_merges_defaults():
    defaults = {"robustness-e1": {"repetitions": 1000, "n": [2000], "kappas": [0.0, 0.75, 1.0]}}
    cfg = ExperimentConfig.from_mapping({"design": "robustness-e1", "seed": 9, "repetitions": 3}, defaults)
    assert cfg.design is Design.ROBUSTNESS_E1
    assert cfg.repetitions == 3
    assert cfg.master_seed == 9
    assert cfg.grid == {"n": [2000], "kappas": [0.0, 0.75, 1.0]}
    assert [str(e) for e in cfg.estimators] == ["kclass:0", "kclass:0.75", "kclass:1"]


def test_config_reads_pulse_block():
    cfg = ExperimentConfig.from_mapping({"design": "univariate", "pulse": {"p_min": 0.1, "scaling": "plain"}})
    assert cfg.pulse.p_min == 0.1
    assert cfg.pulse.scaling.value == "plain"


def test_config_rejects_unknown_design():
    with pytest.raises(InvalidDesign) as error:
        ExperimentConfig.from_mapping({"design": "univariat"})
    assert error.value.exit_code == 2


@pytest.mark.parametrize("mapping", [{}, {"design": "univariate", "repetitions": 0}, {"design": "univariate", "seed": -1}])
def test_config_rejects_invalid_values(mapping):
    with pytest.raises(InvalidConfig):
        ExperimentConfig.from_mapping(mapping)


def robustness_config(threads: int) -> ExperimentConfig:
    return ExperimentConfig(
        design=Design.ROBUSTNESS_E1,
        repetitions=12,
        master_seed=1,
        threads=threads,
        grid={"n": [200], "kappas": [0.0, 0.75, 1.0], "x_grid": [0.0, 2.0, 4.0]},
    )


def test_robustness_experiment():
    reports = run_experiment(robustness_config(threads=1))
    assert len(reports) == 1
    report = reports[0]
    assert set(report.estimators) == {"K(0)", "K(0.75)", "K(1)"}
    assert report.extras["population_kappa_0.75"] == pytest.approx(1.1)
    assert report.extras["population_superiority_lo"] == pytest.approx(1.3628, abs=1e-4)
    assert 0.0 <= report.extras["share_mid_superior_at_x2"] <= 1.0
    assert len(report.records) == 12 * 3 * 3
    ols = report.estimators["K(0)"]
    assert ols.mean[0] == pytest.approx(1.25, abs=0.1)


def test_results_do_not_depend_on_thread_count():
    single = reports_to_frame(run_experiment(robustness_config(threads=1)))
    pooled = reports_to_frame(run_experiment(robustness_config(threads=3)))
    pd.testing.assert_frame_equal(single, pooled)


def test_univariate_experiment_compares_against_pulse():
    cfg = ExperimentConfig(
        design="univariate",
        repetitions=4,
        master_seed=2,
        grid={"q": [2], "rho": [0.5], "r2": [0.1], "n": [50]},
    )
    reports = run_experiment(cfg)
    assert reports[0].cell == {"q": 2, "rho": 0.5, "r2": 0.1, "n": 50}
    comparisons = reports[0].comparisons("PULSE")
    assert set(comparisons) == {"OLS", "TSLS", "FUL(1)", "FUL(4)"}
    assert all(row["mse_order"] in {order.value for order in MseOrder} for row in comparisons.values())
    frame = reports_to_frame(reports)
    assert {"q", "rho", "r2", "n", "estimator", "metric", "value", "repetitions_used"} <= set(frame.columns)
    assert "rel_change_mse_trace" in set(frame.metric)


def test_underid_experiment_targets_population_pulse():
    cfg = ExperimentConfig(design="underid-e3", repetitions=2, grid={"models": 0, "n": [100]})
    report = run_experiment(cfg)[0]
    assert np.allclose(report.target, [1 / 3, 2 / 3])
    assert set(report.estimators) == {"PULSE", "TSLS.mod"}


def test_write_outputs(tmp_path):
    cfg = robustness_config(threads=1)
    written = write_outputs(cfg, run_experiment(cfg), tmp_path / "out")
    names = sorted(path.name for path in written)
    assert names == ["robustness-e1.csv", "robustness-e1_estimates.csv", "robustness-e1_manifest.json"]

    estimates = pd.read_csv(tmp_path / "out" / "robustness-e1_estimates.csv")
    assert {"n", "repetition", "kappa", "estimate", "x", "wcmspe"} <= set(estimates.columns)
    manifest = json.loads((tmp_path / "out" / "robustness-e1_manifest.json").read_text(encoding="utf-8"))
    assert manifest["master_seed"] == 1
    assert manifest["repetitions"] == 12
    assert manifest["cells"] == 1


def test_relative_change_bounds():
    assert relative_change(2.0, 2.0) == 0.0
    assert relative_change(0.0, 1.0) == -1.0


def test_rank_one_bump_is_ordered():
    rng = np.random.default_rng(51)
    base = rng.normal(size=(3, 3))
    base = base @ base.T
    v = rng.normal(size=3)
    assert mse_partial_order(base, base + np.outer(v, v)) is MseOrder.A_LESS_OR_EQUAL
    assert mse_partial_order(np.diag([1.0, 2.0]), np.diag([2.0, 1.0])) is MseOrder.INCOMPARABLE


def test_robustness_means_near_population_values():
    cfg = ExperimentConfig(
        design=Design.ROBUSTNESS_E1,
        repetitions=50,
        master_seed=3,
        grid={"n": [2000], "kappas": [0.0, 0.75, 1.0], "x_grid": [2.0]},
    )
    report = run_experiment(cfg)[0]
    means = [report.estimators[label].mean[0] for label in ("K(0)", "K(0.75)", "K(1)")]
    assert np.allclose(means, [1.25, 1.1, 1.0], atol=0.03)


@pytest.mark.slow
def test_underid_error_shrinks_with_sample_size():
    cfg = ExperimentConfig(design="underid-e3", repetitions=20, master_seed=5, grid={"models": 0, "n": [50, 5000]})
    small, large = run_experiment(cfg)
    assert large.estimators["PULSE"].trace < small.estimators["PULSE"].trace


def univariate_cell(r2: float, rho: float, repetitions: int = 1000) -> dict:
    cfg = ExperimentConfig(
        design="univariate",
        repetitions=repetitions,
        master_seed=11,
        grid={"q": [1], "rho": [rho], "r2": [r2], "n": [50]},
    )
    return {label: perf.rmse for label, perf in run_experiment(cfg)[0].estimators.items()}


@pytest.mark.slow
def test_pulse_beats_fuller_with_weak_instrument_and_weak_confounding():
    rmse = univariate_cell(r2=0.0001, rho=0.1)
    assert rmse["PULSE"] < rmse["FUL(1)"]
    assert rmse["PULSE"] < rmse["FUL(4)"]


@pytest.mark.slow
def test_pulse_beats_ols_with_strong_instrument_and_strong_confounding():
    rmse = univariate_cell(r2=0.3, rho=0.9)
    assert rmse["PULSE"] < rmse["OLS"]


@pytest.mark.slow
def test_underid_median_error_falls_with_sample_size():
    cfg = ExperimentConfig(design="underid-e3", repetitions=100, master_seed=8, grid={"models": 0, "n": [100, 1000, 10000]})
    reports = run_experiment(cfg)
    assert [report.cell["n"] for report in reports] == [100, 1000, 10000]
    for label in ("PULSE", "TSLS.mod"):
        errors = [report.estimators[label].median_error for report in reports]
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] < 0.05


@pytest.mark.slow
def test_pulse_is_consistent_in_just_identified_model():
    cfg = ExperimentConfig(
        design="univariate",
        repetitions=200,
        master_seed=12,
        estimators=("pulse",),
        grid={"q": [1], "rho": [0.5], "r2": [0.3], "n": [100, 10000]},
    )
    small, large = run_experiment(cfg)
    assert large.estimators["PULSE"].median_error < small.estimators["PULSE"].median_error / 3
