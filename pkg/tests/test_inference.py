import numpy as np
import pytest
from scipy import stats

from pulse_iv.data.design import DesignView
from pulse_iv.errors import DegenerateResidual, InvalidProbability, ZeroResidual
from pulse_iv.estimators import tsls_estimate
from pulse_iv.inference import (
    Scaling,
    TestConfig,
    ar_accepts,
    ar_statistic,
    chi2_quantile,
    test_statistic,
    weak_instrument_stat,
)
from pulse_iv.sem import sem_sample
from pulse_iv.sem.designs import univariate_weak
from tests.conftest import mixed_design, simulate_design


@pytest.mark.parametrize("q, expected", [(1, 3.8415), (2, 5.9915), (3, 7.8147), (5, 11.0705)])
def test_chi2_quantile_matches_tables(q, expected):
    assert chi2_quantile(q, 0.95) == pytest.approx(expected, abs=5e-5)


@pytest.mark.parametrize("q", [1, 2, 4, 30])
@pytest.mark.parametrize("prob", [0.01, 0.5, 0.9, 0.999])
def test_chi2_quantile_inverts_cdf(q, prob):
    assert stats.chi2.cdf(chi2_quantile(q, prob), q) == pytest.approx(prob, rel=1e-9)


def test_chi2_quantile_vanishes_at_zero_probability():
    assert chi2_quantile(1, 1e-12) < 1e-20


@pytest.mark.parametrize("prob", [0.0, 1.0, -0.5, 1.5])
def test_chi2_quantile_rejects_bad_probability(prob):
    with pytest.raises(InvalidProbability):
        chi2_quantile(2, prob)


def test_config_validates_level():
    with pytest.raises(InvalidProbability):
        TestConfig(p_min=1.0)
    assert TestConfig(scaling="plain").scaling is Scaling.PLAIN


def test_statistic_zero_when_residual_orthogonal(just_view):
    result = test_statistic(just_view, tsls_estimate(just_view).alpha)
    assert result.statistic == pytest.approx(0.0, abs=1e-9)
    assert result.accepted
    assert result.p_value_bound == pytest.approx(1.0)


def test_scalings_differ_by_constant_factor(over_view):
    alpha = np.zeros(over_view.p)
    plain = test_statistic(over_view, alpha, TestConfig(scaling=Scaling.PLAIN))
    ar = test_statistic(over_view, alpha, TestConfig(scaling=Scaling.ANDERSON_RUBIN))
    n, q = over_view.n, over_view.q
    factor = (n - q + chi2_quantile(q, 0.95)) / n
    assert ar.statistic == pytest.approx(plain.statistic * factor, rel=1e-14)
    assert ar.threshold == plain.threshold


def test_statistic_is_scale_invariant(over_view):
    alpha = np.full(over_view.p, 0.7)
    scaled = DesignView.from_arrays(3.0 * over_view.y, 3.0 * over_view.z, over_view.a, d1=over_view.d1)
    assert test_statistic(scaled, alpha).statistic == pytest.approx(test_statistic(over_view, alpha).statistic, rel=1e-12)


def test_boundary_counts_as_accepted(over_view, monkeypatch):
    alpha = np.zeros(over_view.p)
    statistic = test_statistic(over_view, alpha).statistic
    monkeypatch.setattr(TestConfig, "threshold", lambda self, q: statistic)
    assert test_statistic(over_view, alpha).accepted


def test_higher_level_shrinks_acceptance(over_view):
    grid = [np.array([value]) for value in np.linspace(0.0, 2.0, 101)]
    loose = {i for i, alpha in enumerate(grid) if test_statistic(over_view, alpha, TestConfig(p_min=0.01)).accepted}
    strict = {i for i, alpha in enumerate(grid) if test_statistic(over_view, alpha, TestConfig(p_min=0.2)).accepted}
    assert strict <= loose
    assert len(strict) < len(loose)


def test_zero_residual_is_refused():
    rng = np.random.default_rng(30)
    z = rng.normal(size=(20, 1))
    view = DesignView.from_arrays(2.0 * z[:, 0], z, rng.normal(size=(20, 2)))
    with pytest.raises(ZeroResidual):
        test_statistic(view, np.array([2.0]))


def test_ar_statistic_bridge(over_view):
    cfg = TestConfig()
    n, q = over_view.n, over_view.q
    for value in np.linspace(0.0, 2.0, 100):
        alpha = np.array([value])
        ols, iv = over_view.losses(alpha)
        assert ar_statistic(over_view, alpha) == pytest.approx((n - q) / q * iv / (ols - iv), rel=1e-12)
        assert ar_accepts(over_view, alpha) == test_statistic(over_view, alpha, cfg).accepted


def test_ar_statistic_zero_for_orthogonal_residual(just_view):
    assert ar_statistic(just_view, tsls_estimate(just_view).alpha) == pytest.approx(0.0, abs=1e-9)


def test_ar_statistic_degenerate_residual():
    rng = np.random.default_rng(31)
    a = rng.normal(size=(25, 2))
    z = rng.normal(size=(25, 1))
    view = DesignView.from_arrays(a @ np.array([1.0, -1.0]), z, a)
    with pytest.raises(DegenerateResidual):
        ar_statistic(view, np.zeros(1))


def test_weak_instrument_univariate_formula(over_view):
    x = over_view.x_star[:, 0]
    q, _ = np.linalg.qr(over_view.a)
    explained = x @ q @ (q.T @ x)
    expected = (over_view.n - over_view.q) / over_view.q * explained / (x @ x - explained)
    report = weak_instrument_stat(over_view)
    assert report.g_matrix.shape == (1, 1)
    assert report.min_eigenvalue == pytest.approx(expected, rel=1e-10)
    assert report.rule_of_thumb_pass == (expected > 10)


def test_weak_instrument_matches_first_stage_f():
    rng = np.random.default_rng(32)
    a = rng.normal(size=(20, 2))
    x = a @ np.array([0.4, -0.2]) + rng.normal(size=20)
    view = DesignView.from_arrays(rng.normal(size=20), x, a)
    fitted = a @ np.linalg.lstsq(a, x, rcond=None)[0]
    restricted = x @ x
    unrestricted = (x - fitted) @ (x - fitted)
    f_stat = ((restricted - unrestricted) / 2) / (unrestricted / (20 - 2))
    assert weak_instrument_stat(view).min_eigenvalue == pytest.approx(f_stat, rel=1e-10)


def test_weak_instrument_zero_when_orthogonal():
    rng = np.random.default_rng(33)
    a = rng.normal(size=(30, 2))
    x = rng.normal(size=30)
    x -= a @ np.linalg.lstsq(a, x, rcond=None)[0]
    view = DesignView.from_arrays(rng.normal(size=30), x, a)
    report = weak_instrument_stat(view)
    assert report.min_eigenvalue == pytest.approx(0.0, abs=1e-10)
    assert not report.rule_of_thumb_pass


def test_weak_instrument_matrix_is_symmetric():
    view = simulate_design(n=200, q=4, d=2, seed=34)
    report = weak_instrument_stat(view)
    assert np.allclose(report.g_matrix, report.g_matrix.T, atol=1e-10)
    assert report.min_eigenvalue == pytest.approx(np.linalg.eigvalsh(report.g_matrix)[0])


@pytest.mark.parametrize("seed", range(30))
def test_ar_bridge_across_designs(seed):
    view = mixed_design(seed)
    cfg = TestConfig()
    rng = np.random.default_rng(500 + seed)
    center = np.ones(view.p)
    for alpha in center + rng.normal(scale=0.3, size=(100, view.p)):
        assert ar_accepts(view, alpha) == test_statistic(view, alpha, cfg).accepted


@pytest.mark.slow
def test_level_and_power_at_true_coefficient():
    model = univariate_weak(q=2, rho=0.5, r2=0.3)
    cfg = TestConfig()
    rejected_true = rejected_shifted = 0
    repetitions = 2000
    for repetition in range(repetitions):
        ds = sem_sample(model, 2000, seed=77, repetition=repetition)
        view = DesignView.from_dataset(ds, model.partition())
        rejected_true += not test_statistic(view, np.array([1.0]), cfg).accepted
        rejected_shifted += not test_statistic(view, np.array([1.5]), cfg).accepted
    assert rejected_true / repetitions == pytest.approx(0.05, abs=0.015)
    assert rejected_shifted / repetitions >= 0.99
