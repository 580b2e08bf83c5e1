"""Population K-class estimands and their worst-case prediction error under interventions."""
import logging
import math

import numpy as np

from pulse_iv.data.dataset import ModelPartition
from pulse_iv.data.design import check_gram
from pulse_iv.errors import InvalidSpec, SingularPopulationGram
from pulse_iv.sem.model import InterventionSpec, PopulationMoments, SemModel, population_moments, population_projection

_log = logging.getLogger(__name__)


def population_kclass(
    model: SemModel,
    partition: ModelPartition | None,
    kappa: float,
    iv: InterventionSpec | None = None,
) -> np.ndarray:
    """((1 - kappa) E[ZZ'] + kappa E[ZA']E[AA']^{-1}E[AZ'])^{-1} ((1 - kappa) E[ZY] + kappa E[ZA']E[AA']^{-1}E[AY])."""
    if not 0 <= kappa <= 1:
        raise InvalidSpec(f"kappa must lie in [0, 1], got {kappa}")
    moments = population_moments(model, iv, partition)
    projected_zz, projected_zy = population_projection(moments)
    if kappa < 1:
        check_gram(moments.zz, "E[ZZ']", SingularPopulationGram)
    else:
        check_gram(projected_zz, "E[ZA']E[AA']^{-1}E[AZ']", SingularPopulationGram)
    matrix = (1 - kappa) * moments.zz + kappa * projected_zz
    rhs = (1 - kappa) * moments.zy + kappa * projected_zy
    return np.linalg.solve(matrix, rhs)


def population_losses(moments: PopulationMoments, alpha: np.ndarray) -> tuple[float, float]:
    """Population l_OLS = E[(Y - Z'alpha)^2] and l_IV = E[A r]'E[AA']^{-1}E[A r]."""
    alpha = np.asarray(alpha, dtype=float).ravel()
    ols = moments.yy - 2 * alpha @ moments.zy + alpha @ moments.zz @ alpha
    moment = moments.ay - moments.az @ alpha
    iv = moment @ np.linalg.solve(moments.aa, moment)
    return float(ols), float(iv)


def worst_case_mspe(
    model: SemModel,
    partition: ModelPartition | None,
    alpha: np.ndarray,
    kappa: float,
) -> float:
    """Supremum of the interventional MSPE over do(A := v) with E[vv'] <= E[AA'] / (1 - kappa).

    Evaluated as l_OLS(alpha) + kappa / (1 - kappa) * l_IV(alpha) in the population.
    """
    if not 0 <= kappa < 1:
        raise InvalidSpec(f"kappa must lie in [0, 1), got {kappa}")
    ols, iv = population_losses(population_moments(model, None, partition), alpha)
    return ols + kappa / (1 - kappa) * iv


def wcmspe_curve_e1(gamma_hat: float, x_grid) -> np.ndarray:
    """x^2 (1 - g)^2 + g^2 + 3 (1 - g): worst case MSPE over |v| <= x in the robustness model."""
    x = np.asarray(x_grid, dtype=float)
    return x**2 * (1 - gamma_hat) ** 2 + gamma_hat**2 + 3 * (1 - gamma_hat)


def superiority_interval(
    gamma_mid: float,
    gamma_low: float,
    gamma_high: float,
) -> tuple[float, float] | None:
    """Range of x >= 0 on which gamma_mid has a worst case MSPE no larger than both competitors.

    Each comparison is linear in s = x^2: a s + b <= 0. Returns None when the range is empty.
    """
    s_lo, s_hi = 0.0, math.inf
    for competitor in (gamma_low, gamma_high):
        a = (1 - gamma_mid) ** 2 - (1 - competitor) ** 2
        b = gamma_mid**2 - competitor**2 - 3 * (gamma_mid - competitor)
        if a > 0:
            s_hi = min(s_hi, -b / a)
        elif a < 0:
            s_lo = max(s_lo, -b / a)
        elif b > 0:
            return None
    if s_lo > s_hi:
        return None
    return math.sqrt(s_lo), math.sqrt(s_hi)


def population_pulse_underid(delta2: float, gamma: float, beta: float) -> tuple[float, float]:
    """Population PULSE coefficients (alpha1*, alpha2*) of the under-identified model with unit noise."""
    spread = 1 + delta2**2
    alpha2 = spread * gamma / (1 + spread * gamma**2)
    return (1 - alpha2 * gamma) * beta, alpha2


def population_modified_tsls(model: SemModel, partition: ModelPartition | None = None) -> np.ndarray:
    """argmin E[(Y - Z'alpha)^2] subject to E[A(Y - Z'alpha)] = 0, from exact moments."""
    moments = population_moments(model, None, partition)
    p, q = moments.zz.shape[0], moments.aa.shape[0]
    kkt = np.block([[2 * moments.zz, moments.az.T], [moments.az, np.zeros((q, q))]])
    rhs = np.concatenate([2 * moments.zy, moments.ay])
    return (np.linalg.pinv(kkt) @ rhs)[:p]
