import logging

import numpy as np
import scipy.linalg

from pulse_iv.data.design import DesignView, check_gram
from pulse_iv.errors import InsufficientRows, UnderIdentified
from pulse_iv.estimators.kclass import kclass_estimate
from pulse_iv.estimators.spec import EstimateResult, EstimatorKind, EstimatorSpec

_log = logging.getLogger(__name__)


def _residual_gram(v: np.ndarray, a: np.ndarray) -> np.ndarray:
    """V'P_A^perp V; an empty A leaves V'V."""
    vv = v.T @ v
    if a.shape[1] == 0:
        return vv
    av = a.T @ v
    return vv - av.T @ scipy.linalg.solve(a.T @ a, av, assume_a="pos")


def liml_kappa(view: DesignView) -> float:
    """Smallest generalized eigenvalue of (W1, W).

    W = [y X_*]'P_A^perp [y X_*] and W1 = [y X_*]'P_{A_*}^perp [y X_*].
    """
    if view.q - view.q1 < 1:
        raise UnderIdentified("LIML needs at least one excluded exogenous variable")
    v = np.column_stack([view.y, view.x_star])
    w = _residual_gram(v, view.a)
    w1 = _residual_gram(v, view.a_star)
    check_gram(w, "W")
    kappa = float(scipy.linalg.eigh(w1, w, eigvals_only=True)[0])
    _log.debug(f"LIML kappa = {kappa:.10g}")
    return kappa


def fuller_kappa(view: DesignView, a: float) -> float:
    """kappa_LIML - a / (n - q)."""
    if view.n <= view.q:
        raise InsufficientRows(f"Fuller needs n > q, got n={view.n}, q={view.q}")
    return liml_kappa(view) - a / (view.n - view.q)


def liml_estimate(view: DesignView) -> EstimateResult:
    return kclass_estimate(view, liml_kappa(view), spec=EstimatorSpec(EstimatorKind.LIML))


def fuller_estimate(view: DesignView, a: float) -> EstimateResult:
    return kclass_estimate(view, fuller_kappa(view, a), spec=EstimatorSpec(EstimatorKind.FULLER, a))
