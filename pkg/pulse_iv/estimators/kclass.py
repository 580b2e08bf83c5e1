"""K-class family: OLS, anchor regression, K-class and TSLS.

Every solve goes through the identity I - kappa P_A^perp = (1 - kappa) I + kappa P_A, so only
the cached Gram products of the design view are touched.
"""
import logging
import math

import numpy as np
import scipy.linalg

from pulse_iv.constants import KAPPA_ONE_BAND
from pulse_iv.data.dataset import Identification
from pulse_iv.data.design import DesignView, check_gram
from pulse_iv.errors import InvalidSpec, SingularGram, UnderIdentified, UnidentifiedAtOne
from pulse_iv.estimators.spec import Diagnostics, EstimateResult, EstimatorKind, EstimatorSpec

_log = logging.getLogger(__name__)


def _solve(matrix: np.ndarray, rhs: np.ndarray, name: str) -> np.ndarray:
    try:
        return scipy.linalg.solve(matrix, rhs, assume_a="sym")
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise SingularGram(name, 0.0) from e


def anchor_alpha(view: DesignView, lam: float) -> np.ndarray:
    """Closed-form minimizer of l_OLS + lam * l_IV, i.e. (Z'(I + lam P_A)Z)^{-1} Z'(I + lam P_A)y.

    No rank checks; callers that evaluate many lambdas check Z'Z once up front.
    """
    matrix = view.zz + lam * view.zpz
    rhs = view.zy + lam * view.zpy
    return _solve(matrix, rhs, "Z'(I + lambda P_A)Z")


def _result(
    view: DesignView,
    alpha: np.ndarray,
    kappa: float | None,
    lam: float | None,
    spec: EstimatorSpec,
    warnings: tuple[str, ...] = (),
    condition: dict | None = None,
) -> EstimateResult:
    return EstimateResult(
        alpha=alpha,
        kappa_used=kappa,
        lambda_used=lam,
        diagnostics=Diagnostics(
            identification=view.identification,
            condition={**view.condition, **(condition or {})},
            warnings=warnings,
        ),
        estimator=spec,
        names=view.names,
    )


def _tsls_alpha(view: DesignView) -> tuple[np.ndarray, float]:
    if view.q < view.p:
        raise UnidentifiedAtOne(
            f"kappa = 1 needs at least as many exogenous variables as coefficients, got q={view.q} < {view.p}"
        )
    rcond = check_gram(view.zpz, "Z'P_A Z")
    return _solve(view.zpz, view.zpy, "Z'P_A Z"), rcond


def kclass_alpha(view: DesignView, kappa: float) -> np.ndarray:
    """K-class coefficients without result bookkeeping or rank checks on Z'Z."""
    if 1 - KAPPA_ONE_BAND < kappa <= 1 and view.identification is not Identification.UNDER:
        return _tsls_alpha(view)[0]
    if kappa == 1:
        return _tsls_alpha(view)[0]
    matrix = (1 - kappa) * view.zz + kappa * view.zpz
    rhs = (1 - kappa) * view.zy + kappa * view.zpy
    return _solve(matrix, rhs, "Z'(I - kappa P_A^perp)Z")


def kclass_estimate(view: DesignView, kappa: float, spec: EstimatorSpec | None = None) -> EstimateResult:
    """K-class estimator (Z'(I - kappa P_A^perp)Z)^{-1} Z'(I - kappa P_A^perp)y."""
    if not math.isfinite(kappa):
        raise InvalidSpec(f"kappa must be finite, got {kappa}")
    spec = spec or EstimatorSpec(EstimatorKind.KCLASS, kappa)
    warnings = ()
    if not 0 <= kappa <= 1 and spec.kind is EstimatorKind.KCLASS:
        warnings = (f"kappa={kappa:g} is outside [0, 1]",)
        _log.warning(f"K-class estimate requested with kappa={kappa:g} outside [0, 1].")

    if kappa == 1 or (1 - KAPPA_ONE_BAND < kappa < 1 and view.identification is not Identification.UNDER):
        alpha, rcond = _tsls_alpha(view)
        return _result(view, alpha, kappa, None, spec, warnings, {"Z'P_A Z": rcond})

    rcond = check_gram(view.zz, "Z'Z")
    alpha = kclass_alpha(view, kappa)
    lam = kappa / (1 - kappa) if kappa < 1 else None
    return _result(view, alpha, kappa, lam, spec, warnings, {"Z'Z": rcond})


def ols_estimate(view: DesignView) -> EstimateResult:
    rcond = check_gram(view.zz, "Z'Z")
    alpha = _solve(view.zz, view.zy, "Z'Z")
    return _result(view, alpha, 0.0, 0.0, EstimatorSpec(EstimatorKind.OLS), condition={"Z'Z": rcond})


def anchor_estimate(view: DesignView, lam: float, spec: EstimatorSpec | None = None) -> EstimateResult:
    """Anchor regression with penalty lam, the K-class estimator at kappa = lam / (1 + lam)."""
    if not math.isfinite(lam) or lam <= -1:
        raise InvalidSpec(f"Anchor regression needs a finite lambda > -1, got {lam}")
    rcond = check_gram(view.zz, "Z'Z")
    alpha = anchor_alpha(view, lam)
    return _result(
        view,
        alpha,
        lam / (1 + lam),
        lam,
        spec or EstimatorSpec(EstimatorKind.ANCHOR, lam),
        condition={"Z'Z": rcond},
    )


def tsls_estimate(view: DesignView) -> EstimateResult:
    """Two-stage least squares (Z'P_A Z)^{-1} Z'P_A y."""
    if view.identification is Identification.UNDER:
        raise UnderIdentified(
            f"TSLS is not defined with {view.q - view.q1} excluded exogenous variables for "
            f"{view.d1} endogenous regressors; use the modified TSLS instead"
        )
    alpha, rcond = _tsls_alpha(view)
    return _result(view, alpha, 1.0, None, EstimatorSpec(EstimatorKind.TSLS), condition={"Z'P_A Z": rcond})
