"""Primal view of PULSE: minimize l_OLS subject to l_IV <= t.

Along the anchor path l_IV(alpha_K(lambda)) decreases in lambda, so the constrained solution is
the anchor estimate whose IV loss equals t.
"""
import logging
import math

import numpy as np
from scipy import optimize

from pulse_iv.constants import LAMBDA_CAP, T_STAR_ITERATIONS
from pulse_iv.data.dataset import Identification
from pulse_iv.data.design import DesignView, check_gram
from pulse_iv.errors import OutOfDomain
from pulse_iv.estimators.kclass import anchor_alpha, tsls_estimate
from pulse_iv.inference.acceptance import test_statistic
from pulse_iv.pulse.dual import PulseConfig

_log = logging.getLogger(__name__)


def iv_infimum(view: DesignView) -> float:
    """inf_alpha l_IV(alpha): l_IV at TSLS when over-identified, 0 otherwise."""
    if view.identification is Identification.OVER:
        return view.losses(tsls_estimate(view).alpha)[1]
    return 0.0


def primal_domain(view: DesignView) -> tuple[float, float]:
    """(inf l_IV, l_IV(alpha_OLS)], open on the left."""
    return iv_infimum(view), view.losses(anchor_alpha(view, 0.0))[1]


def primal_solve(view: DesignView, t: float) -> np.ndarray:
    """Unique minimizer of l_OLS subject to l_IV <= t."""
    check_gram(view.zz, "Z'Z")
    lower, upper = primal_domain(view)
    if not lower < t <= upper:
        raise OutOfDomain(f"t = {t:.10g} outside ({lower:.10g}, {upper:.10g}]")
    if t == upper:
        return anchor_alpha(view, 0.0)

    def gap(lam: float) -> float:
        return view.losses(anchor_alpha(view, lam))[1] - t

    hi = 1.0
    while gap(hi) > 0:
        hi *= 2
        if hi > LAMBDA_CAP:
            raise OutOfDomain(f"t = {t:.10g} is numerically indistinguishable from inf l_IV = {lower:.10g}")
    lam = optimize.brentq(gap, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    return anchor_alpha(view, lam)


def t_star(view: DesignView, cfg: PulseConfig | None = None) -> float:
    """sup{t in the primal domain : T_n(primal_solve(t)) <= Q}, -inf when the set is empty."""
    cfg = cfg or PulseConfig()
    test_cfg = cfg.test_config
    lower, upper = primal_domain(view)
    if test_statistic(view, anchor_alpha(view, 0.0), test_cfg).accepted:
        return upper
    if view.identification is Identification.OVER:
        tsls = tsls_estimate(view)
        if not test_statistic(view, tsls.alpha, test_cfg).statistic < test_cfg.threshold(view.q):
            return -math.inf

    # Invariant: lower is accepted (or the infimum), upper is rejected.
    for _ in range(T_STAR_ITERATIONS):
        middle = (lower + upper) / 2
        if middle <= lower or middle >= upper:
            break
        if test_statistic(view, primal_solve(view, middle), test_cfg).accepted:
            lower = middle
        else:
            upper = middle
    return lower
