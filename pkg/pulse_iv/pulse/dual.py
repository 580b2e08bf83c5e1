"""PULSE through its dual: binary search for the smallest accepted anchor penalty.

lambda* = inf{lambda >= 0 : T_n(alpha_K(lambda)) <= Q}. The returned estimate is the K-class
estimator at kappa* = lambda* / (1 + lambda*), or a fallback when TSLS itself is rejected.
"""
from dataclasses import dataclass, field
from enum import Enum
import logging
import math

import numpy as np

from pulse_iv.constants import (
    DEFAULT_FALLBACK,
    DEFAULT_P_MIN,
    DEFAULT_PRECISION,
    LAMBDA_CAP,
    MONOTONE_SLACK,
)
from pulse_iv.data.dataset import Identification
from pulse_iv.data.design import DesignView, check_gram
from pulse_iv.errors import DualInfeasible, InvalidSpec, NonMonotoneDetected
from pulse_iv.estimators.dispatch import estimate
from pulse_iv.estimators.kclass import anchor_alpha, ols_estimate, tsls_estimate
from pulse_iv.estimators.modified_tsls import modified_tsls
from pulse_iv.estimators.spec import EstimateResult, EstimatorKind, EstimatorSpec, parse_estimator
from pulse_iv.inference.acceptance import Scaling, TestConfig, TestResult, test_from_losses, test_statistic

_log = logging.getLogger(__name__)

_CONSISTENT_FALLBACKS = (EstimatorKind.TSLS, EstimatorKind.LIML, EstimatorKind.FULLER)


class PulseMessage(Enum):
    NONE = "none"
    OLS_ACCEPTED = "ols_accepted"
    TSLS_REJECTED_FALLBACK = "tsls_rejected_fallback"


@dataclass(frozen=True)
class PulseConfig:
    """Search settings.

    precision is N, the search stops once the bracket is narrower than 1/N. fallback is the
    estimator returned when TSLS is rejected; None makes that case an error.
    """

    p_min: float = DEFAULT_P_MIN
    precision: int = DEFAULT_PRECISION
    fallback: EstimatorSpec | None = field(default_factory=lambda: parse_estimator(DEFAULT_FALLBACK))
    scaling: Scaling = Scaling.ANDERSON_RUBIN
    fast_start: bool = False

    def __post_init__(self):
        if int(self.precision) != self.precision or self.precision < 1:
            raise InvalidSpec(f"precision must be a positive integer, got {self.precision}")
        if isinstance(self.fallback, str):
            object.__setattr__(self, "fallback", parse_estimator(self.fallback))
        if self.fallback is not None and self.fallback.kind not in _CONSISTENT_FALLBACKS:
            raise InvalidSpec(f"Fallback must be TSLS, LIML or Fuller, got {self.fallback.label}")
        object.__setattr__(self, "scaling", Scaling.from_name(self.scaling))
        TestConfig(p_min=self.p_min, scaling=self.scaling)

    @property
    def test_config(self) -> TestConfig:
        return TestConfig(p_min=self.p_min, scaling=self.scaling)


@dataclass(frozen=True)
class PulseResult:
    alpha: np.ndarray
    lambda_star: float
    kappa_star: float | None
    message: PulseMessage
    test_at_solution: TestResult
    fallback_used: bool
    fallback: EstimateResult | None = None


def _kappa(lam: float) -> float:
    return lam / (1 + lam)


class _PathTest:
    """Test statistic along the anchor path, remembering every evaluation."""

    def __init__(self, view: DesignView, cfg: TestConfig):
        self.view = view
        self.cfg = cfg
        self.history: list[tuple[float, float]] = []

    def __call__(self, lam: float) -> TestResult:
        ols, iv = self.view.losses(anchor_alpha(self.view, lam))
        result = test_from_losses(self.view, ols, iv, self.cfg)
        self.history.append((lam, result.statistic))
        return result

    def check_monotone(self, threshold: float):
        ordered = sorted(self.history)
        for (lam_lo, t_lo), (lam_hi, t_hi) in zip(ordered, ordered[1:]):
            if t_hi > t_lo + MONOTONE_SLACK * threshold:
                raise NonMonotoneDetected(
                    f"Test statistic increases along the anchor path: T({lam_lo:.6g}) = {t_lo:.10g} "
                    f"< T({lam_hi:.6g}) = {t_hi:.10g}"
                )


def _fast_start(view: DesignView, threshold: float, cfg: TestConfig) -> float:
    """Initial l_max = c(n) l_OLS(alpha_mod) / (l_OLS(alpha_OLS) Q)."""
    ols_point = anchor_alpha(view, 0.0)
    anchor_point = modified_tsls(view).alpha
    bound = cfg.scale(view.n, view.q) * view.losses(anchor_point)[0] / (view.losses(ols_point)[0] * threshold)
    return max(bound, 2.0)


def lambda_star_search(view: DesignView, cfg: PulseConfig | None = None) -> float:
    """Binary search for lambda*, returning l_max with l_max - lambda* in [0, 1/N].

    Beyond about 1e9 the float spacing exceeds 1/N and the bracket ends one ulp wide instead.

    Returns inf when TSLS is rejected in an over-identified setup and 0 when OLS is accepted.
    """
    cfg = cfg or PulseConfig()
    test_cfg = cfg.test_config
    check_gram(view.zz, "Z'Z")
    threshold = test_cfg.threshold(view.q)

    if view.identification is Identification.OVER:
        tsls = tsls_estimate(view)
        if test_statistic(view, tsls.alpha, test_cfg).statistic >= threshold:
            _log.info("TSLS is rejected, lambda* is infinite.")
            return math.inf

    path_test = _PathTest(view, test_cfg)
    if path_test(0.0).accepted:
        return 0.0

    lower = 0.0
    upper = 2.0
    if cfg.fast_start and view.identification is not Identification.OVER:
        upper = _fast_start(view, threshold, test_cfg)
    while not path_test(upper).accepted:
        if upper >= LAMBDA_CAP:
            raise NonMonotoneDetected(
                f"Test still rejects at lambda = {LAMBDA_CAP:g} although the search should be feasible"
            )
        lower, upper = upper, min(upper**2, LAMBDA_CAP)
        _log.debug(f"Growing the bracket to [{lower:.6g}, {upper:.6g}].")

    step = 1 / cfg.precision
    while upper - lower > step:
        middle = (lower + upper) / 2
        if not lower < middle < upper:
            # Adjacent floats: the bracket is as narrow as the float spacing at lambda* allows.
            _log.debug(f"Stopping at float resolution, bracket width {upper - lower:.3g} > 1/N.")
            break
        if path_test(middle).accepted:
            upper = middle
        else:
            lower = middle
    path_test.check_monotone(threshold)
    _log.info(f"lambda* = {upper:.10g} after {len(path_test.history)} test evaluations.")
    return upper


def pulse_estimate(view: DesignView, cfg: PulseConfig | None = None) -> PulseResult:
    """PULSE+: fallback when TSLS is rejected, OLS when OLS is accepted, else the K-class at kappa*."""
    cfg = cfg or PulseConfig()
    test_cfg = cfg.test_config
    lam = lambda_star_search(view, cfg)

    if math.isinf(lam):
        if cfg.fallback is None:
            raise DualInfeasible("TSLS is rejected and no fallback estimator was requested")
        _log.warning(f"TSLS outside the interior of the acceptance region, falling back to {cfg.fallback.label}.")
        fallback = estimate(view, cfg.fallback)
        return PulseResult(
            alpha=fallback.alpha,
            lambda_star=math.inf,
            kappa_star=None,
            message=PulseMessage.TSLS_REJECTED_FALLBACK,
            test_at_solution=test_statistic(view, fallback.alpha, test_cfg),
            fallback_used=True,
            fallback=fallback,
        )

    if lam == 0.0:
        alpha = ols_estimate(view).alpha
        message = PulseMessage.OLS_ACCEPTED
        _log.info("OLS is accepted.")
    else:
        alpha = anchor_alpha(view, lam)
        message = PulseMessage.NONE
    return PulseResult(
        alpha=alpha,
        lambda_star=lam,
        kappa_star=_kappa(lam),
        message=message,
        test_at_solution=test_statistic(view, alpha, test_cfg),
        fallback_used=False,
    )
