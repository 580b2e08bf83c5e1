"""Uncorrelatedness test T_n^c(alpha) = c(n) l_IV(alpha) / l_OLS(alpha) and its acceptance region."""
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
import logging

import numpy as np
from scipy import special

from pulse_iv.constants import DEFAULT_P_MIN, ZERO_RESIDUAL
from pulse_iv.data.design import DesignView
from pulse_iv.errors import (
    DegenerateResidual,
    InsufficientRows,
    InvalidProbability,
    InvalidSpec,
    ZeroResidual,
)

_log = logging.getLogger(__name__)


class Scaling(Enum):
    PLAIN = "plain"
    ANDERSON_RUBIN = "ar"

    @classmethod
    def from_name(cls, name: "str | Scaling") -> "Scaling":
        if isinstance(name, Scaling):
            return name
        match str(name).strip().lower():
            case "plain" | "n":
                return cls.PLAIN
            case "ar" | "anderson-rubin" | "anderson_rubin":
                return cls.ANDERSON_RUBIN
            case _:
                raise InvalidSpec(f"Unknown test scaling '{name}', use 'ar' or 'plain'")


@lru_cache(maxsize=256)
def chi2_quantile(q_dof: int, prob: float) -> float:
    """Quantile of the central chi-squared distribution with q_dof degrees of freedom."""
    if int(q_dof) != q_dof or q_dof < 1:
        raise InvalidSpec(f"Degrees of freedom must be a positive integer, got {q_dof}")
    if not 0 < prob < 1:
        raise InvalidProbability(f"Probability must lie in (0, 1), got {prob}")
    return float(2 * special.gammaincinv(q_dof / 2, prob))


def chi2_survival(q_dof: int, statistic: float) -> float:
    """P(chi2_q > statistic)."""
    return float(special.gammaincc(q_dof / 2, max(statistic, 0.0) / 2))


@dataclass(frozen=True)
class TestConfig:
    """Level p_min and scaling c(n) of the test; q is read from the design at evaluation time."""

    # Keeps pytest from collecting the class.
    __test__ = False

    p_min: float = DEFAULT_P_MIN
    scaling: Scaling = Scaling.ANDERSON_RUBIN

    def __post_init__(self):
        if not 0 < self.p_min < 1:
            raise InvalidProbability(f"p_min must lie in (0, 1), got {self.p_min}")
        object.__setattr__(self, "scaling", Scaling.from_name(self.scaling))

    def threshold(self, q: int) -> float:
        return chi2_quantile(q, 1 - self.p_min)

    def scale(self, n: int, q: int) -> float:
        """c(n): n for PLAIN, n - q + Q_{chi2_q}(1 - p_min) for ANDERSON_RUBIN."""
        match self.scaling:
            case Scaling.PLAIN:
                return float(n)
            case Scaling.ANDERSON_RUBIN:
                if n <= q:
                    raise InsufficientRows(f"Anderson-Rubin scaling needs n > q, got n={n}, q={q}")
                return n - q + self.threshold(q)


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    statistic: float
    threshold: float
    accepted: bool
    p_value_bound: float | None = None


def test_from_losses(view: DesignView, ols: float, iv: float, cfg: TestConfig) -> TestResult:
    """Evaluate the test from precomputed losses l_OLS and l_IV."""
    if ols <= ZERO_RESIDUAL * view.yy / view.n:
        raise ZeroResidual(f"l_OLS = {ols:.3e} is numerically zero; the test is undefined")
    statistic = cfg.scale(view.n, view.q) * iv / ols
    threshold = cfg.threshold(view.q)
    return TestResult(
        statistic=statistic,
        threshold=threshold,
        accepted=bool(statistic <= threshold),
        p_value_bound=chi2_survival(view.q, statistic),
    )


# Not a pytest test despite the name.
test_from_losses.__test__ = False


def test_statistic(view: DesignView, alpha: np.ndarray, cfg: TestConfig | None = None) -> TestResult:
    """T_n^c(alpha) against Q_{chi2_q}(1 - p_min); equality counts as accepted."""
    ols, iv = view.losses(alpha)
    return test_from_losses(view, ols, iv, cfg or TestConfig())


test_statistic.__test__ = False


def ar_statistic(view: DesignView, alpha: np.ndarray) -> float:
    """Anderson-Rubin F-form (n - q) / q * l_IV / (l_OLS - l_IV)."""
    if view.n <= view.q:
        raise InsufficientRows(f"Anderson-Rubin statistic needs n > q, got n={view.n}, q={view.q}")
    ols, iv = view.losses(alpha)
    denominator = ols - iv
    if denominator <= ZERO_RESIDUAL * max(ols, view.yy / view.n):
        raise DegenerateResidual("Residual lies in the column space of A")
    return (view.n - view.q) / view.q * iv / denominator


def ar_accepts(view: DesignView, alpha: np.ndarray, p_min: float = DEFAULT_P_MIN) -> bool:
    """T^AR(alpha) <= Q_{chi2_q}(1 - p_min) / q."""
    return ar_statistic(view, alpha) <= chi2_quantile(view.q, 1 - p_min) / view.q
