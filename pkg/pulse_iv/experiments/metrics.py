from dataclasses import dataclass, field
from enum import Enum
import logging
import math

import numpy as np

from pulse_iv.constants import PSD_SLACK
from pulse_iv.errors import DimensionMismatch, DivisionByZero

_log = logging.getLogger(__name__)


class MseOrder(Enum):
    A_LESS_OR_EQUAL = "ALessOrEqual"
    B_LESS_OR_EQUAL = "BLessOrEqual"
    INCOMPARABLE = "Incomparable"
    EQUAL = "Equal"


def _is_psd(matrix: np.ndarray, scale: float) -> bool:
    eigenvalues = np.linalg.eigvalsh((matrix + matrix.T) / 2)
    return bool(eigenvalues[0] >= -PSD_SLACK * scale)


def mse_partial_order(mse_a: np.ndarray, mse_b: np.ndarray) -> MseOrder:
    """Order two MSE matrices in the Loewner (PSD cone) order."""
    mse_a, mse_b = np.atleast_2d(mse_a), np.atleast_2d(mse_b)
    if mse_a.shape != mse_b.shape or mse_a.shape[0] != mse_a.shape[1]:
        raise DimensionMismatch(f"Cannot compare MSE matrices of shapes {mse_a.shape} and {mse_b.shape}")
    scale = max(np.trace(mse_a), np.trace(mse_b), np.finfo(float).tiny)
    a_below = _is_psd(mse_b - mse_a, scale)
    b_below = _is_psd(mse_a - mse_b, scale)
    if a_below and b_below:
        return MseOrder.EQUAL
    if a_below:
        return MseOrder.A_LESS_OR_EQUAL
    if b_below:
        return MseOrder.B_LESS_OR_EQUAL
    return MseOrder.INCOMPARABLE


def relative_change(metric_competitor: float, metric_pulse: float) -> float:
    """(competitor - pulse) / pulse; positive means PULSE is better."""
    if metric_pulse == 0:
        raise DivisionByZero("Relative change against a zero PULSE metric")
    return (metric_competitor - metric_pulse) / metric_pulse


@dataclass(frozen=True)
class EstimatorPerformance:
    """Monte Carlo summary of one estimator in one cell.

    Variances use ddof=0, so trace(mse) = sum(variance) + ||bias||^2.
    """

    label: str
    mean: np.ndarray
    bias: np.ndarray
    variance: np.ndarray
    mse: np.ndarray
    iqr: np.ndarray
    median_error: float
    repetitions_used: int
    failures: dict = field(default_factory=dict)

    @property
    def trace(self) -> float:
        return float(np.trace(self.mse))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.mse))

    @property
    def rmse(self) -> float:
        return math.sqrt(self.trace)

    @property
    def bias_norm(self) -> float:
        return float(np.linalg.norm(self.bias))

    def scalars(self) -> dict:
        return {
            "mse_trace": self.trace,
            "mse_det": self.det,
            "rmse": self.rmse,
            "bias_norm": self.bias_norm,
            "median_error": self.median_error,
        }


def summarize(label: str, estimates: np.ndarray, target: np.ndarray, failures: dict | None = None) -> EstimatorPerformance:
    """Summarize the rows of `estimates` (one per successful repetition, in repetition order)."""
    estimates = np.atleast_2d(np.asarray(estimates, dtype=float))
    target = np.asarray(target, dtype=float).ravel()
    p = target.size
    if estimates.size == 0:
        nan = np.full(p, np.nan)
        return EstimatorPerformance(
            label=label,
            mean=nan,
            bias=nan,
            variance=nan,
            mse=np.full((p, p), np.nan),
            iqr=nan,
            median_error=math.nan,
            repetitions_used=0,
            failures=dict(failures or {}),
        )
    errors = estimates - target
    mean = estimates.mean(axis=0)
    q75, q25 = np.quantile(estimates, [0.75, 0.25], axis=0, method="linear")
    return EstimatorPerformance(
        label=label,
        mean=mean,
        bias=mean - target,
        variance=estimates.var(axis=0),
        mse=errors.T @ errors / estimates.shape[0],
        iqr=q75 - q25,
        median_error=float(np.median(np.linalg.norm(errors, axis=1))),
        repetitions_used=estimates.shape[0],
        failures=dict(failures or {}),
    )


@dataclass(frozen=True)
class WeakInstrumentSummary:
    """Both readings of the average first-stage strength: mean of lambda_min(G_n) and lambda_min of mean G_n."""

    mean_min_eigenvalue: float
    min_eigenvalue_of_mean: float
    repetitions_used: int


def summarize_weak_instruments(g_matrices: list[np.ndarray]) -> WeakInstrumentSummary | None:
    if not g_matrices:
        return None
    stacked = np.stack(g_matrices)
    return WeakInstrumentSummary(
        mean_min_eigenvalue=float(np.mean([np.linalg.eigvalsh(g)[0] for g in stacked])),
        min_eigenvalue_of_mean=float(np.linalg.eigvalsh(stacked.mean(axis=0))[0]),
        repetitions_used=len(g_matrices),
    )


@dataclass(frozen=True)
class PerformanceReport:
    """All estimators of one grid cell."""

    cell: dict
    target: np.ndarray
    estimators: dict[str, EstimatorPerformance]
    weak_instruments: WeakInstrumentSummary | None = None
    extras: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    repetitions: int = 0

    def comparisons(self, reference: str) -> dict[str, dict]:
        """Relative changes and MSE order of every other estimator against `reference`."""
        if reference not in self.estimators:
            return {}
        base = self.estimators[reference]
        rows = {}
        for label, other in self.estimators.items():
            if label == reference or other.repetitions_used == 0 or base.repetitions_used == 0:
                continue
            row = {}
            for metric, value in other.scalars().items():
                try:
                    row[f"rel_change_{metric}"] = relative_change(value, base.scalars()[metric])
                except DivisionByZero:
                    row[f"rel_change_{metric}"] = math.nan
            row["mse_order"] = mse_partial_order(base.mse, other.mse).value
            rows[label] = row
        return rows
