from dataclasses import dataclass, field
from enum import Enum, auto
import math

import numpy as np

from pulse_iv.data.dataset import Identification
from pulse_iv.errors import InvalidSpec
from pulse_iv.utils import closest_name


class EstimatorKind(Enum):
    """List of estimators."""

    OLS = auto()
    TSLS = auto()
    KCLASS = auto()
    ANCHOR = auto()
    LIML = auto()
    FULLER = auto()
    MODIFIED_TSLS = auto()
    PULSE = auto()


_SPELLINGS = {
    "ols": EstimatorKind.OLS,
    "tsls": EstimatorKind.TSLS,
    "kclass": EstimatorKind.KCLASS,
    "anchor": EstimatorKind.ANCHOR,
    "liml": EstimatorKind.LIML,
    "fuller": EstimatorKind.FULLER,
    "modified-tsls": EstimatorKind.MODIFIED_TSLS,
    "pulse": EstimatorKind.PULSE,
}
_NEEDS_PARAMETER = {EstimatorKind.KCLASS, EstimatorKind.ANCHOR, EstimatorKind.FULLER}


@dataclass(frozen=True)
class EstimatorSpec:
    """Estimator kind plus its hyperparameter.

    The parameter is kappa for KCLASS, lambda for ANCHOR, a for FULLER and p_min for PULSE
    (None means the configured default level).
    """

    kind: EstimatorKind
    parameter: float | None = None

    def __post_init__(self):
        if self.kind in _NEEDS_PARAMETER and self.parameter is None:
            raise InvalidSpec(f"{self.kind.name} needs a parameter")
        if self.parameter is None:
            return
        if self.kind not in _NEEDS_PARAMETER and self.kind is not EstimatorKind.PULSE:
            raise InvalidSpec(f"{self.kind.name} takes no parameter")
        if not math.isfinite(self.parameter):
            raise InvalidSpec(f"{self.kind.name} parameter must be finite, got {self.parameter}")
        match self.kind:
            case EstimatorKind.ANCHOR if self.parameter <= -1:
                raise InvalidSpec(f"Anchor regression needs lambda > -1, got {self.parameter}")
            case EstimatorKind.FULLER if self.parameter <= 0:
                raise InvalidSpec(f"Fuller needs a > 0, got {self.parameter}")
            case EstimatorKind.PULSE if not 0 < self.parameter < 1:
                raise InvalidSpec(f"PULSE needs p_min in (0, 1), got {self.parameter}")

    @property
    def label(self) -> str:
        """Short column label, e.g. FUL(4), K(0.75) or PULSE(10)."""
        match self.kind:
            case EstimatorKind.KCLASS:
                return f"K({self.parameter:g})"
            case EstimatorKind.ANCHOR:
                return f"AR({self.parameter:g})"
            case EstimatorKind.FULLER:
                return f"FUL({self.parameter:g})"
            case EstimatorKind.MODIFIED_TSLS:
                return "TSLS.mod"
            case EstimatorKind.PULSE if self.parameter is not None:
                return f"PULSE({100 * self.parameter:g})"
            case _:
                return self.kind.name

    def __str__(self) -> str:
        name = next(k for k, v in _SPELLINGS.items() if v is self.kind)
        return name if self.parameter is None else f"{name}:{self.parameter:g}"


def parse_estimator(text: str) -> EstimatorSpec:
    """Parse 'ols', 'fuller:4', 'kclass:0.75', 'anchor:3', 'pulse' or 'pulse:0.1'."""
    name, _, parameter = text.strip().lower().partition(":")
    name = name.replace("_", "-")
    if name not in _SPELLINGS:
        suggestion = closest_name(name, list(_SPELLINGS))
        hint = f" (did you mean '{suggestion}'?)" if suggestion else ""
        raise InvalidSpec(f"Unknown estimator '{text}'{hint}")
    try:
        value = float(parameter) if parameter else None
    except ValueError as e:
        raise InvalidSpec(f"Could not parse parameter of estimator '{text}'") from e
    return EstimatorSpec(kind=_SPELLINGS[name], parameter=value)


@dataclass(frozen=True)
class Diagnostics:
    identification: Identification
    condition: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class EstimateResult:
    """Coefficients ordered [included endogenous..., included exogenous...]."""

    alpha: np.ndarray
    kappa_used: float | None
    lambda_used: float | None
    diagnostics: Diagnostics
    estimator: EstimatorSpec | None = None
    names: tuple[str, ...] = ()
    # Set when the estimate comes from PULSE; holds a PulseResult.
    pulse: object | None = None

    def as_dict(self) -> dict:
        return {
            "estimator": self.estimator.label if self.estimator else None,
            "coefficients": dict(zip(self.names, self.alpha.tolist())) if self.names else self.alpha.tolist(),
            "kappa": self.kappa_used,
            "lambda": self.lambda_used,
            "identification": self.diagnostics.identification.value,
            "warnings": list(self.diagnostics.warnings),
        }
