from pulse_iv.data.design import DesignView
from pulse_iv.errors import InvalidSpec
from pulse_iv.estimators.kclass import anchor_estimate, kclass_estimate, ols_estimate, tsls_estimate
from pulse_iv.estimators.liml import fuller_estimate, liml_estimate
from pulse_iv.estimators.modified_tsls import modified_tsls
from pulse_iv.estimators.spec import EstimateResult, EstimatorKind, EstimatorSpec


def estimate(view: DesignView, spec: EstimatorSpec) -> EstimateResult:
    """Run a closed-form estimator."""
    match spec.kind:
        case EstimatorKind.OLS:
            return ols_estimate(view)
        case EstimatorKind.TSLS:
            return tsls_estimate(view)
        case EstimatorKind.KCLASS:
            return kclass_estimate(view, spec.parameter, spec=spec)
        case EstimatorKind.ANCHOR:
            return anchor_estimate(view, spec.parameter, spec=spec)
        case EstimatorKind.LIML:
            return liml_estimate(view)
        case EstimatorKind.FULLER:
            return fuller_estimate(view, spec.parameter)
        case EstimatorKind.MODIFIED_TSLS:
            return modified_tsls(view)
        case _:
            raise InvalidSpec(f"{spec.kind.name} is not a closed-form estimator")
