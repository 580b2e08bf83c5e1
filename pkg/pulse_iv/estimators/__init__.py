from pulse_iv.estimators.dispatch import estimate
from pulse_iv.estimators.kclass import anchor_estimate, kclass_estimate, ols_estimate, tsls_estimate
from pulse_iv.estimators.liml import fuller_estimate, fuller_kappa, liml_estimate, liml_kappa
from pulse_iv.estimators.modified_tsls import modified_tsls
from pulse_iv.estimators.spec import EstimateResult, EstimatorKind, EstimatorSpec, parse_estimator
