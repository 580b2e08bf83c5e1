import logging

import numpy as np
import scipy.linalg

from pulse_iv.constants import RCOND_THRESHOLD
from pulse_iv.data.dataset import Identification
from pulse_iv.data.design import DesignView, reciprocal_condition
from pulse_iv.errors import InfeasibleConstraint
from pulse_iv.estimators.spec import Diagnostics, EstimateResult, EstimatorKind, EstimatorSpec

_log = logging.getLogger(__name__)

# Relative violation of A'Z alpha = A'y tolerated in the returned point.
CONSTRAINT_TOLERANCE = 1e-8


def modified_tsls(view: DesignView) -> EstimateResult:
    """Least-squares point of the solution space {alpha : A'Z alpha = A'y}.

    Solves the KKT system of the equality-constrained problem
        [2 Z'Z  Z'A] [alpha]   [2 Z'y]
        [A'Z    0  ] [mu   ] = [A'y  ]
    and falls back to the pseudo-inverse when the block is rank deficient.
    """
    if view.identification is Identification.OVER:
        raise InfeasibleConstraint(
            f"A'Z alpha = A'y has no solution in general with q={view.q} > {view.p} coefficients"
        )
    p, q = view.p, view.q
    kkt = np.block([[2 * view.zz, view.az.T], [view.az, np.zeros((q, q))]])
    rhs = np.concatenate([2 * view.zy, view.ay])
    rcond = reciprocal_condition(kkt)
    if rcond < RCOND_THRESHOLD:
        _log.info(f"KKT block is rank deficient (rcond={rcond:.2e}), using the pseudo-inverse.")
        solution = scipy.linalg.pinv(kkt, rtol=RCOND_THRESHOLD) @ rhs
    else:
        solution = scipy.linalg.solve(kkt, rhs, assume_a="sym")
    alpha = solution[:p]

    violation = np.linalg.norm(view.az @ alpha - view.ay)
    scale = max(np.linalg.norm(view.ay), np.linalg.norm(view.az) * np.linalg.norm(alpha), 1.0)
    if violation > CONSTRAINT_TOLERANCE * scale:
        raise InfeasibleConstraint(f"Could not satisfy A'Z alpha = A'y (violation {violation:.3e})")
    return EstimateResult(
        alpha=alpha,
        kappa_used=None,
        lambda_used=None,
        diagnostics=Diagnostics(
            identification=view.identification,
            condition={**view.condition, "KKT": rcond},
        ),
        estimator=EstimatorSpec(EstimatorKind.MODIFIED_TSLS),
        names=view.names,
    )
