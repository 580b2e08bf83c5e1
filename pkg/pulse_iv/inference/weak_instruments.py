from dataclasses import dataclass
import logging

import numpy as np

from pulse_iv.data.design import DesignView, check_gram, inverse_sqrt
from pulse_iv.errors import InsufficientRows, InvalidSpec

_log = logging.getLogger(__name__)

RULE_OF_THUMB = 10.0


@dataclass(frozen=True)
class WeakInstrumentReport:
    """Concentration matrix G_n, its smallest eigenvalue and the > 10 rule of thumb."""

    g_matrix: np.ndarray
    min_eigenvalue: float
    rule_of_thumb_pass: bool


def weak_instrument_stat(view: DesignView) -> WeakInstrumentReport:
    """G_n = Sigma^{-1/2} X_*'P_A X_* Sigma^{-1/2} / q with Sigma = X_*'P_A^perp X_* / (n - q)."""
    if view.d1 == 0:
        raise InvalidSpec("Weak-instrument diagnostics need at least one included endogenous regressor")
    if view.n <= view.q:
        raise InsufficientRows(f"Weak-instrument diagnostics need n > q, got n={view.n}, q={view.q}")
    x = view.x_star
    projected = view.aa_inv_sqrt @ (view.a.T @ x)
    explained = projected.T @ projected
    sigma = (x.T @ x - explained) / (view.n - view.q)
    check_gram(sigma, "X'P_A^perp X")
    root = inverse_sqrt(sigma)
    g = root @ explained @ root / view.q
    g = (g + g.T) / 2
    min_eigenvalue = float(np.linalg.eigvalsh(g)[0])
    if min_eigenvalue <= RULE_OF_THUMB:
        _log.info(f"Weak instruments: lambda_min(G_n) = {min_eigenvalue:.4g} <= {RULE_OF_THUMB:g}.")
    return WeakInstrumentReport(
        g_matrix=g,
        min_eigenvalue=min_eigenvalue,
        rule_of_thumb_pass=min_eigenvalue > RULE_OF_THUMB,
    )
