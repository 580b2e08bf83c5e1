"""Model factories for the simulation designs and their confounding-strength summaries."""
import math

import numpy as np

from pulse_iv.errors import InvalidSpec, SingularGram
from pulse_iv.sem.model import SemModel, VariableRole

T, E, H = VariableRole.TARGET, VariableRole.ENDOGENOUS, VariableRole.HIDDEN

UNIF_COEFFICIENT = (-2.0, 2.0)
UNIF_NOISE_VARIANCE = (0.1, 1.0)
UNIF_UNDERID_EFFECT = (1.0, 2.0)
UNIF_UNDERID_ANCHOR = (0.1, 1.0)


def xi_from_r2(r2: float, q: int) -> float:
    """Per-instrument strength with first-stage R^2 = q xi^2 / (q xi^2 + 1)."""
    if not 0 < r2 < 1:
        raise InvalidSpec(f"R^2 must lie in (0, 1), got {r2}")
    if q < 1:
        raise InvalidSpec(f"q must be positive, got {q}")
    return math.sqrt(r2 / (q * (1 - r2)))


def robustness_e1(gamma: float = 1.0, noise_corr: float = 0.5) -> SemModel:
    """X := A + U_X, Y := gamma X + U_Y with corr(U_X, U_Y) = noise_corr."""
    return SemModel(
        b=[[0.0, 0.0], [gamma, 0.0]],
        m=[[0.0, 1.0]],
        noise_cov=[[1.0, noise_corr], [noise_corr, 1.0]],
        anchor_cov=[[1.0]],
        roles=(T, E),
    )


def univariate_weak(q: int, rho: float, r2: float, gamma: float = 1.0) -> SemModel:
    """X := A'xi + U_X, Y := gamma X + U_Y with A ~ N(0, I_q) and corr(U_X, U_Y) = rho."""
    xi = xi_from_r2(r2, q)
    m = np.zeros((q, 2))
    m[:, 1] = xi
    return SemModel(
        b=[[0.0, 0.0], [gamma, 0.0]],
        m=m,
        noise_cov=[[1.0, rho], [rho, 1.0]],
        anchor_cov=np.eye(q),
        roles=(T, E),
    )


def multivariate_confounded(
    xi: np.ndarray,
    delta: np.ndarray,
    mu: np.ndarray,
    sigma2: np.ndarray,
    gamma=(0.0, 0.0),
) -> SemModel:
    """X := xi'A + delta'H + N_X, Y := gamma'X + mu'H + N_Y over [Y, X1, X2, H1, H2]."""
    xi, delta, mu, sigma2 = (np.asarray(v, dtype=float) for v in (xi, delta, mu, sigma2))
    b = np.zeros((5, 5))
    b[1:3, 0] = gamma
    b[3:5, 1:3] = delta
    b[3:5, 0] = mu
    m = np.zeros((2, 5))
    m[:, 1:3] = xi
    return SemModel(
        b=b,
        m=m,
        noise_cov=np.diag([1.0, sigma2[0], sigma2[1], 1.0, 1.0]),
        anchor_cov=np.eye(2),
        roles=(T, E, E, H, H),
    )


def random_multivariate(rng: np.random.Generator, gamma=(0.0, 0.0)) -> tuple[SemModel, dict]:
    """Draw xi, delta, mu ~ Unif(-2, 2) and sigma^2 ~ Unif(0.1, 1)."""
    xi = rng.uniform(*UNIF_COEFFICIENT, size=(2, 2))
    delta = rng.uniform(*UNIF_COEFFICIENT, size=(2, 2))
    mu = rng.uniform(*UNIF_COEFFICIENT, size=2)
    sigma2 = rng.uniform(*UNIF_NOISE_VARIANCE, size=2)
    model = multivariate_confounded(xi, delta, mu, sigma2, gamma)
    return model, {"rho_norm": rho_norm_multivariate(mu, delta, sigma2)}


def multivariate_fixed_noise(xi: np.ndarray, eta: float, phi1: float, phi2: float, gamma=(0.0, 0.0)) -> SemModel:
    """X := xi'A + U_X, Y := gamma'X + U_Y with Var(U_X1, U_X2, U_Y) = [[1, eta, phi1], [eta, 1, phi2], [phi1, phi2, 1]]."""
    b = np.zeros((3, 3))
    b[1:3, 0] = gamma
    m = np.zeros((2, 3))
    m[:, 1:3] = np.asarray(xi, dtype=float)
    return SemModel(
        b=b,
        m=m,
        noise_cov=[[1.0, phi1, phi2], [phi1, 1.0, eta], [phi2, eta, 1.0]],
        anchor_cov=np.eye(2),
        roles=(T, E, E),
    )


def underid_e3(eta: float = 1.0, delta1: float = 1.0, delta2: float = 1.0, gamma: float = 1.0, beta: float = 1.0) -> SemModel:
    """X1 := eta A + delta1 H + e1, Y := beta X1 + delta2 H + eY, X2 := gamma Y + e2 over [Y, X1, X2, H]."""
    b = np.zeros((4, 4))
    b[1, 0] = beta
    b[3, 0] = delta2
    b[3, 1] = delta1
    b[0, 2] = gamma
    m = np.zeros((1, 4))
    m[0, 1] = eta
    return SemModel(b=b, m=m, noise_cov=np.eye(4), anchor_cov=[[1.0]], roles=(T, E, E, H))


def random_underid(rng: np.random.Generator) -> tuple[SemModel, dict]:
    """Draw beta, delta1, delta2, gamma ~ Unif(1, 2) and eta ~ Unif(0.1, 1)."""
    beta, delta1, delta2, gamma = rng.uniform(*UNIF_UNDERID_EFFECT, size=4)
    eta = rng.uniform(*UNIF_UNDERID_ANCHOR)
    params = {"eta": eta, "delta1": delta1, "delta2": delta2, "gamma": gamma, "beta": beta}
    return underid_e3(**params), params


def rho_norm_from_cov(s_ux: np.ndarray, s_uxuy: np.ndarray, s_uy: float) -> float:
    """||Sigma_UX^{-1/2} Sigma_UXUY Sigma_UY^{-1/2}||."""
    s_ux = np.atleast_2d(np.asarray(s_ux, dtype=float))
    s_uxuy = np.atleast_1d(np.asarray(s_uxuy, dtype=float))
    try:
        squared = s_uxuy @ np.linalg.solve(s_ux, s_uxuy) / s_uy
    except np.linalg.LinAlgError as e:
        raise SingularGram("Sigma_UX", 0.0) from e
    return math.sqrt(max(float(squared), 0.0))


def rho_norm_multivariate(mu: np.ndarray, delta: np.ndarray, sigma2: np.ndarray) -> float:
    mu, delta = np.asarray(mu, dtype=float), np.asarray(delta, dtype=float)
    return rho_norm_from_cov(
        delta.T @ delta + np.diag(np.asarray(sigma2, dtype=float)),
        delta.T @ mu,
        float(mu @ mu) + 1,
    )


def rho_norm_fixed_noise(eta: float, phi1: float, phi2: float) -> float:
    """sqrt((phi1^2 + phi2^2 - 2 eta phi1 phi2) / (1 - eta^2))."""
    return rho_norm_from_cov([[1.0, eta], [eta, 1.0]], [phi1, phi2], 1.0)
