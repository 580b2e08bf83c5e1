import numpy as np
import pytest

from pulse_iv.data.design import DesignView


def simulate_design(
    n: int,
    q: int,
    d: int = 1,
    q1: int = 0,
    strength: float = 1.0,
    confounding: float = 1.0,
    direct: float = 0.0,
    seed: int = 0,
) -> DesignView:
    """Confounded linear IV data with unit coefficients and centered columns.

    The structural error of y is made orthogonal to A in-sample, so TSLS recovers the unit
    coefficients exactly unless `direct` adds an effect of the last instrument on y.
    """
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, q))
    a = a - a.mean(axis=0)
    h = rng.standard_normal(n)
    loadings = strength * rng.uniform(0.5, 1.5, size=(q, d))
    x = a @ loadings + confounding * h[:, None] + rng.standard_normal((n, d))
    x = x - x.mean(axis=0)
    u = confounding * h + rng.standard_normal(n)
    u = u - a @ np.linalg.lstsq(a, u, rcond=None)[0]
    u = u - u.mean()
    z = np.column_stack([x, a[:, :q1]])
    y = z.sum(axis=1) + u + direct * a[:, -1]
    return DesignView.from_arrays(y, z, a, d1=d)


def mixed_design(seed: int) -> DesignView:
    """Seeded instance cycling through under-, just- and over-identified setups."""
    d = 2 if seed % 3 == 0 else 1 + (seed // 3) % 2
    q = {0: 1, 1: d, 2: d + 2}[seed % 3]
    return simulate_design(n=60 + 7 * seed, q=q, d=d, seed=1000 + seed)


@pytest.fixture
def over_view() -> DesignView:
    return simulate_design(n=200, q=3, seed=1)


@pytest.fixture
def just_view() -> DesignView:
    return simulate_design(n=400, q=1, seed=2)


@pytest.fixture
def under_view() -> DesignView:
    return simulate_design(n=400, q=1, d=2, seed=3)


@pytest.fixture
def invalid_view() -> DesignView:
    """Over-identified with a direct effect of one instrument on y: TSLS is rejected."""
    return simulate_design(n=400, q=3, direct=2.0, seed=4)
