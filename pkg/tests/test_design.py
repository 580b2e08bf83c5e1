import numpy as np
import pytest

from pulse_iv.data.dataset import Dataset, Identification, ModelPartition
from pulse_iv.data.design import DesignView, inverse_sqrt, iv_loss, ols_loss, projection_apply, reciprocal_condition
from pulse_iv.errors import DimensionMismatch, SingularGram


def qr_projection(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(a)
    return q @ (q.T @ v)


def test_projection_matches_qr_oracle():
    rng = np.random.default_rng(10)
    a = rng.normal(size=(10, 2))
    v = rng.normal(size=10)
    projected = projection_apply(a, v)
    assert np.allclose(projected, qr_projection(a, v), atol=1e-10)
    assert np.linalg.norm(projected) <= np.linalg.norm(v)
    assert np.allclose(projection_apply(a, projected), projected, atol=1e-10)


def test_projection_fixes_span_and_kills_complement():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(12, 3))
    in_span = a @ np.array([1.0, -2.0, 0.5])
    assert np.allclose(projection_apply(a, in_span), in_span, atol=1e-10)
    orthogonal = rng.normal(size=12)
    orthogonal -= qr_projection(a, orthogonal)
    assert np.allclose(projection_apply(a, orthogonal), 0.0, atol=1e-10)


def test_projection_rejects_singular_gram():
    a = np.column_stack([np.arange(5.0), 2 * np.arange(5.0)])
    with pytest.raises(SingularGram) as error:
        projection_apply(a, np.ones(5))
    assert error.value.matrix == "A'A"
    assert error.value.exit_code == 4


def test_reciprocal_condition_of_identity_and_zero():
    assert reciprocal_condition(np.eye(3)) == 1.0
    assert reciprocal_condition(np.zeros((2, 2))) == 0.0


def test_inverse_sqrt_is_symmetric_root():
    matrix = np.array([[4.0, 1.0], [1.0, 3.0]])
    root = inverse_sqrt(matrix)
    assert np.allclose(root, root.T)
    assert np.allclose(root @ matrix @ root, np.eye(2), atol=1e-12)


def test_losses_match_definitions(over_view):
    rng = np.random.default_rng(12)
    alpha = rng.normal(size=over_view.p)
    residual = np.array([over_view.y[i] - over_view.z[i] @ alpha for i in range(over_view.n)])
    assert np.isclose(ols_loss(over_view, alpha), residual @ residual / over_view.n, rtol=1e-12)
    projected = qr_projection(over_view.a, residual)
    assert np.isclose(iv_loss(over_view, alpha), residual @ projected / over_view.n, rtol=1e-10)


def test_iv_loss_bounded_by_ols_loss(over_view):
    rng = np.random.default_rng(13)
    for _ in range(50):
        alpha = rng.normal(scale=3.0, size=over_view.p)
        ols, iv = over_view.losses(alpha)
        assert 0.0 <= iv <= ols


def test_ols_loss_at_zero_and_at_interpolant():
    rng = np.random.default_rng(14)
    z = rng.normal(size=(3, 3))
    a = rng.normal(size=(3, 3))
    alpha = np.array([1.0, -1.0, 2.0])
    view = DesignView.from_arrays(z @ alpha, z, a)
    assert ols_loss(view, alpha) == pytest.approx(0.0, abs=1e-20)
    assert ols_loss(view, np.zeros(3)) == pytest.approx(view.yy / 3)


def test_ols_loss_strictly_convex(over_view):
    rng = np.random.default_rng(15)
    first, second = rng.normal(size=(2, over_view.p))
    middle = ols_loss(over_view, (first + second) / 2)
    average = (ols_loss(over_view, first) + ols_loss(over_view, second)) / 2
    assert middle < average - 1e-12 * average


def test_residual_rejects_wrong_length(over_view):
    with pytest.raises(DimensionMismatch):
        over_view.residual(np.zeros(over_view.p + 1))


def test_cached_products(over_view):
    assert np.allclose(over_view.zpz, over_view.z.T @ qr_projection(over_view.a, over_view.z), atol=1e-10)
    assert np.allclose(over_view.zpy, over_view.z.T @ qr_projection(over_view.a, over_view.y), atol=1e-10)
    assert over_view.identification is Identification.OVER
    assert over_view.identification_degree == 2


def test_from_dataset_orders_endogenous_then_included_exogenous():
    rng = np.random.default_rng(16)
    ds = Dataset(
        y=rng.normal(size=30),
        x=rng.normal(size=(30, 2)),
        a=rng.normal(size=(30, 3)),
        endogenous_names=("x1", "x2"),
        exogenous_names=("w", "z1", "z2"),
    )
    partition = ModelPartition.for_dataset(ds, included_exogenous=(0,), included_endogenous=(1,))
    view = DesignView.from_dataset(ds, partition)
    assert view.names == ("x2", "w")
    assert (view.d1, view.q1, view.q) == (1, 1, 3)
    assert np.array_equal(view.z[:, 0], ds.x[:, 1])
    assert np.array_equal(view.z[:, 1], ds.a[:, 0])


def test_centering_commutes_with_projection():
    rng = np.random.default_rng(17)
    a = rng.normal(loc=2.0, size=(40, 2))
    v = rng.normal(loc=-1.0, size=40)
    a_centered = a - a.mean(axis=0)
    v_centered = v - v.mean()
    projected = projection_apply(a_centered, v_centered)
    assert np.allclose(projected, projection_apply(a_centered, v), atol=1e-10)


def test_view_leaves_caller_arrays_writeable():
    rng = np.random.default_rng(19)
    y, x, a = rng.normal(size=20), rng.normal(size=(20, 1)), rng.normal(size=(20, 2))
    view = DesignView.from_arrays(y, x, a)
    assert x.flags.writeable and a.flags.writeable and y.flags.writeable
    original = a[0, 0]
    a[0, 0] = original + 1.0
    assert view.a[0, 0] == original
    assert not view.a.flags.writeable
