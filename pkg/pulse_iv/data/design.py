from dataclasses import dataclass

import numpy as np
import scipy.linalg

from pulse_iv.constants import EIG_CLAMP, RCOND_THRESHOLD
from pulse_iv.data.dataset import Dataset, Identification, ModelPartition
from pulse_iv.errors import DimensionMismatch, SingularGram


def reciprocal_condition(matrix: np.ndarray) -> float:
    """Ratio of smallest to largest singular value (0 for an all-zero or empty matrix)."""
    if matrix.size == 0:
        return 1.0
    singular_values = np.linalg.svd(matrix, compute_uv=False)
    if singular_values[0] == 0:
        return 0.0
    return float(singular_values[-1] / singular_values[0])


def check_gram(matrix: np.ndarray, name: str, error: type = SingularGram) -> float:
    """Raise `error` if matrix fails the reciprocal condition check, else return rcond."""
    rcond = reciprocal_condition(matrix)
    if rcond < RCOND_THRESHOLD:
        raise error(name, rcond)
    return rcond


def inverse_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root with eigenvalues clamped at EIG_CLAMP * max eigenvalue."""
    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    floor = EIG_CLAMP * max(eigenvalues[-1], 0.0)
    eigenvalues = np.maximum(eigenvalues, floor)
    return (eigenvectors / np.sqrt(eigenvalues)) @ eigenvectors.T


def projection_apply(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Return P_A v = A (A'A)^{-1} A' v."""
    a = np.asarray(a, dtype=float)
    v = np.asarray(v, dtype=float)
    if a.ndim != 2 or a.shape[0] != v.shape[0]:
        raise DimensionMismatch(f"Cannot project vector of length {v.shape[0]} onto A with shape {a.shape}")
    aa = a.T @ a
    check_gram(aa, "A'A")
    return a @ scipy.linalg.solve(aa, a.T @ v, assume_a="pos")


@dataclass(frozen=True)
class DesignView:
    """Regressor matrix Z = [X_* A_*], all exogenous variables A and their cached Gram products.

    Built once per dataset; K-class solves only touch the (d1+q1)-sized products.
    """

    y: np.ndarray
    z: np.ndarray
    a: np.ndarray
    d1: int
    names: tuple[str, ...]
    zz: np.ndarray
    aa: np.ndarray
    az: np.ndarray
    zy: np.ndarray
    ay: np.ndarray
    yy: float
    aa_inv_sqrt: np.ndarray
    # W A'Z and W A'y with W = (A'A)^{-1/2}, so Z'P_A Z = pz'pz and Z'P_A y = pz'py.
    pz: np.ndarray
    py: np.ndarray
    condition: dict

    @classmethod
    def from_arrays(
        cls,
        y: np.ndarray,
        z: np.ndarray,
        a: np.ndarray,
        d1: int | None = None,
        names: tuple[str, ...] | None = None,
    ) -> "DesignView":
        # Own copies, frozen below.
        y = np.array(y, dtype=float).ravel()
        z = np.array(z, dtype=float)
        a = np.array(a, dtype=float)
        if z.ndim == 1:
            z = z.reshape(-1, 1)
        if a.ndim == 1:
            a = a.reshape(-1, 1)
        if not (y.shape[0] == z.shape[0] == a.shape[0]):
            raise DimensionMismatch(
                f"y, Z and A must have the same number of rows, got {y.shape[0]}, {z.shape[0]}, {a.shape[0]}"
            )
        d1 = z.shape[1] if d1 is None else d1
        names = names or tuple(f"z{i + 1}" for i in range(z.shape[1]))
        aa = a.T @ a
        condition = {"A'A": check_gram(aa, "A'A"), "Z'Z": reciprocal_condition(z.T @ z)}
        aa_inv_sqrt = inverse_sqrt(aa)
        az = a.T @ z
        ay = a.T @ y
        for array in (y, z, a):
            array.setflags(write=False)
        return cls(
            y=y,
            z=z,
            a=a,
            d1=d1,
            names=tuple(names),
            zz=z.T @ z,
            aa=aa,
            az=az,
            zy=z.T @ y,
            ay=ay,
            yy=float(y @ y),
            aa_inv_sqrt=aa_inv_sqrt,
            pz=aa_inv_sqrt @ az,
            py=aa_inv_sqrt @ ay,
            condition=condition,
        )

    @classmethod
    def from_dataset(cls, ds: Dataset, partition: ModelPartition) -> "DesignView":
        x_star = ds.x[:, list(partition.included_endogenous)]
        a_star = ds.a[:, list(partition.included_exogenous)]
        names = tuple(ds.endogenous_names[i] for i in partition.included_endogenous) + tuple(
            ds.exogenous_names[i] for i in partition.included_exogenous
        )
        return cls.from_arrays(
            y=ds.y,
            z=np.column_stack([x_star, a_star]),
            a=ds.a,
            d1=partition.d1,
            names=names,
        )

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def q(self) -> int:
        return self.a.shape[1]

    @property
    def p(self) -> int:
        """Number of coefficients, d1 + q1."""
        return self.z.shape[1]

    @property
    def q1(self) -> int:
        return self.p - self.d1

    @property
    def identification_degree(self) -> int:
        return self.q - self.p

    @property
    def identification(self) -> Identification:
        return Identification.from_degree(self.identification_degree)

    @property
    def x_star(self) -> np.ndarray:
        return self.z[:, : self.d1]

    @property
    def a_star(self) -> np.ndarray:
        return self.z[:, self.d1 :]

    @property
    def zpz(self) -> np.ndarray:
        return self.pz.T @ self.pz

    @property
    def zpy(self) -> np.ndarray:
        return self.pz.T @ self.py

    def residual(self, alpha: np.ndarray) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float).ravel()
        if alpha.shape[0] != self.p:
            raise DimensionMismatch(f"alpha must have length {self.p}, got {alpha.shape[0]}")
        return self.y - self.z @ alpha

    def losses(self, alpha: np.ndarray) -> tuple[float, float]:
        """(l_OLS, l_IV) at alpha from a single residual evaluation."""
        r = self.residual(alpha)
        s = self.aa_inv_sqrt @ (self.a.T @ r)
        return float(r @ r) / self.n, float(s @ s) / self.n


def ols_loss(view: DesignView, alpha: np.ndarray) -> float:
    """n^{-1} ||y - Z alpha||^2."""
    r = view.residual(alpha)
    return float(r @ r) / view.n


def iv_loss(view: DesignView, alpha: np.ndarray) -> float:
    """n^{-1} (y - Z alpha)' P_A (y - Z alpha)."""
    return view.losses(alpha)[1]
