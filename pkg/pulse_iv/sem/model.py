"""Linear structural equation models in row form.

Variables V = [Y, X..., H...] satisfy V = V B + A M + eps, so B[i, j] is the direct effect of
variable i on variable j and the reduced form is V = (A M + eps)(I - B)^{-1}.
"""
from dataclasses import dataclass
from enum import Enum
import logging
from pathlib import Path

import numpy as np

from pulse_iv.constants import STATIONARITY_MARGIN
from pulse_iv.data.dataset import Dataset, ModelPartition
from pulse_iv.data.design import check_gram
from pulse_iv.errors import InvalidConfig, NonStationary, SingularPopulationGram
from pulse_iv.utils import load_structured_file

_log = logging.getLogger(__name__)


class VariableRole(Enum):
    TARGET = "target"
    ENDOGENOUS = "endogenous"
    HIDDEN = "hidden"


def psd_sqrt(matrix: np.ndarray, name: str = "covariance") -> np.ndarray:
    """Symmetric square root of a PSD matrix."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if not np.allclose(matrix, matrix.T, atol=1e-12):
        raise InvalidConfig(f"{name} must be symmetric")
    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    scale = max(np.abs(eigenvalues).max(initial=0.0), 1.0)
    if eigenvalues.size and eigenvalues[0] < -1e-12 * scale:
        raise InvalidConfig(f"{name} must be positive semi-definite (smallest eigenvalue {eigenvalues[0]:.3e})")
    return (eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))) @ eigenvectors.T


def _matrix(value, shape: tuple[int, int], name: str) -> np.ndarray:
    array = np.asarray(value, dtype=float)
    if array.shape != shape:
        raise InvalidConfig(f"{name} must have shape {shape}, got {array.shape}")
    if not np.all(np.isfinite(array)):
        raise InvalidConfig(f"{name} contains non-finite entries")
    return array


@dataclass(frozen=True)
class SemModel:
    """Linear SEM over variables [Y, X..., H...] driven by q exogenous variables A.

    b: (p x p) structural matrix, m: (q x p) exogenous loadings, noise_cov: (p x p) covariance
    of eps, anchor_cov/anchor_mean: law of A in the observational setting.
    """

    b: np.ndarray
    m: np.ndarray
    noise_cov: np.ndarray
    anchor_cov: np.ndarray
    roles: tuple[VariableRole, ...]
    names: tuple[str, ...] = ()
    exogenous_names: tuple[str, ...] = ()
    anchor_mean: np.ndarray | None = None

    def __post_init__(self):
        roles = tuple(VariableRole(r) if not isinstance(r, VariableRole) else r for r in self.roles)
        p = len(roles)
        if roles.count(VariableRole.TARGET) != 1:
            raise InvalidConfig("A SEM needs exactly one target variable")
        m = np.atleast_2d(np.asarray(self.m, dtype=float))
        q = m.shape[0]
        b = _matrix(self.b, (p, p), "B")
        m = _matrix(m, (q, p), "M")
        noise_cov = _matrix(self.noise_cov, (p, p), "noise covariance")
        anchor_cov = _matrix(np.atleast_2d(self.anchor_cov), (q, q), "anchor covariance")
        anchor_mean = np.zeros(q) if self.anchor_mean is None else np.asarray(self.anchor_mean, dtype=float)
        if anchor_mean.shape != (q,):
            raise InvalidConfig(f"anchor mean must have length {q}")
        psd_sqrt(noise_cov, "noise covariance")
        if np.linalg.eigvalsh(anchor_cov)[0] <= 0:
            raise InvalidConfig("anchor covariance must be positive definite")

        radius = float(np.abs(np.linalg.eigvals(b)).max(initial=0.0))
        if radius >= 1 - STATIONARITY_MARGIN:
            raise NonStationary(radius)

        names = tuple(self.names) or _default_names(roles)
        exogenous_names = tuple(self.exogenous_names) or tuple(f"A{i + 1}" if q > 1 else "A" for i in range(q))
        if len(names) != p or len(exogenous_names) != q:
            raise InvalidConfig("Number of variable names does not match the model dimensions")
        for attribute, value in (
            ("b", b),
            ("m", m),
            ("noise_cov", noise_cov),
            ("anchor_cov", anchor_cov),
            ("anchor_mean", anchor_mean),
        ):
            value.setflags(write=False)
            object.__setattr__(self, attribute, value)
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "exogenous_names", exogenous_names)

    @property
    def p(self) -> int:
        return len(self.roles)

    @property
    def q(self) -> int:
        return self.m.shape[0]

    @property
    def target_index(self) -> int:
        return self.roles.index(VariableRole.TARGET)

    @property
    def endogenous_indices(self) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.roles) if r is VariableRole.ENDOGENOUS)

    @property
    def hidden_indices(self) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.roles) if r is VariableRole.HIDDEN)

    @property
    def gamma_inv(self) -> np.ndarray:
        """(I - B)^{-1}."""
        return np.linalg.inv(np.eye(self.p) - self.b)

    @property
    def pi(self) -> np.ndarray:
        """Reduced-form loading M (I - B)^{-1}."""
        return self.m @ self.gamma_inv

    def partition(self, included_exogenous=(), included_endogenous=None) -> ModelPartition:
        d = len(self.endogenous_indices)
        return ModelPartition(
            included_endogenous=tuple(range(d)) if included_endogenous is None else tuple(included_endogenous),
            included_exogenous=tuple(included_exogenous),
            d=d,
            q=self.q,
        )


def _default_names(roles: tuple[VariableRole, ...]) -> tuple[str, ...]:
    counts = {VariableRole.ENDOGENOUS: 0, VariableRole.HIDDEN: 0}
    names = []
    for role in roles:
        match role:
            case VariableRole.TARGET:
                names.append("Y")
            case VariableRole.ENDOGENOUS:
                counts[role] += 1
                names.append(f"X{counts[role]}")
            case VariableRole.HIDDEN:
                counts[role] += 1
                names.append(f"H{counts[role]}")
    endogenous = [i for i, r in enumerate(roles) if r is VariableRole.ENDOGENOUS]
    if len(endogenous) == 1:
        names[endogenous[0]] = "X"
    return tuple(names)


class InterventionKind(Enum):
    NONE = "none"
    HARD = "hard"
    STOCHASTIC = "stochastic"


@dataclass(frozen=True)
class InterventionSpec:
    """do(A := v). Hard interventions are stochastic ones with zero covariance."""

    kind: InterventionKind = InterventionKind.NONE
    mean: np.ndarray | None = None
    cov: np.ndarray | None = None

    @classmethod
    def none(cls) -> "InterventionSpec":
        return cls()

    @classmethod
    def hard(cls, value) -> "InterventionSpec":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(kind=InterventionKind.HARD, mean=value, cov=np.zeros((value.size, value.size)))

    @classmethod
    def stochastic(cls, mean, cov) -> "InterventionSpec":
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise InvalidConfig(f"Intervention covariance must have shape {(mean.size, mean.size)}")
        psd_sqrt(cov, "intervention covariance")
        return cls(kind=InterventionKind.STOCHASTIC, mean=mean, cov=cov)

    @classmethod
    def from_mapping(cls, mapping) -> "InterventionSpec":
        """{"kind": "hard", "value": [...]} or {"kind": "stochastic", "mean": [...], "cov": [[...]]}."""
        if not mapping:
            return cls.none()
        match str(mapping.get("kind", "none")).lower():
            case "none":
                return cls.none()
            case "hard":
                return cls.hard(mapping["value"])
            case "stochastic":
                return cls.stochastic(mapping.get("mean", 0.0), mapping["cov"])
            case kind:
                raise InvalidConfig(f"Unknown intervention kind '{kind}'")

    def anchor_law(self, model: SemModel) -> tuple[np.ndarray, np.ndarray]:
        """Mean and covariance of A under this intervention."""
        if self.kind is InterventionKind.NONE:
            return np.asarray(model.anchor_mean), np.asarray(model.anchor_cov)
        if self.mean.size not in (1, model.q):
            raise InvalidConfig(f"Intervention on {self.mean.size} variables, model has q={model.q}")
        mean = np.broadcast_to(self.mean, (model.q,)).astype(float)
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape == (1, 1) and model.q > 1:
            cov = cov[0, 0] * np.eye(model.q)
        if cov.shape != (model.q, model.q):
            raise InvalidConfig(f"Intervention on {cov.shape[0]} variables, model has q={model.q}")
        return mean, cov

    def as_dict(self) -> dict:
        if self.kind is InterventionKind.NONE:
            return {"kind": "none"}
        if self.kind is InterventionKind.HARD:
            return {"kind": "hard", "value": self.mean.tolist()}
        return {"kind": "stochastic", "mean": self.mean.tolist(), "cov": self.cov.tolist()}


@dataclass(frozen=True)
class SemDraw:
    a: np.ndarray
    eps: np.ndarray
    v: np.ndarray


def sem_solve(model: SemModel, a: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Rows of V solving V = V B + A M + eps."""
    return np.linalg.solve((np.eye(model.p) - model.b).T, (a @ model.m + eps).T).T


def rng_for(seed: int, repetition: int = 0) -> np.random.Generator:
    """Philox stream for repetition `repetition` of a run seeded with `seed`.

    Keyed by seed ^ repetition, so seeds s and s ^ 1 share one set of streams in a different
    repetition order. In general two seeds share streams whenever their XOR is below the
    repetition count.
    """
    if seed < 0 or repetition < 0:
        raise InvalidConfig(f"Seeds must be non-negative, got seed={seed}, repetition={repetition}")
    return np.random.Generator(np.random.Philox(int(seed) ^ int(repetition)))


def sem_draw(
    model: SemModel,
    n: int,
    seed: int,
    iv: InterventionSpec | None = None,
    repetition: int = 0,
) -> SemDraw:
    """Draw eps first, then A, and solve the system; hidden variables are kept."""
    if n < 1:
        raise InvalidConfig(f"Sample size must be positive, got {n}")
    iv = iv or InterventionSpec.none()
    rng = rng_for(seed, repetition)
    eps = rng.standard_normal((n, model.p)) @ psd_sqrt(model.noise_cov)
    mean, cov = iv.anchor_law(model)
    a = mean + rng.standard_normal((n, model.q)) @ psd_sqrt(cov, "anchor covariance")
    return SemDraw(a=a, eps=eps, v=sem_solve(model, a, eps))


def sem_sample(
    model: SemModel,
    n: int,
    seed: int,
    iv: InterventionSpec | None = None,
    repetition: int = 0,
) -> Dataset:
    """n i.i.d. observations of (Y, X, A); hidden variables are dropped."""
    draw = sem_draw(model, n, seed, iv, repetition)
    return Dataset(
        y=draw.v[:, model.target_index],
        x=draw.v[:, list(model.endogenous_indices)],
        a=draw.a,
        target_name=model.names[model.target_index],
        endogenous_names=tuple(model.names[i] for i in model.endogenous_indices),
        exogenous_names=model.exogenous_names,
    )


@dataclass(frozen=True)
class PopulationMoments:
    """Exact second moments for a partition Z = [X_* A_*]."""

    aa: np.ndarray
    az: np.ndarray
    zz: np.ndarray
    zy: np.ndarray
    ay: np.ndarray
    yy: float


def joint_second_moment(model: SemModel, iv: InterventionSpec | None = None) -> np.ndarray:
    """E[W'W] for the row W = [V, A]."""
    iv = iv or InterventionSpec.none()
    mean, cov = iv.anchor_law(model)
    aa = cov + np.outer(mean, mean)
    gamma_inv = model.gamma_inv
    pi = model.m @ gamma_inv
    vv = pi.T @ aa @ pi + gamma_inv.T @ model.noise_cov @ gamma_inv
    av = aa @ pi
    joint = np.block([[vv, av.T], [av, aa]])
    return (joint + joint.T) / 2


def population_moments(
    model: SemModel,
    iv: InterventionSpec | None = None,
    partition: ModelPartition | None = None,
) -> PopulationMoments:
    partition = partition or model.partition()
    joint = joint_second_moment(model, iv)
    z = [model.endogenous_indices[i] for i in partition.included_endogenous]
    z += [model.p + j for j in partition.included_exogenous]
    a = list(range(model.p, model.p + model.q))
    t = model.target_index
    return PopulationMoments(
        aa=joint[np.ix_(a, a)],
        az=joint[np.ix_(a, z)],
        zz=joint[np.ix_(z, z)],
        zy=joint[z, t],
        ay=joint[a, t],
        yy=float(joint[t, t]),
    )


def population_projection(moments: PopulationMoments) -> tuple[np.ndarray, np.ndarray]:
    """E[ZA'] E[AA']^{-1} E[AZ'] and E[ZA'] E[AA']^{-1} E[AY]."""
    check_gram(moments.aa, "E[AA']", SingularPopulationGram)
    weights = np.linalg.solve(moments.aa, np.column_stack([moments.az, moments.ay]))
    projected = moments.az.T @ weights
    return projected[:, :-1], projected[:, -1]


def load_sem(path: str | Path) -> tuple[SemModel, InterventionSpec]:
    """Read a SEM config (JSON or YAML) with an optional intervention block."""
    config = load_structured_file(path)
    try:
        roles = tuple(VariableRole(role) for role in config.roles)
        model = SemModel(
            b=config.b,
            m=config.m,
            noise_cov=config.noise_cov if "noise_cov" in config else np.diag(config.noise_var),
            anchor_cov=config.get("anchor_cov", np.eye(np.atleast_2d(config.m).shape[0])),
            anchor_mean=config.get("anchor_mean"),
            roles=roles,
            names=tuple(config.get("names", ())),
            exogenous_names=tuple(config.get("exogenous_names", ())),
        )
    except InvalidConfig:
        raise
    except (KeyError, AttributeError, ValueError, TypeError) as e:
        raise InvalidConfig(f"Invalid SEM config {path}: {e}") from e
    return model, InterventionSpec.from_mapping(config.get("intervention"))
