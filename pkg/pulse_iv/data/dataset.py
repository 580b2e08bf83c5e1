from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from enum import Enum
import logging

import numpy as np
import pandas as pd

from pulse_iv.errors import (
    DataError,
    DimensionMismatch,
    InsufficientRows,
    InvalidSpec,
    MissingColumn,
    MissingValue,
    NonNumericCell,
)
from pulse_iv.utils import closest_name

_log = logging.getLogger(__name__)

CONSTANT_NAME = "const"


class Role(Enum):
    """Roles a data column can play."""

    TARGET = "target"
    ENDOGENOUS = "endogenous"
    EXOGENOUS = "exogenous"


class Identification(Enum):
    UNDER = "under"
    JUST = "just"
    OVER = "over"

    @classmethod
    def from_degree(cls, degree: int) -> "Identification":
        if degree < 0:
            return cls.UNDER
        if degree == 0:
            return cls.JUST
        return cls.OVER


def _frozen(values: np.ndarray, ndim: int, name: str) -> np.ndarray:
    array = np.array(values, dtype=float)
    if ndim == 2 and array.ndim == 1:
        array = array.reshape(-1, 1)
    if array.ndim != ndim:
        raise DimensionMismatch(f"{name} must have {ndim} dimension(s), got shape {array.shape}")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Dataset:
    """Observed response y, endogenous regressors x and exogenous variables a."""

    y: np.ndarray
    x: np.ndarray
    a: np.ndarray
    target_name: str = "y"
    endogenous_names: tuple[str, ...] = ()
    exogenous_names: tuple[str, ...] = ()
    centered: frozenset[Role] = field(default_factory=frozenset)

    def __post_init__(self):
        y = _frozen(self.y, 1, "y")
        x = _frozen(self.x, 2, "x")
        a = _frozen(self.a, 2, "a")
        n = y.shape[0]
        if x.shape[0] != n or a.shape[0] != n:
            raise DimensionMismatch(
                f"y, x and a must have the same number of rows, got {n}, {x.shape[0]} and {a.shape[0]}"
            )
        if n < max(1, x.shape[1], a.shape[1]):
            raise InsufficientRows(
                f"Need at least max(d, q) = {max(1, x.shape[1], a.shape[1])} rows, got {n}"
            )
        for name, values in (("y", y), ("x", x), ("a", a)):
            if not np.all(np.isfinite(values)):
                raise DataError(f"{name} contains NaN or infinite values")
        endogenous_names = tuple(self.endogenous_names) or tuple(f"x{i + 1}" for i in range(x.shape[1]))
        exogenous_names = tuple(self.exogenous_names) or tuple(f"a{i + 1}" for i in range(a.shape[1]))
        if len(endogenous_names) != x.shape[1] or len(exogenous_names) != a.shape[1]:
            raise DimensionMismatch("Number of column names does not match the number of columns")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "endogenous_names", endogenous_names)
        object.__setattr__(self, "exogenous_names", exogenous_names)
        object.__setattr__(self, "centered", frozenset(self.centered))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def q(self) -> int:
        return self.a.shape[1]

    def to_frame(self) -> pd.DataFrame:
        """Observed columns as a DataFrame, ordered exogenous, endogenous, target."""
        frame = pd.DataFrame(self.a, columns=list(self.exogenous_names))
        for i, name in enumerate(self.endogenous_names):
            frame[name] = self.x[:, i]
        frame[self.target_name] = self.y
        return frame


@dataclass(frozen=True)
class ModelPartition:
    """Which endogenous and exogenous columns enter the target equation."""

    included_endogenous: tuple[int, ...]
    included_exogenous: tuple[int, ...]
    d: int
    q: int

    def __post_init__(self):
        for label, indices, size in (
            ("included_endogenous", self.included_endogenous, self.d),
            ("included_exogenous", self.included_exogenous, self.q),
        ):
            indices = tuple(int(i) for i in indices)
            if len(set(indices)) != len(indices):
                raise InvalidSpec(f"{label} contains duplicate indices: {indices}")
            if any(i < 0 or i >= size for i in indices):
                raise InvalidSpec(f"{label} indices {indices} out of range for {size} columns")
            object.__setattr__(self, label, indices)

    @classmethod
    def for_dataset(
        cls,
        ds: Dataset,
        included_exogenous: Iterable[int] = (),
        included_endogenous: Iterable[int] | None = None,
    ) -> "ModelPartition":
        """All endogenous regressors included unless stated otherwise."""
        endogenous = tuple(range(ds.d)) if included_endogenous is None else tuple(included_endogenous)
        return cls(
            included_endogenous=endogenous,
            included_exogenous=tuple(included_exogenous),
            d=ds.d,
            q=ds.q,
        )

    @property
    def d1(self) -> int:
        return len(self.included_endogenous)

    @property
    def q1(self) -> int:
        return len(self.included_exogenous)

    @property
    def d2(self) -> int:
        return self.d - self.d1

    @property
    def q2(self) -> int:
        return self.q - self.q1

    @property
    def excluded_endogenous(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.d) if i not in self.included_endogenous)

    @property
    def excluded_exogenous(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.q) if i not in self.included_exogenous)

    @property
    def identification_degree(self) -> int:
        return self.q2 - self.d1

    @property
    def identification(self) -> Identification:
        return Identification.from_degree(self.identification_degree)


@dataclass(frozen=True)
class Schema:
    """Column-role map for reading a CSV file."""

    target: str
    endogenous: tuple[str, ...]
    exogenous: tuple[str, ...]

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> "Schema":
        target = mapping.get("target")
        if not target:
            raise InvalidSpec("Schema needs a target column")
        endogenous = mapping.get("endogenous", mapping.get("endo", ()))
        exogenous = mapping.get("exogenous", mapping.get("exo", ()))
        return cls(
            target=str(target),
            endogenous=tuple(as_names(endogenous)),
            exogenous=tuple(as_names(exogenous)),
        )

    @property
    def columns(self) -> list[str]:
        return [self.target, *self.endogenous, *self.exogenous]


def as_names(value) -> list[str]:
    if isinstance(value, str):
        return [name.strip() for name in value.split(",") if name.strip()]
    return [str(name) for name in value]


def _parse_column(frame: pd.DataFrame, column: str) -> np.ndarray:
    raw = frame[column].str.strip()
    missing = raw == ""
    if missing.any():
        row = int(np.flatnonzero(missing.to_numpy())[0]) + 1
        raise MissingValue(row=row, column=column)
    values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        index = int(np.flatnonzero(bad)[0])
        raise NonNumericCell(row=index + 1, column=column, value=str(raw.iloc[index]))
    # Exact decimal-to-double conversion, so written samples read back unchanged.
    return np.array(raw.tolist(), dtype=float)


def read_table(path: str) -> pd.DataFrame:
    """CSV file as a frame of raw strings with stripped header names."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError as e:
        raise DataError(f"Data file {path} not found") from e
    frame.columns = [str(column).strip() for column in frame.columns]
    return frame


def dataset_from_frame(frame: pd.DataFrame, schema: Schema | Mapping) -> Dataset:
    """Bind the string columns of `frame` to target/endogenous/exogenous roles.

    Rows are reported 1-based, counting data rows below the header.
    """
    if not isinstance(schema, Schema):
        schema = Schema.from_mapping(schema)
    frame = frame.reset_index(drop=True)
    available = list(frame.columns)
    for column in schema.columns:
        if column not in available:
            raise MissingColumn(column, suggestion=closest_name(column, available))

    y = _parse_column(frame, schema.target)
    x = np.column_stack([_parse_column(frame, c) for c in schema.endogenous]) if schema.endogenous else np.empty((len(frame), 0))
    a = np.column_stack([_parse_column(frame, c) for c in schema.exogenous]) if schema.exogenous else np.empty((len(frame), 0))
    return Dataset(
        y=y,
        x=x,
        a=a,
        target_name=schema.target,
        endogenous_names=schema.endogenous,
        exogenous_names=schema.exogenous,
    )


def load_csv(path: str, schema: Schema | Mapping) -> Dataset:
    """Read a CSV file and bind its columns to roles."""
    frame = read_table(path)
    _log.info(f"Loaded {len(frame)} rows from {path}.")
    return dataset_from_frame(frame, schema)


def center(ds: Dataset, roles: Iterable[Role] = tuple(Role)) -> Dataset:
    """Subtract the sample mean from every column with one of the given roles."""
    roles = frozenset(roles)
    if ds.n < 2:
        raise InsufficientRows(f"Centering needs at least 2 rows, got {ds.n}")
    y, x, a = ds.y, ds.x, ds.a
    if Role.TARGET in roles:
        y = y - y.mean()
    if Role.ENDOGENOUS in roles:
        x = x - x.mean(axis=0)
    if Role.EXOGENOUS in roles:
        a = a - a.mean(axis=0)
    return replace(ds, y=y, x=x, a=a, centered=ds.centered | roles)


def add_intercept(ds: Dataset, partition: ModelPartition) -> tuple[Dataset, ModelPartition]:
    """Append a constant column to A and include it as an exogenous regressor."""
    a = np.column_stack([ds.a, np.ones(ds.n)])
    with_constant = replace(ds, a=a, exogenous_names=(*ds.exogenous_names, CONSTANT_NAME))
    return with_constant, ModelPartition(
        included_endogenous=partition.included_endogenous,
        included_exogenous=(*partition.included_exogenous, ds.q),
        d=ds.d,
        q=ds.q + 1,
    )
