"""Data ingestion, validation and design-matrix assembly."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, DimensionError, MissingColumnError, NonNumericError

RANK_RTOL = 1e-10


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Response vector ``y`` (n,) and design matrix ``X`` (n, d).

    Arrays are copied and made read-only on construction, so a Dataset can be
    shared freely between threads.
    """

    y: np.ndarray
    X: np.ndarray
    column_names: tuple[str, ...] = ()
    intercept: bool = False

    def __post_init__(self):
        y = _frozen(self.y).reshape(-1)
        X = _frozen(self.X)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
            X.setflags(write=False)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DimensionError(
                f"X has shape {X.shape} but y has length {y.shape[0]}", parameter="X"
            )
        n, d = X.shape
        if n < d + 1:
            raise DimensionError(f"need n >= d + 1, got n={n}, d={d}", parameter="X")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataError("non-finite entries in y or X", parameter="X")
        if self.intercept and not np.all(X[:, 0] == 1.0):
            raise DataError("intercept flagged but column 1 is not all ones", parameter="X")
        names = tuple(self.column_names) or tuple(f"x{j + 1}" for j in range(d))
        if len(names) != d:
            raise DataError(f"{len(names)} column names for {d} columns", parameter="column_names")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_arrays(cls, y, X=None, add_intercept=True, column_names=None) -> "Dataset":
        """Build a Dataset, optionally prepending a column of ones.

        ``X=None`` gives the intercept-only design.
        """
        y = np.asarray(y, dtype=float).reshape(-1)
        if X is None:
            X = np.empty((y.shape[0], 0))
            add_intercept = True
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        names = list(column_names) if column_names is not None else [
            f"x{j + 2 if add_intercept else j + 1}" for j in range(X.shape[1])
        ]
        if add_intercept:
            X = np.column_stack([np.ones(y.shape[0]), X])
            names = ["intercept"] + names
        return cls(y=y, X=X, column_names=tuple(names), intercept=add_intercept)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.y[idx], self.X[idx], self.column_names, self.intercept)

    def to_csv(self, path, response_column: str = "y") -> None:
        """Write y and the non-intercept columns with full float precision."""
        start = 1 if self.intercept else 0
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([response_column, *self.column_names[start:]])
            for yi, row in zip(self.y, self.X[:, start:]):
                w.writerow([repr(float(yi)), *(repr(float(v)) for v in row)])


@dataclass(frozen=True)
class DesignPoint:
    x: np.ndarray

    def __post_init__(self):
        x = _frozen(self.x).reshape(-1)
        if not np.all(np.isfinite(x)):
            raise DataError("design point has non-finite entries", parameter="x")
        object.__setattr__(self, "x", x)

    def check(self, data: Dataset) -> "DesignPoint":
        if self.x.shape[0] != data.d:
            raise DimensionError(
                f"design point has length {self.x.shape[0]}, data has d={data.d}",
                parameter="x",
            )
        return self


def as_point(x) -> np.ndarray:
    if isinstance(x, DesignPoint):
        return x.x
    return DesignPoint(x).x


def load_csv(path, response_column: str, add_intercept: bool = True) -> Dataset:
    """Read a comma-separated file with a header row into a Dataset.

    Every column other than ``response_column`` becomes a regressor, in file
    order. Rows are numbered from 1 for the first data line.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty", parameter="path") from None
        if response_column not in header:
            raise MissingColumnError(
                f"response column {response_column!r} not in header {header}",
                parameter=response_column,
            )
        rows = []
        for lineno, raw in enumerate(reader, start=1):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != len(header):
                raise DataError(
                    f"row {lineno} has {len(raw)} fields, header has {len(header)}",
                    parameter="path",
                )
            vals = []
            for name, cell in zip(header, raw):
                try:
                    v = float(cell)
                except ValueError:
                    raise NonNumericError(lineno, name, cell) from None
                if not math.isfinite(v):
                    raise NonNumericError(lineno, name, cell)
                vals.append(v)
            rows.append(vals)
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    j = header.index(response_column)
    others = [k for k in range(len(header)) if k != j]
    return Dataset.from_arrays(
        data[:, j],
        data[:, others],
        add_intercept=add_intercept,
        column_names=[header[k] for k in others],
    )


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    detail: dict = field(default_factory=dict)


def numerical_rank(X: np.ndarray, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(X, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def validate(data: Dataset) -> list[Diagnostic]:
    """Report rank deficiency, duplicate rows and constant regressors."""
    out = []
    X = data.X
    rank = numerical_rank(X)
    if rank < data.d:
        out.append(Diagnostic("rank_deficient", f"rank {rank} < d={data.d}", {"rank": rank}))
    _, first, counts = np.unique(
        np.column_stack([data.y, X]), axis=0, return_index=True, return_counts=True
    )
    ndup = int(np.sum(counts - 1))
    if ndup:
        out.append(Diagnostic("duplicate_rows", f"{ndup} duplicated rows", {"count": ndup}))
    start = 1 if data.intercept else 0
    for j in range(start, data.d):
        col = X[:, j]
        if np.all(col == col[0]):
            out.append(
                Diagnostic(
                    "constant_column",
                    f"column {data.column_names[j]!r} is constant",
                    {"column": data.column_names[j]},
                )
            )
    return out
