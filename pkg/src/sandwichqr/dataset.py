"""Dataset container and CSV input/output.

A dataset is a response vector plus a design matrix whose first column
is identically one.  CSV files never store the intercept column: the
first column is the response, the remaining columns are covariates, and
the intercept is added when loading.  Lines starting with ``#`` are
metadata comments (the CLI writes the generating seed there) and are
skipped on input.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .validation import as_finite_array

__all__ = ["Dataset", "DegenerateDesignError", "load_csv", "save_csv"]


class DegenerateDesignError(ValueError):
    """Raised when a design matrix is unusable (rank deficient, n < p, ...)."""


@dataclass(frozen=True)
class Dataset:
    """Immutable regression dataset with an explicit intercept column.

    Attributes
    ----------
    y : ndarray, shape (n,)
        Response vector.
    X : ndarray, shape (n, p)
        Design matrix; column 0 must be identically 1 and the columns
        must be linearly independent.
    """

    y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        y = as_finite_array(self.y, "y", ndim=1)
        X = as_finite_array(self.X, "X", ndim=2)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        n, p = X.shape
        if y.shape[0] != n:
            raise ValueError(f"y has length {y.shape[0]} but X has {n} rows")
        if n < p:
            raise DegenerateDesignError(f"need at least p={p} rows, got n={n}")
        if not np.all(X[:, 0] == 1.0):
            raise DegenerateDesignError("X[:, 0] must be identically 1 (intercept)")
        if np.linalg.matrix_rank(X) < p:
            raise DegenerateDesignError("design matrix is rank deficient")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_covariates(cls, y, covariates) -> "Dataset":
        """Build a dataset by prepending an intercept column to ``covariates``."""
        y = as_finite_array(y, "y", ndim=1)
        cov = np.asarray(covariates, dtype=float)
        if cov.ndim == 1:
            cov = cov[:, None]
        X = np.column_stack([np.ones(len(y)), cov])
        return cls(y, X)


def load_csv(path) -> tuple[Dataset, list[str]]:
    """Read a dataset CSV: header row, response first, covariates after.

    Returns the dataset (intercept added) and the covariate column
    names from the header.  ``#`` comment lines are ignored.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh)
                if row and not row[0].lstrip().startswith("#")]
    if len(rows) < 2:
        raise ValueError(f"{path}: need a header row and at least one data row")
    header = [c.strip() for c in rows[0]]
    try:
        body = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry in data rows ({exc})") from exc
    if body.ndim != 2 or body.shape[1] != len(header):
        raise ValueError(f"{path}: ragged rows or width mismatch with header")
    if body.shape[1] < 2:
        raise ValueError(f"{path}: need a response column and at least one covariate")
    data = Dataset.from_covariates(body[:, 0], body[:, 1:])
    return data, header[1:]


def save_csv(path, y, covariates, names=None, comments=()) -> None:
    """Write a dataset CSV (response first, no intercept column).

    ``comments`` are written first, one ``# ...`` line each, so seeds
    and provenance survive a round trip without affecting parsing.
    """
    y = as_finite_array(y, "y", ndim=1)
    cov = np.asarray(covariates, dtype=float)
    if cov.ndim == 1:
        cov = cov[:, None]
    if cov.shape[0] != y.shape[0]:
        raise ValueError("y and covariates disagree on the number of rows")
    if names is None:
        names = [f"x{j + 1}" for j in range(cov.shape[1])]
    if len(names) != cov.shape[1]:
        raise ValueError("one name per covariate column required")
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["y", *names])
        for i in range(y.shape[0]):
            writer.writerow([repr(float(y[i])), *[repr(float(v)) for v in cov[i]]])
