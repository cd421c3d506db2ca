"""Datasets: CSV ingestion/emission and synthetic generators.

CSV layout is one header row naming d feature columns followed by one
target column, then numeric data rows.  Values are written with ``repr``
so a write-then-read round-trip is bitwise exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_points, as_targets, check_nonnegative
from .exceptions import DataFormatError
from .kernels import cholesky_factor, gram

__all__ = [
    "Dataset",
    "PROVENANCE_TAGS",
    "load_csv",
    "save_csv",
    "load_table",
    "gen_gp_dataset",
]

PROVENANCE_TAGS = ("file", "synthetic-gp", "synthetic-function")


@dataclass(frozen=True)
class Dataset:
    """Immutable supervised dataset: points X, targets y, and provenance.

    ``seed`` records how synthetic data was generated; file-loaded data
    leaves it ``None``.
    """

    X: np.ndarray
    y: np.ndarray
    provenance: str = "file"
    seed: int | tuple | None = None

    def __post_init__(self):
        X = as_points(self.X)
        y = as_targets(self.y, n=X.shape[0])
        X.flags.writeable = False
        y.flags.writeable = False
        if self.provenance not in PROVENANCE_TAGS:
            raise ValueError(
                f"provenance must be one of {PROVENANCE_TAGS}, "
                f"got {self.provenance!r}"
            )
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]


def _parse_rows(path):
    """Read a numeric CSV table; every failure names its line/column."""
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = [cell.strip() for cell in rows[0]]
    if len(header) < 2:
        raise DataFormatError(
            f"{path}: header must name at least one feature column and one "
            f"target column, found {len(header)} column(s)"
        )
    width = len(header)
    data = np.empty((len(rows) - 1, width))
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            raise DataFormatError(f"{path}: blank line at line {lineno}")
        if len(row) != width:
            raise DataFormatError(
                f"{path}: line {lineno} has {len(row)} cells, expected {width}"
            )
        for j, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}, column {header[j]!r}: "
                    f"could not parse {cell.strip()!r} as a number"
                ) from None
            if not math.isfinite(value):
                raise DataFormatError(
                    f"{path}: line {lineno}, column {header[j]!r}: "
                    f"non-finite value {cell.strip()!r}"
                )
            data[lineno - 2, j] = value
    if data.shape[0] == 0:
        raise DataFormatError(f"{path}: no data rows after the header")
    return header, data


def load_table(path):
    """Numeric table as ``(header, array)`` with located parse errors."""
    return _parse_rows(path)


def load_csv(path):
    """Parse a feature/target CSV into a :class:`Dataset` (row order kept)."""
    _, data = _parse_rows(path)
    return Dataset(X=data[:, :-1], y=data[:, -1], provenance="file")


def save_csv(dataset, path):
    """Write a dataset as CSV; floats use ``repr`` so reloads are bitwise."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"x{j + 1}" for j in range(dataset.d)] + ["y"])
        for point, target in zip(dataset.X, dataset.y):
            writer.writerow([repr(float(v)) for v in point]
                            + [repr(float(target))])


def gen_gp_dataset(true_dict, support, N, d, noise_sd, seed, X=None):
    """Draw a dataset from the Gaussian process of a restricted dictionary.

    X is uniform on [0, 1]^d (or the given points), and y is one draw from
    the zero-mean Gaussian with covariance
    ``Gram(true_dict restricted to support) + noise_sd^2 I``, obtained by
    factorizing that covariance.  Kernels outside ``support`` have no
    influence: their weights may be arbitrary without changing the draw
    for a fixed seed.

    Parameters
    ----------
    support : iterable of int
        Indices of the active kernels in ``true_dict``; must be nonempty.
    X : array-like, optional
        Fixed sample locations of shape ``(N, d)``; replaces the uniform
        draw (the RNG stream still reserves it, so draws at fixed points
        stay aligned with location-randomized ones).
    """
    check_nonnegative(noise_sd, "noise_sd")
    indices = tuple(int(i) for i in support)
    active = true_dict.subset(indices)

    rng = np.random.default_rng(seed)
    sampled = rng.uniform(0.0, 1.0, size=(int(N), int(d)))
    if X is None:
        X = sampled
    else:
        X = as_points(X)
        if X.shape != (int(N), int(d)):
            raise ValueError(
                f"fixed points have shape {X.shape}, expected ({N}, {d})"
            )
    cov = gram(active, X, nugget=0.0).entries
    cov[np.diag_indices_from(cov)] += float(noise_sd) ** 2
    factor = cholesky_factor(cov)
    y = factor @ rng.standard_normal(X.shape[0])
    tag = tuple(int(s) for s in seed) if isinstance(seed, (tuple, list)) \
        else int(seed)
    return Dataset(X=X, y=y, provenance="synthetic-gp", seed=tag)
