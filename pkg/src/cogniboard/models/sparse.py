"""Triplet-form sparse sample matrix shared by the modality agents."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class SparseMatrixError(ValueError):
    pass


@dataclass
class SparseMatrix:
    """Rows are samples, columns are named features, entries are (row,
    col, value) triplets. Duplicate coordinates are rejected rather than
    summed so featurization bugs surface early.
    """

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if not (len(self.rows) == len(self.cols) == len(self.values)):
            raise SparseMatrixError("triplet arrays must have equal length")
        if len(self.rows) and (self.rows.min() < 0 or self.rows.max() >= self.n_rows):
            raise SparseMatrixError("row index out of range")
        if len(self.cols) and (self.cols.min() < 0 or self.cols.max() >= self.n_cols):
            raise SparseMatrixError("col index out of range")
        if not np.all(np.isfinite(self.values)):
            raise SparseMatrixError("values must be finite")
        if len(self.rows):
            coords = self.rows * self.n_cols + self.cols
            if len(np.unique(coords)) != len(coords):
                raise SparseMatrixError("duplicate (row, col) coordinate")
        if self.feature_names and len(self.feature_names) != self.n_cols:
            raise SparseMatrixError("feature_names length must match n_cols")

    @classmethod
    def from_rows(cls, row_dicts: list[dict[str, float]], feature_names: list[str]) -> "SparseMatrix":
        """Build from per-sample {feature_name: value} dicts."""
        index = {name: j for j, name in enumerate(feature_names)}
        rows: list[int] = []
        cols: list[int] = []
        vals: list[float] = []
        for i, d in enumerate(row_dicts):
            for name, v in d.items():
                if name not in index:
                    raise SparseMatrixError(f"unknown feature {name!r}")
                if v != 0.0:
                    rows.append(i)
                    cols.append(index[name])
                    vals.append(float(v))
        return cls(len(row_dicts), len(feature_names), np.array(rows), np.array(cols), np.array(vals), list(feature_names))

    @classmethod
    def from_dense(cls, arr: np.ndarray, feature_names: list[str] | None = None) -> "SparseMatrix":
        arr = np.asarray(arr, dtype=np.float64)
        rows, cols = np.nonzero(arr)
        names = feature_names if feature_names is not None else [f"x{j}" for j in range(arr.shape[1])]
        return cls(arr.shape[0], arr.shape[1], rows, cols, arr[rows, cols], names)

    def to_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.values, (self.rows, self.cols)), shape=(self.n_rows, self.n_cols)
        )

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()

    def column_sd(self) -> np.ndarray:
        """Per-feature standard deviation (population), zeros included."""
        x = self.to_csr()
        mean = np.asarray(x.mean(axis=0)).ravel()
        mean_sq = np.asarray(x.multiply(x).mean(axis=0)).ravel()
        var = np.maximum(mean_sq - mean**2, 0.0)
        return np.sqrt(var)
