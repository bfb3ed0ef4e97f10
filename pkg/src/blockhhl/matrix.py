"""Sparse Hermitian matrices in CSR layout and the dense primitives built on them."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionMismatchError,
    InvalidSpecError,
    SingularMatrixError,
    ZeroRHSError,
)

HERMITIAN_TOL = 1e-12
DENSE_CAP = 4096


def as_vector(v, n=None) -> np.ndarray:
    """Coerce ``v`` to a 1-D complex128 array, optionally checking its length."""
    arr = np.asarray(v, dtype=np.complex128)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-D vector, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise DimensionMismatchError(f"vector length {arr.shape[0]} != dimension {n}")
    return arr


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Square complex matrix in compressed sparse row form.

    Build instances with :meth:`from_coo` or :meth:`from_dense`; both
    canonicalise the entry order so equal matrices have equal triplets.
    """

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ro = np.asarray(self.row_offsets, dtype=np.int64)
        ci = np.asarray(self.col_indices, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.complex128)
        if ro.shape != (self.n + 1,) or ro[0] != 0:
            raise InvalidSpecError("row_offsets must have length n+1 and start at 0")
        if np.any(np.diff(ro) < 0) or ro[-1] != vals.shape[0] or ci.shape != vals.shape:
            raise InvalidSpecError("inconsistent CSR arrays")
        if ci.size and (ci.min() < 0 or ci.max() >= self.n):
            raise InvalidSpecError("column index out of range")
        if ci.size > 1:
            rows = np.repeat(np.arange(self.n), np.diff(ro))
            same_row = rows[1:] == rows[:-1]
            bad = same_row & (np.diff(ci) <= 0)
            if bad.any():
                i = int(rows[1:][bad][0])
                raise InvalidSpecError(f"column indices of row {i} not strictly increasing")
        object.__setattr__(self, "row_offsets", _frozen(ro))
        object.__setattr__(self, "col_indices", _frozen(ci))
        object.__setattr__(self, "values", _frozen(vals))

    @classmethod
    def from_coo(cls, n, rows, cols, values) -> "SparseMatrix":
        """Build from coordinate triplets. Duplicate coordinates are rejected."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.complex128)
        if not (rows.shape == cols.shape == values.shape):
            raise DimensionMismatchError("coordinate arrays differ in length")
        if rows.size and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n):
            raise InvalidSpecError("coordinate out of range")
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        if rows.size > 1:
            dup = (np.diff(rows) == 0) & (np.diff(cols) == 0)
            if dup.any():
                k = int(np.argmax(dup))
                raise InvalidSpecError(f"duplicate entry at ({rows[k]}, {cols[k]})")
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=offsets[1:])
        return cls(n, offsets, cols, values)

    @classmethod
    def from_dense(cls, a, tol=0.0) -> "SparseMatrix":
        a = np.asarray(a, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got {a.shape}")
        rows, cols = np.nonzero(np.abs(a) > tol)
        return cls.from_coo(a.shape[0], rows, cols, a[rows, cols])

    @classmethod
    def from_scipy(cls, m) -> "SparseMatrix":
        m = sp.csr_matrix(m)
        m.sum_duplicates()
        m.sort_indices()
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got {m.shape}")
        return cls(m.shape[0], m.indptr, m.indices, m.data)

    @classmethod
    def identity(cls, n) -> "SparseMatrix":
        idx = np.arange(n)
        return cls.from_coo(n, idx, idx, np.ones(n))

    @classmethod
    def diag(cls, d) -> "SparseMatrix":
        d = np.asarray(d)
        idx = np.arange(d.shape[0])
        return cls.from_coo(d.shape[0], idx, idx, d)

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    @property
    def shape(self):
        return (self.n, self.n)

    def row_indices(self) -> np.ndarray:
        return np.repeat(np.arange(self.n), np.diff(self.row_offsets))

    def to_coo(self):
        return self.row_indices(), np.array(self.col_indices), np.array(self.values)

    @cached_property
    def _csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, self.col_indices, self.row_offsets), shape=self.shape)

    def to_scipy(self) -> sp.csr_matrix:
        return self._csr.copy()

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.complex128)
        rows, cols, vals = self.to_coo()
        out[rows, cols] = vals
        return out

    def diagonal(self) -> np.ndarray:
        return self._csr.diagonal()

    def conj_transpose(self) -> "SparseMatrix":
        rows, cols, vals = self.to_coo()
        return SparseMatrix.from_coo(self.n, cols, rows, np.conj(vals))

    def scale(self, c) -> "SparseMatrix":
        return SparseMatrix(self.n, self.row_offsets, self.col_indices, self.values * c)

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.values))

    @cached_property
    def is_hermitian_flag(self) -> bool:
        return self.is_hermitian()

    def is_hermitian(self, tol=HERMITIAN_TOL) -> bool:
        """True when every entry matches the conjugate of its transpose within ``tol``.

        A stored entry whose transpose is missing must itself be within ``tol`` of zero.
        """
        if self.nnz == 0:
            return True
        diff = self._csr - self._csr.conj().T
        return bool(diff.nnz == 0 or np.abs(diff.data).max() <= tol)

    def submatrix(self, start, stop) -> "SparseMatrix":
        """Principal submatrix over the index range [start, stop)."""
        sub = self._csr[start:stop, start:stop]
        return SparseMatrix.from_scipy(sub)

    def same_as(self, other: "SparseMatrix") -> bool:
        return (
            self.n == other.n
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return f"SparseMatrix(n={self.n}, nnz={self.nnz})"


@dataclass(frozen=True)
class GeneratorSpec:
    n: int
    density: float
    seed: int = 0
    dominance: float = 2.0
    complex_entries: bool = False

    def validate(self):
        if self.n < 1:
            raise InvalidSpecError("dimension must be at least 1")
        if not (0.0 < self.density <= 1.0):
            raise InvalidSpecError(f"density {self.density} outside (0, 1]")
        if self.dominance < 1.0:
            raise InvalidSpecError(f"dominance {self.dominance} below 1")


def generate_spd(spec: GeneratorSpec) -> SparseMatrix:
    """Random Hermitian, strictly diagonally dominant matrix.

    The off-diagonal pattern picks ``round(density * n(n-1)/2)`` distinct upper
    triangle positions, mirrored below. The diagonal is ``dominance`` times the
    row's off-diagonal absolute sum, never less than 1. For very small ``n`` the
    realised density is limited by the granularity of whole pairs.
    """
    spec.validate()
    n = spec.n
    rng = np.random.default_rng(spec.seed)
    n_pairs = n * (n - 1) // 2
    k = int(round(spec.density * n_pairs))
    iu, ju = np.triu_indices(n, 1)
    picked = np.sort(rng.choice(n_pairs, size=k, replace=False)) if k else np.array([], dtype=np.int64)
    r, c = iu[picked], ju[picked]
    vals = rng.uniform(-1.0, 1.0, size=k)
    if spec.complex_entries:
        vals = vals + 1j * rng.uniform(-1.0, 1.0, size=k)
    rowsum = np.zeros(n)
    np.add.at(rowsum, r, np.abs(vals))
    np.add.at(rowsum, c, np.abs(vals))
    diag = np.maximum(1.0, spec.dominance * rowsum)
    # dominance == 1 would give equality; keep a few ulps so any summation order stays strict
    floor = rowsum * (1.0 + 16 * np.finfo(float).eps)
    diag = np.where(diag <= floor, floor, diag)
    idx = np.arange(n)
    rows = np.concatenate([r, c, idx])
    cols = np.concatenate([c, r, idx])
    data = np.concatenate([vals, np.conj(vals), diag.astype(np.complex128)])
    return SparseMatrix.from_coo(n, rows, cols, data)


def generate_block_diagonal(n, block, density, seed=0, dominance=2.0, complex_entries=False) -> SparseMatrix:
    """Block-diagonal SPD matrix whose diagonal blocks come from :func:`generate_spd`.

    The last block is ragged when ``block`` does not divide ``n``. Each block is
    seeded from ``seed`` so the whole matrix is reproducible.
    """
    if block < 1 or n < 1:
        raise InvalidSpecError("n and block must be positive")
    seeds = np.random.SeedSequence(seed).generate_state((n + block - 1) // block)
    rows, cols, vals = [], [], []
    for i, start in enumerate(range(0, n, block)):
        dim = min(block, n - start)
        sub = generate_spd(GeneratorSpec(dim, density, int(seeds[i]), dominance, complex_entries))
        r, c, v = sub.to_coo()
        rows.append(r + start)
        cols.append(c + start)
        vals.append(v)
    return SparseMatrix.from_coo(n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def generate_rhs(n, seed=0, complex_entries=False) -> np.ndarray:
    rng = np.random.default_rng([seed, 1])
    b = rng.uniform(-1.0, 1.0, size=n).astype(np.complex128)
    if complex_entries:
        b += 1j * rng.uniform(-1.0, 1.0, size=n)
    return b


def matvec(A: SparseMatrix, v) -> np.ndarray:
    v = as_vector(v, A.n)
    return A._csr @ v


def _check_cap(n, cap):
    if n > cap:
        raise InvalidSpecError(f"dimension {n} exceeds the densification cap {cap}")


def condition_number(A: SparseMatrix, cap=DENSE_CAP) -> float:
    """2-norm condition number sigma_max / sigma_min from a dense SVD."""
    _check_cap(A.n, cap)
    s = np.linalg.svd(A.to_dense(), compute_uv=False)
    if s[0] == 0 or s[-1] < 1e-14 * s[0]:
        raise SingularMatrixError(f"matrix is singular to working precision (sigma_min={s[-1]:.3e})")
    return float(s[0] / s[-1])


def residual(A: SparseMatrix, x, b) -> float:
    """Relative residual ||Ax - b|| / ||b||."""
    x = as_vector(x, A.n)
    b = as_vector(b, A.n)
    nb = np.linalg.norm(b)
    if nb == 0:
        raise ZeroRHSError("right-hand side is zero")
    return float(np.linalg.norm(matvec(A, x) - b) / nb)
