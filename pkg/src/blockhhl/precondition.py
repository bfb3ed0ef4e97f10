"""Symmetric Jacobi scaling of diagonal blocks.

Each block is rescaled as ``D^-1/2 A D^-1/2`` with ``D = diag(A)``, which keeps
it Hermitian positive definite and gives it a unit diagonal. Solutions of the
scaled system map back through ``x = D^-1/2 x_tilde``.
"""

from __future__ import annotations

import enum
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BlockError, DimensionMismatchError, NotSPDError, SolverError
from .matrix import DENSE_CAP, SparseMatrix, as_vector, condition_number
from .partition import BlockSystem


class Strategy(str, enum.Enum):
    NONE = "none"
    JACOBI = "jacobi"

    @classmethod
    def parse(cls, name) -> "Strategy":
        if isinstance(name, cls):
            return name
        key = str(name).lower()
        if key == "jacobi_symmetric":
            key = "jacobi"
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown preconditioning strategy {name!r}") from None


@dataclass(frozen=True, eq=False)
class Preconditioner:
    inverse_diagonal: np.ndarray
    strategy: Strategy = Strategy.JACOBI

    @property
    def scaling(self) -> np.ndarray:
        """The diagonal of D^-1/2."""
        return np.sqrt(self.inverse_diagonal)


@dataclass(frozen=True, eq=False)
class PreconditionedBlock:
    a_tilde: SparseMatrix
    b_tilde: np.ndarray
    preconditioner: Preconditioner
    kappa_before: Optional[float] = None
    kappa_after: Optional[float] = None


def build_jacobi(A_i: SparseMatrix) -> Preconditioner:
    d = A_i.diagonal()
    for j, dj in enumerate(d):
        if not (dj.real > 0) or abs(dj.imag) > 1e-12 * max(1.0, abs(dj.real)):
            raise NotSPDError(j, f"diagonal entry {j} is {dj}, expected a positive real")
    inv = 1.0 / d.real
    inv.setflags(write=False)
    return Preconditioner(inv, Strategy.JACOBI)


def identity_preconditioner(n) -> Preconditioner:
    return Preconditioner(np.ones(n), Strategy.NONE)


def _kappa(A, cap):
    return condition_number(A) if A.n <= cap else None


def apply_symmetric(A_i: SparseMatrix, b_i, M: Preconditioner, kappa_cap=DENSE_CAP) -> PreconditionedBlock:
    b_i = as_vector(b_i, A_i.n)
    if M.inverse_diagonal.shape[0] != A_i.n:
        raise DimensionMismatchError("preconditioner does not match block dimension")
    s = M.scaling
    rows = A_i.row_indices()
    values = A_i.values * s[rows] * s[A_i.col_indices]
    a_tilde = SparseMatrix(A_i.n, A_i.row_offsets, A_i.col_indices, values)
    b_tilde = b_i * s
    b_tilde.setflags(write=False)
    k0 = _kappa(A_i, kappa_cap)
    k1 = k0 if M.strategy is Strategy.NONE else _kappa(a_tilde, kappa_cap)
    return PreconditionedBlock(a_tilde, b_tilde, M, k0, k1)


def unscale_solution(x_tilde, M: Preconditioner) -> np.ndarray:
    x_tilde = as_vector(x_tilde, M.inverse_diagonal.shape[0])
    return M.scaling * x_tilde


def precondition_block(A_i, b_i, strategy=Strategy.JACOBI, kappa_cap=DENSE_CAP) -> PreconditionedBlock:
    strategy = Strategy.parse(strategy)
    if strategy is Strategy.NONE:
        b_i = as_vector(b_i, A_i.n)
        k = _kappa(A_i, kappa_cap)
        return PreconditionedBlock(A_i, b_i, identity_preconditioner(A_i.n), k, k)
    return apply_symmetric(A_i, b_i, build_jacobi(A_i), kappa_cap)


def _run_chunk(args):
    blocks, offset, strategy, kappa_cap = args
    out = []
    for i, (A_i, b_i) in enumerate(blocks):
        try:
            out.append(precondition_block(A_i, b_i, strategy, kappa_cap))
        except SolverError as exc:
            return out, (offset + i, exc)
    return out, None


def chunked(n_items, workers):
    size = -(-n_items // max(1, workers))
    return [(s, min(s + size, n_items)) for s in range(0, n_items, max(1, size))]


def parallel_map_chunks(fn, chunks, workers):
    """Run ``fn`` over ``chunks`` in order, on a fork-based process pool when workers > 1."""
    if workers <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(fn, chunks))


def precondition_all(system: BlockSystem, strategy=Strategy.JACOBI, workers: int = 1,
                     kappa_cap=DENSE_CAP) -> list:
    """Precondition every block of ``system``, preserving block order.

    Blocks are split into ``workers`` contiguous chunks. Output is identical for
    any worker count because each block is processed independently.
    """
    strategy = Strategy.parse(strategy)
    ranges = chunked(system.k, workers)
    jobs = [(system.blocks[s:e], s, strategy, kappa_cap) for s, e in ranges]
    results = []
    for out, failure in parallel_map_chunks(_run_chunk, jobs, workers):
        results.extend(out)
        if failure is not None:
            index, exc = failure
            raise BlockError("precondition", index, exc) from exc
    return results
