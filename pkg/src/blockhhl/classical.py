"""Classical baselines: dense Cholesky and (preconditioned) conjugate gradients."""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack

from .errors import BreakdownError, ConvergenceError, InvalidSpecError, NotSPDError, ZeroRHSError
from .matrix import DENSE_CAP, SparseMatrix, as_vector, matvec

TRUE_RESIDUAL_EVERY = 50


def direct_solve(A: SparseMatrix, b, cap=DENSE_CAP) -> np.ndarray:
    """Solve ``Ax = b`` by dense Cholesky factorisation."""
    b = as_vector(b, A.n)
    if A.n > cap:
        raise InvalidSpecError(f"dimension {A.n} exceeds the densification cap {cap}")
    c, info = lapack.zpotrf(A.to_dense(), lower=1)
    if info > 0:
        raise NotSPDError(info - 1, f"Cholesky factorisation failed at pivot {info - 1}")
    if info < 0:
        raise ValueError(f"zpotrf: illegal argument {-info}")
    x, info = lapack.zpotrs(c, b, lower=1)
    if info != 0:
        raise ValueError(f"zpotrs: illegal argument {-info}")
    return x


def conjugate_gradient(A: SparseMatrix, b, tol=1e-8, max_iter=None, M=None, x0=None):
    """Conjugate gradients on a Hermitian positive-definite system.

    Convergence is declared when the relative residual ``||b - Ax|| / ||b||``
    drops to ``tol``. The recursively updated residual is replaced by the true
    one every 50 iterations and before convergence is accepted.

    ``M`` is an optional Jacobi :class:`~blockhhl.precondition.Preconditioner`;
    its ``inverse_diagonal`` is applied as the preconditioner solve.

    Returns ``(x, iterations)``.
    """
    if tol <= 0:
        raise InvalidSpecError("tol must be positive")
    b = as_vector(b, A.n)
    nb = np.linalg.norm(b)
    if nb == 0:
        raise ZeroRHSError("right-hand side is zero")
    if max_iter is None:
        max_iter = 10 * A.n
    inv_diag = None if M is None else np.asarray(M.inverse_diagonal)

    def precond(r):
        return r if inv_diag is None else inv_diag * r

    x = np.zeros(A.n, dtype=np.complex128) if x0 is None else as_vector(x0, A.n).copy()
    r = b - matvec(A, x)
    z = precond(r)
    p = z.copy()
    rz = np.vdot(r, z)
    best_x, best_res = x.copy(), np.linalg.norm(r) / nb
    if best_res <= tol:
        return x, 0

    for it in range(1, max_iter + 1):
        Ap = matvec(A, p)
        curvature = np.vdot(p, Ap).real
        if not curvature > 0:
            raise BreakdownError(f"non-positive curvature {curvature:.3e} at iteration {it}")
        alpha = rz / curvature
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / nb
        if it % TRUE_RESIDUAL_EVERY == 0 or res <= tol:
            r = b - matvec(A, x)
            res = np.linalg.norm(r) / nb
        if res < best_res:
            best_x, best_res = x.copy(), res
        if res <= tol:
            return x, it
        z = precond(r)
        rz_new = np.vdot(r, z)
        if rz == 0:
            raise BreakdownError(f"zero preconditioned residual product at iteration {it}")
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p
    raise ConvergenceError(best_x, max_iter, best_res)
