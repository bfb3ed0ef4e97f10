import numpy as np
import pytest

from blockhhl.classical import conjugate_gradient, direct_solve
from blockhhl.errors import BreakdownError, ConvergenceError, InvalidSpecError, NotSPDError, ZeroRHSError
from blockhhl.matrix import GeneratorSpec, SparseMatrix, generate_rhs, generate_spd, residual
from blockhhl.precondition import build_jacobi

from conftest import corpus_block


def test_direct_identity():
    assert np.allclose(direct_solve(SparseMatrix.identity(3), [1, 2, 3]), [1, 2, 3])


def test_direct_diag():
    assert np.allclose(direct_solve(SparseMatrix.diag([2, 4]), [2, 4]), [1, 1])


def test_direct_generated_residual():
    A = generate_spd(GeneratorSpec(16, 0.3, 5))
    b = generate_rhs(16, 5)
    assert residual(A, direct_solve(A, b), b) < 1e-10


def test_direct_names_failing_pivot():
    A = SparseMatrix.from_dense([[4, 0, 0], [0, 1, 2], [0, 2, 1]])
    with pytest.raises(NotSPDError) as exc:
        direct_solve(A, [1, 1, 1])
    assert exc.value.index == 2


def test_direct_cap():
    with pytest.raises(InvalidSpecError):
        direct_solve(SparseMatrix.identity(5), np.ones(5), cap=4)


def test_cg_identity_one_iteration():
    x, its = conjugate_gradient(SparseMatrix.identity(7), np.arange(1, 8))
    assert its == 1 and np.allclose(x, np.arange(1, 8))


def test_cg_finite_termination():
    x, its = conjugate_gradient(SparseMatrix.diag([1, 2, 3]), np.ones(3), tol=1e-10)
    assert its <= 3
    assert np.allclose(x, [1, 0.5, 1 / 3])


def test_cg_matches_direct():
    A = generate_spd(GeneratorSpec(64, 0.1, 9))
    b = generate_rhs(64, 9)
    x, _ = conjugate_gradient(A, b, tol=1e-8)
    assert np.max(np.abs(x - direct_solve(A, b))) <= 1e-6


def test_cg_jacobi_matches_direct():
    A = generate_spd(GeneratorSpec(40, 0.3, 2, complex_entries=True))
    b = generate_rhs(40, 2, True)
    x, _ = conjugate_gradient(A, b, tol=1e-10, M=build_jacobi(A))
    assert residual(A, x, b) <= 1e-10


def test_cg_zero_initial_residual():
    x, its = conjugate_gradient(SparseMatrix.identity(2), [1, 2], x0=[1, 2])
    assert its == 0


def test_cg_nonconvergence_carries_best_iterate():
    A = generate_spd(GeneratorSpec(30, 0.5, 1, 1.05))
    b = generate_rhs(30, 1)
    with pytest.raises(ConvergenceError) as exc:
        conjugate_gradient(A, b, tol=1e-14, max_iter=2)
    err = exc.value
    assert err.iterations == 2
    assert residual(A, err.x, b) == pytest.approx(err.residual, rel=1e-6)
    assert err.residual < 1.0


def test_cg_breakdown_on_indefinite():
    with pytest.raises(BreakdownError):
        conjugate_gradient(SparseMatrix.diag([1, -1]), [1, 1])


def test_cg_errors():
    with pytest.raises(ZeroRHSError):
        conjugate_gradient(SparseMatrix.identity(2), [0, 0])
    with pytest.raises(InvalidSpecError):
        conjugate_gradient(SparseMatrix.identity(2), [1, 0], tol=0)


@pytest.mark.parametrize("seed", range(200))
def test_direct_and_cg_agree_on_corpus(seed):
    A = corpus_block(seed)
    b = generate_rhs(A.n, seed)
    x, _ = conjugate_gradient(A, b, tol=1e-8)
    assert np.max(np.abs(x - direct_solve(A, b))) <= 1e-6
