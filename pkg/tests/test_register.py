import numpy as np
import pytest

from blockhhl.errors import DimensionMismatchError
from blockhhl.register import (QubitLayout, RegisterState, apply_gates, controlled_phase, hadamard,
                               inverse_gates, qft_gates, swap, system_qubits)

from conftest import random_unitary


def clock_operator(gates, m):
    """Matrix of a clock-register gate list, read off column by column."""
    M = 1 << m
    out = np.zeros((M, M), dtype=complex)
    for c in range(M):
        t = np.zeros((2, M, 1), dtype=complex)
        t[0, c, 0] = 1
        apply_gates(t, gates, m)
        out[:, c] = t[0, :, 0]
    return out


def test_layout_sizes():
    lay = QubitLayout(3, 2)
    assert lay.total == 6 and lay.size == 64 and lay.clock_dim == 8 and lay.system_dim == 4


@pytest.mark.parametrize("dim,q", [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (8, 3)])
def test_system_qubits(dim, q):
    assert system_qubits(dim) == q


def test_state_shape_checked():
    with pytest.raises(DimensionMismatchError):
        RegisterState(np.zeros(5, complex), QubitLayout(1, 1))


@pytest.mark.parametrize("m", range(1, 7))
def test_qft_matches_dft(m):
    M = 1 << m
    x, y = np.meshgrid(np.arange(M), np.arange(M))
    dft = np.exp(2j * np.pi * x * y / M) / np.sqrt(M)
    assert np.max(np.abs(clock_operator(qft_gates(m), m) - dft)) <= 1e-12
    assert np.max(np.abs(clock_operator(inverse_gates(qft_gates(m)), m) - dft.conj().T)) <= 1e-12


def test_hadamard_on_bit():
    t = np.zeros((2, 4, 1), complex)
    t[0, 0, 0] = 1
    hadamard(t, 1, 2)
    assert np.allclose(t[0, :, 0], [1 / np.sqrt(2), 0, 1 / np.sqrt(2), 0])


def test_controlled_phase_and_swap():
    m = 3
    t = np.ones((2, 8, 1), complex)
    controlled_phase(t, 0, 2, np.pi, m)
    expected = np.array([1, 1, 1, 1, 1, -1, 1, -1])
    assert np.allclose(t[0, :, 0], expected)
    t = np.arange(8, dtype=complex).reshape(1, 8, 1).repeat(2, axis=0)
    swap(t, 0, 2, m)
    assert t[0, :, 0].real.tolist() == [0, 4, 2, 6, 1, 5, 3, 7]


@pytest.mark.parametrize("seed", range(20))
def test_gates_preserve_norm(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 6))
    v = rng.standard_normal((2, 1 << m, 4)) + 1j * rng.standard_normal((2, 1 << m, 4))
    v /= np.linalg.norm(v)
    apply_gates(v, qft_gates(m), m)
    assert abs(np.linalg.norm(v) - 1) <= 1e-12


def test_probabilities():
    lay = QubitLayout(1, 1)
    amps = np.zeros(8, complex)
    amps[0] = amps[7] = 1 / np.sqrt(2)
    s = RegisterState(amps, lay)
    assert s.ancilla_probability(1) == pytest.approx(0.5)
    assert np.allclose(s.clock_probabilities(), [0.5, 0.5])
    assert s.norm() == pytest.approx(1.0)
