"""Statevector simulation of the HHL linear-solver circuit for one block.

The circuit stages are exposed separately (``prepare_state``, ``qpe_forward``,
``eigen_invert``, ``qpe_inverse``) and chained by :func:`hhl_solve`.

Hamiltonian evolution ``exp(i A t 2**l)`` is computed exactly from an
eigendecomposition. Blocks whose dimension is not a power of two are padded
with an identity block; the padded right-hand side entries are zero so the
padding never receives amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatchError,
    InvalidRotationError,
    NotSPDError,
    PostSelectionError,
    ZeroRHSError,
)
from .matrix import DENSE_CAP, SparseMatrix, as_vector, matvec
from .register import (
    QubitLayout,
    RegisterState,
    apply_gates,
    controlled_system_unitary,
    hadamard,
    inverse_gates,
    qft_gates,
    system_qubits,
)

OCCUPIED_TOL = 1e-12
PHASE_EXACT_TOL = 1e-9
MIN_SUCCESS = 1e-12
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class HHLConfig:
    """Circuit parameters for one HHL solve.

    ``lambda_bounds`` are (lower, upper) eigenvalue estimates. The upper bound
    must keep every phase ``lambda * t / 2pi`` at or below 1/2, and the
    rotation constant may not exceed the lower bound.
    """

    clock_qubits: int
    evolution_time: float
    rotation_constant: float
    lambda_bounds: tuple
    shots: int = 0
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.lambda_bounds
        if self.clock_qubits < 1:
            raise ConfigError("clock_qubits must be at least 1")
        if not self.evolution_time > 0:
            raise ConfigError("evolution_time must be positive")
        if not self.rotation_constant > 0:
            raise ConfigError("rotation_constant must be positive")
        if self.shots < 0:
            raise ConfigError("shots must be non-negative")
        if not (0 < lo <= hi):
            raise ConfigError(f"invalid eigenvalue bounds {self.lambda_bounds}")
        if hi * self.evolution_time / TWO_PI > 0.5 + 1e-12:
            raise ConfigError("evolution time lets the largest phase wrap past 1/2")
        if self.rotation_constant > lo * (1 + 1e-12):
            raise ConfigError("rotation constant exceeds the lower eigenvalue bound")

    def decoded_eigenvalue(self, c):
        """Eigenvalue represented by clock value ``c``."""
        return TWO_PI * np.asarray(c) / ((1 << self.clock_qubits) * self.evolution_time)


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def evolution(self, time) -> np.ndarray:
        """``exp(i A time)``."""
        V = self.eigenvectors
        return (V * np.exp(1j * self.eigenvalues * time)) @ V.conj().T


@dataclass
class HHLResult:
    solution: np.ndarray
    success_probability: float
    phase_exactness: bool
    diagnostics: dict = field(default_factory=dict)


def padded_dense(A: SparseMatrix) -> np.ndarray:
    D = 1 << system_qubits(A.n)
    out = np.eye(D, dtype=np.complex128)
    out[:A.n, :A.n] = A.to_dense()
    return out


def eigendecompose(A: SparseMatrix, pad=True) -> EigenDecomposition:
    dense = padded_dense(A) if pad else A.to_dense()
    w, V = np.linalg.eigh(dense)
    if w[0] <= 0:
        raise NotSPDError(int(np.argmin(w)), f"smallest eigenvalue {w[0]:.3e} is not positive")
    return EigenDecomposition(w, V)


def gershgorin_bounds(A: SparseMatrix):
    """(lower, upper) Gershgorin bounds on the spectrum of a Hermitian matrix."""
    rows = A.row_indices()
    absrow = np.bincount(rows, weights=np.abs(A.values), minlength=A.n)
    d = A.diagonal().real
    radius = absrow - np.abs(d)
    return float(np.min(d - radius)), float(np.max(d + radius))


def choose_config(A_tilde: SparseMatrix, m: int, evolution_time=None, rotation_constant=None,
                  shots=0, seed=0, cap=DENSE_CAP) -> HHLConfig:
    """Pick ``t`` and ``C`` for a block.

    The upper eigenvalue estimate is the Gershgorin bound and ``t = pi / upper``;
    when ``evolution_time`` is given explicitly the exact largest eigenvalue is
    used instead so exact-phase fixtures are not rejected by a loose bound.
    The lower estimate is the exact smallest eigenvalue when the block fits the
    densification cap, otherwise the (positive) Gershgorin lower bound. ``C``
    is the smaller of the lower estimate and the eigenvalue decoded from clock
    value 1, so every rotation the circuit can request is valid.
    """
    g_lo, g_hi = gershgorin_bounds(A_tilde)
    lam_max = g_hi
    if A_tilde.n <= cap:
        w = np.linalg.eigvalsh(A_tilde.to_dense())
        lam_min = float(w[0])
        if lam_min <= 0:
            raise NotSPDError(0, f"smallest eigenvalue {lam_min:.3e} is not positive")
        if evolution_time is not None:
            # an explicit t is checked against the true spectrum, not the bound
            lam_max = float(w[-1])
    else:
        if g_lo <= 0:
            raise NotSPDError(0, "Gershgorin lower bound is not positive")
        lam_min = g_lo
    lam_max = max(lam_max, lam_min)
    t = math.pi / lam_max if evolution_time is None else float(evolution_time)
    if rotation_constant is None:
        smallest_decoded = TWO_PI / ((1 << m) * t)
        rotation_constant = min(lam_min, smallest_decoded)
    return HHLConfig(m, t, float(rotation_constant), (lam_min, lam_max), shots, seed)


def layout_for(dim, config: HHLConfig) -> QubitLayout:
    return QubitLayout(config.clock_qubits, system_qubits(dim))


def prepare_state(b_tilde, clock_qubits: int = 1) -> RegisterState:
    """Amplitude-encode ``b_tilde / ||b_tilde||`` into the system register."""
    b = as_vector(b_tilde)
    nb = np.linalg.norm(b)
    if nb == 0:
        raise ZeroRHSError("cannot encode a zero vector")
    layout = QubitLayout(clock_qubits, system_qubits(b.shape[0]))
    amps = np.zeros(layout.size, dtype=np.complex128)
    amps[: b.shape[0]] = b / nb
    return RegisterState(amps, layout)


def _check(state: RegisterState, eig: EigenDecomposition, config: HHLConfig):
    if state.layout.clock != config.clock_qubits:
        raise DimensionMismatchError("clock register width does not match config")
    if eig.eigenvalues.shape[0] != state.layout.system_dim:
        raise DimensionMismatchError("system register does not match the block dimension")


def _eig(A_tilde, eig):
    return eigendecompose(A_tilde) if eig is None else eig


def qpe_forward(state: RegisterState, A_tilde: SparseMatrix, config: HHLConfig,
                eig: Optional[EigenDecomposition] = None) -> RegisterState:
    """Phase estimation of ``U = exp(i A t)`` into the clock register."""
    eig = _eig(A_tilde, eig)
    _check(state, eig, config)
    m, t = config.clock_qubits, state.tensor()
    for bit in range(m):
        hadamard(t, bit, m)
    for bit in range(m):
        controlled_system_unitary(t, bit, m, eig.evolution(config.evolution_time * (1 << bit)))
    apply_gates(t, inverse_gates(qft_gates(m)), m)
    return RegisterState.from_tensor(t, state.layout)


def qpe_inverse(state: RegisterState, A_tilde: SparseMatrix, config: HHLConfig,
                eig: Optional[EigenDecomposition] = None) -> RegisterState:
    eig = _eig(A_tilde, eig)
    _check(state, eig, config)
    m, t = config.clock_qubits, state.tensor()
    apply_gates(t, qft_gates(m), m)
    for bit in reversed(range(m)):
        controlled_system_unitary(t, bit, m, eig.evolution(-config.evolution_time * (1 << bit)))
    for bit in range(m):
        hadamard(t, bit, m)
    return RegisterState.from_tensor(t, state.layout)


def eigen_invert(state: RegisterState, config: HHLConfig) -> RegisterState:
    """Rotate the ancilla by ``C / lambda_hat(c)`` for every nonzero clock value ``c``."""
    if state.layout.clock != config.clock_qubits:
        raise DimensionMismatchError("clock register width does not match config")
    t = state.tensor()
    c = np.arange(1, state.layout.clock_dim)
    ratio = config.rotation_constant / config.decoded_eigenvalue(c)
    occupied = np.max(np.abs(t[:, 1:, :]), axis=(0, 2)) > OCCUPIED_TOL
    bad = occupied & (ratio > 1 + 1e-12)
    if bad.any():
        c_bad = int(c[bad][0])
        raise InvalidRotationError(
            f"rotation constant {config.rotation_constant:.6g} exceeds decoded eigenvalue "
            f"{float(config.decoded_eigenvalue(c_bad)):.6g} at clock value {c_bad}"
        )
    s = np.where(ratio > 1, 0.0, ratio)[:, None]
    co = np.where(ratio > 1, 1.0, np.sqrt(np.clip(1 - ratio ** 2, 0, None)))[:, None]
    a0 = t[0, 1:, :].copy()
    a1 = t[1, 1:, :].copy()
    t[0, 1:, :] = co * a0 - s * a1
    t[1, 1:, :] = s * a0 + co * a1
    return RegisterState.from_tensor(t, state.layout)


def _occupied_phases(b, eig, config):
    beta = eig.eigenvectors.conj().T @ b
    occupied = np.abs(beta) > OCCUPIED_TOL
    scaled = eig.eigenvalues * config.evolution_time / TWO_PI * (1 << config.clock_qubits)
    exact = bool(np.all(np.abs(scaled[occupied] - np.round(scaled[occupied])) < PHASE_EXACT_TOL))
    return beta, occupied, scaled, exact


def _readout(final: RegisterState, nb, config, rng):
    lay = final.layout
    t = final.amplitudes.reshape(2, lay.clock_dim, lay.system_dim)
    p_success = final.ancilla_probability(1)
    if p_success < MIN_SUCCESS:
        raise PostSelectionError(f"ancilla success probability {p_success:.3e} too small")
    branch = t[1, 0, :]
    if config.shots == 0:
        return (nb / config.rotation_constant) * branch, p_success
    probs = np.abs(final.amplitudes) ** 2
    counts = rng.multinomial(config.shots, probs / probs.sum())
    half = lay.size // 2
    p_success = counts[half:].sum() / config.shots
    hits = counts[half:half + lay.system_dim]
    if hits.sum() == 0:
        raise PostSelectionError(f"no post-selected outcomes in {config.shots} shots")
    mags = np.sqrt(hits / config.shots)
    phase = np.divide(branch, np.abs(branch), out=np.zeros_like(branch), where=np.abs(branch) > 0)
    return (nb / config.rotation_constant) * mags * phase, float(p_success)


def run_circuit(A_tilde: SparseMatrix, b_tilde, config: HHLConfig,
                eig: Optional[EigenDecomposition] = None, rng=None) -> HHLResult:
    """Run the HHL circuit on ``(A_tilde, b_tilde)`` and read out the solution.

    The read-out keeps the amplitudes where the ancilla is 1 and the clock
    register is back at 0; for exactly representable phases that branch
    carries all of the ancilla-1 probability.
    """
    b = as_vector(b_tilde, A_tilde.n)
    nb = float(np.linalg.norm(b))
    if nb == 0:
        raise ZeroRHSError("right-hand side is zero")
    eig = _eig(A_tilde, eig)
    state = prepare_state(b, config.clock_qubits)
    state = qpe_forward(state, A_tilde, config, eig)
    state = eigen_invert(state, config)
    final = qpe_inverse(state, A_tilde, config, eig)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    x, p_success = _readout(final, nb, config, rng)

    padded_b = final.amplitudes[: final.layout.system_dim] * 0
    padded_b[: b.shape[0]] = b / nb
    beta, occupied, scaled, exact = _occupied_phases(padded_b, eig, config)
    lay = final.layout
    branch = final.amplitudes.reshape(2, lay.clock_dim, lay.system_dim)[1, 0, :]
    diagnostics = {
        "eigenvalues": eig.eigenvalues[occupied].tolist(),
        "phases": (scaled[occupied] / (1 << config.clock_qubits)).tolist(),
        "clock_estimates": np.round(scaled[occupied]).astype(int).tolist(),
        "postselect_probability": float(np.vdot(branch, branch).real),
        "state_size": lay.size,
    }
    return HHLResult(x[: A_tilde.n], float(p_success), exact, diagnostics)


def hhl_solve(block, config: HHLConfig) -> HHLResult:
    """Solve a preconditioned block ``a_tilde x = b_tilde`` with the HHL circuit."""
    return run_circuit(block.a_tilde, block.b_tilde, config)


def hhl_refine(block, config: HHLConfig, steps: int = 0) -> HHLResult:
    """HHL solve followed by ``steps`` rounds of iterative refinement.

    Each round computes the classical residual ``b - A x`` and solves for the
    correction with another run of the same circuit. The reported success
    probability and phase diagnostics are those of the first run.
    """
    A, b = block.a_tilde, as_vector(block.b_tilde)
    eig = eigendecompose(A)
    rng = np.random.default_rng(config.seed)
    first = run_circuit(A, b, config, eig, rng)
    x = first.solution.copy()
    nb = np.linalg.norm(b)
    done = 0
    for _ in range(steps):
        r = b - matvec(A, x)
        if np.linalg.norm(r) <= 1e-15 * nb:
            break
        x += run_circuit(A, r, config, eig, rng).solution
        done += 1
    first.diagnostics["refinement_steps"] = done
    return HHLResult(x, first.success_probability, first.phase_exactness, first.diagnostics)
