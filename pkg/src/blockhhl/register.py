"""Statevector register for the HHL circuit.

The register is ``ancilla (1 qubit) x clock (m qubits) x system (q qubits)``,
with the ancilla as the most significant qubit. A flat amplitude index is
``ancilla * 2**(m+q) + clock * 2**q + system``. Clock qubit ``l`` is bit ``l``
of the clock value, so qubit 0 is the least significant.

Gates act on a ``(2, 2**m, 2**q)`` view of the amplitudes and touch every
amplitude once, which keeps the cost of each gate linear in the state size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatchError

NORM_TOL = 1e-12


@dataclass(frozen=True)
class QubitLayout:
    clock: int
    system: int

    @property
    def total(self) -> int:
        return 1 + self.clock + self.system

    @property
    def clock_dim(self) -> int:
        return 1 << self.clock

    @property
    def system_dim(self) -> int:
        return 1 << self.system

    @property
    def size(self) -> int:
        return 1 << self.total


def system_qubits(dim: int) -> int:
    return max(0, math.ceil(math.log2(dim))) if dim > 1 else 0


@dataclass(frozen=True, eq=False)
class RegisterState:
    amplitudes: np.ndarray
    layout: QubitLayout

    def __post_init__(self):
        if self.amplitudes.shape != (self.layout.size,):
            raise DimensionMismatchError(
                f"amplitude vector of length {self.amplitudes.shape} does not fit {self.layout}"
            )

    def tensor(self) -> np.ndarray:
        """``(ancilla, clock, system)`` view of a copy of the amplitudes."""
        lay = self.layout
        return self.amplitudes.copy().reshape(2, lay.clock_dim, lay.system_dim)

    @classmethod
    def from_tensor(cls, t, layout) -> "RegisterState":
        return cls(np.ascontiguousarray(t).reshape(-1), layout)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def clock_probabilities(self) -> np.ndarray:
        t = self.amplitudes.reshape(2, self.layout.clock_dim, self.layout.system_dim)
        return np.sum(np.abs(t) ** 2, axis=(0, 2))

    def ancilla_probability(self, value=1) -> float:
        half = self.layout.size // 2
        part = self.amplitudes[half:] if value else self.amplitudes[:half]
        return float(np.vdot(part, part).real)


def _bit_view(t, bit, m):
    """Split the clock axis so that axis 2 is clock qubit ``bit``."""
    return t.reshape(2, 1 << (m - 1 - bit), 2, 1 << bit, t.shape[-1])


_SQRT_HALF = 1.0 / math.sqrt(2.0)


def hadamard(t, bit, m):
    v = _bit_view(t, bit, m)
    a = v[:, :, 0].copy()
    b = v[:, :, 1]
    v[:, :, 0] = (a + b) * _SQRT_HALF
    v[:, :, 1] = (a - b) * _SQRT_HALF


def controlled_system_unitary(t, bit, m, U):
    """Apply ``U`` to the system register where clock qubit ``bit`` is 1."""
    v = _bit_view(t, bit, m)
    v[:, :, 1] = v[:, :, 1] @ U.T


@lru_cache(maxsize=None)
def _both_set(a, b, m):
    c = np.arange(1 << m)
    return np.flatnonzero(((c >> a) & 1) & ((c >> b) & 1))


@lru_cache(maxsize=None)
def _swap_perm(a, b, m):
    c = np.arange(1 << m)
    flip = ((c >> a) & 1) ^ ((c >> b) & 1)
    return c ^ (flip << a) ^ (flip << b)


def controlled_phase(t, a, b, theta, m):
    """Multiply by ``exp(i theta)`` where clock qubits ``a`` and ``b`` are both 1."""
    t[:, _both_set(a, b, m), :] *= np.exp(1j * theta)


def swap(t, a, b, m):
    t[:] = t[:, _swap_perm(a, b, m), :]


def qft_gates(m):
    """Gate list for the QFT ``|x> -> 2**(-m/2) sum_y exp(2 pi i x y / 2**m) |y>``."""
    gates = []
    for j in range(m - 1, -1, -1):
        gates.append(("h", j))
        for k in range(j - 1, -1, -1):
            gates.append(("cp", j, k, math.pi / (1 << (j - k))))
    for i in range(m // 2):
        gates.append(("swap", i, m - 1 - i))
    return gates


def inverse_gates(gates):
    out = []
    for g in reversed(gates):
        if g[0] == "cp":
            out.append(("cp", g[1], g[2], -g[3]))
        else:
            out.append(g)
    return out


def apply_gates(t, gates, m):
    for g in gates:
        kind = g[0]
        if kind == "h":
            hadamard(t, g[1], m)
        elif kind == "cp":
            controlled_phase(t, g[1], g[2], g[3], m)
        elif kind == "swap":
            swap(t, g[1], g[2], m)
        else:
            raise ValueError(f"unknown gate {kind!r}")
