"""Contiguous block-diagonal partitioning and reassembly of block solutions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvalidSpecError, NotBlockDiagonalError
from .matrix import SparseMatrix, as_vector


@dataclass(frozen=True, eq=False)
class BlockSystem:
    """Diagonal blocks of a system plus what the partition threw away.

    ``discarded`` holds the (rows, cols, values) coordinates of every entry of
    the original matrix that fell outside the block-diagonal pattern.
    """

    blocks: tuple
    block_starts: tuple
    block_size: int
    n: int
    off_block_mass: float
    discarded: tuple

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def dims(self):
        return [A_i.n for A_i, _ in self.blocks]


def block_ranges(n, block_size):
    if block_size < 1:
        raise InvalidSpecError("block size must be a positive integer")
    if block_size > n:
        raise InvalidSpecError(f"block size {block_size} exceeds dimension {n}")
    return [(s, min(s + block_size, n)) for s in range(0, n, block_size)]


def partition(A: SparseMatrix, b, block_size: int, tolerance: float = 0.0) -> BlockSystem:
    """Split ``(A, b)`` into ``ceil(N / block_size)`` contiguous diagonal blocks.

    Raises NotBlockDiagonalError when the Frobenius norm of the entries outside
    the blocks exceeds ``tolerance * ||A||_F``.
    """
    b = as_vector(b, A.n)
    ranges = block_ranges(A.n, block_size)
    rows, cols, vals = A.to_coo()
    outside = rows // block_size != cols // block_size
    mass = float(np.linalg.norm(vals[outside]))
    limit = tolerance * A.frobenius_norm()
    if mass > limit:
        raise NotBlockDiagonalError(mass, limit)

    blocks = []
    inside = ~outside
    r_in, c_in, v_in = rows[inside], cols[inside], vals[inside]
    block_of = r_in // block_size
    bounds = np.searchsorted(block_of, np.arange(len(ranges) + 1))
    for i, (start, stop) in enumerate(ranges):
        sl = slice(bounds[i], bounds[i + 1])
        A_i = SparseMatrix.from_coo(stop - start, r_in[sl] - start, c_in[sl] - start, v_in[sl])
        b_i = b[start:stop].copy()
        b_i.setflags(write=False)
        blocks.append((A_i, b_i))
    return BlockSystem(
        blocks=tuple(blocks),
        block_starts=tuple(s for s, _ in ranges),
        block_size=block_size,
        n=A.n,
        off_block_mass=mass,
        discarded=(rows[outside], cols[outside], vals[outside]),
    )


def aggregate(blocks_x, system: BlockSystem) -> np.ndarray:
    """Concatenate per-block solutions in block order."""
    blocks_x = list(blocks_x)
    if len(blocks_x) != system.k:
        raise DimensionMismatchError(f"got {len(blocks_x)} block solutions for {system.k} blocks")
    parts = []
    for i, (x_i, (A_i, _)) in enumerate(zip(blocks_x, system.blocks)):
        x_i = as_vector(x_i)
        if x_i.shape[0] != A_i.n:
            raise DimensionMismatchError(f"block {i}: solution length {x_i.shape[0]} != {A_i.n}")
        parts.append(x_i)
    return np.concatenate(parts)
