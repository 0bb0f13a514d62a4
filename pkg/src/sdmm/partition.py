"""Inner-product (MatDot) and outer-product (GASP) partitions of ``A`` and ``B``."""

from dataclasses import dataclass

import numpy as np

from .linalg import ShapeError, as_complex_matrix


@dataclass(frozen=True)
class InnerPartition:
    """Column blocks of ``A`` and matching row blocks of ``B``; ``AB = sum A_j B_j``."""

    blocks_a: tuple
    blocks_b: tuple

    @property
    def p(self):
        return len(self.blocks_a)


@dataclass(frozen=True)
class OuterPartition:
    """Row blocks of ``A`` and column blocks of ``B``; ``AB`` is the grid of ``A_j B_j'``."""

    blocks_a: tuple
    blocks_b: tuple

    @property
    def m(self):
        return len(self.blocks_a)

    @property
    def n(self):
        return len(self.blocks_b)


def _check_inner(a, b):
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"A is {a.shape} and B is {b.shape}: inner dimensions differ", a.shape, b.shape
        )


def split_inner(a, b, p):
    a = as_complex_matrix(a, "A")
    b = as_complex_matrix(b, "B")
    _check_inner(a, b)
    s = a.shape[1]
    if p < 1 or s % p:
        raise ValueError(f"p={p} does not divide the inner dimension s={s}")
    w = s // p
    blocks_a = tuple(np.ascontiguousarray(a[:, j * w:(j + 1) * w]) for j in range(p))
    blocks_b = tuple(np.ascontiguousarray(b[j * w:(j + 1) * w, :]) for j in range(p))
    return InnerPartition(blocks_a, blocks_b)


def split_outer(a, b, m, n):
    a = as_complex_matrix(a, "A")
    b = as_complex_matrix(b, "B")
    _check_inner(a, b)
    t, r = a.shape[0], b.shape[1]
    if m < 1 or t % m:
        raise ValueError(f"m={m} does not divide the row count t={t}")
    if n < 1 or r % n:
        raise ValueError(f"n={n} does not divide the column count r={r}")
    h, w = t // m, r // n
    blocks_a = tuple(np.ascontiguousarray(a[j * h:(j + 1) * h, :]) for j in range(m))
    blocks_b = tuple(np.ascontiguousarray(b[:, j * w:(j + 1) * w]) for j in range(n))
    return OuterPartition(blocks_a, blocks_b)


def assemble_outer(blocks):
    """Concatenate an ``m x n`` grid (list of rows) of blocks into one matrix."""
    grid = [[np.asarray(blk, dtype=np.complex128) for blk in row] for row in blocks]
    if not grid or not grid[0]:
        raise ShapeError("empty block grid")
    width = len(grid[0])
    if any(len(row) != width for row in grid):
        raise ShapeError("ragged block grid: rows have different lengths")
    col_widths = [blk.shape[1] for blk in grid[0]]
    for row in grid:
        height = row[0].shape[0]
        for blk, cw in zip(row, col_widths):
            if blk.ndim != 2 or blk.shape != (height, cw):
                raise ShapeError(
                    f"block of shape {blk.shape} does not fit grid cell ({height}, {cw})",
                    blk.shape,
                )
    return np.block(grid)
