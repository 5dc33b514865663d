"""Dense occupancy bitmaps of the level-k approximation, plus PBM rendering.

The level-k approximation of a fractal cube is the union of the closed grid
cells selected by the k-fold digit composition on the m^d grid, m = n^k.
Cells are addressed by row-major flat indices (last axis fastest) and stored
one bit per cell in a packed little-bit-order buffer, with the sorted flat
indices of the occupied cells kept alongside for fast scans.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, memory_budget
from .model import DigitSet

# Working-set estimate per occupied cell during construction/labeling:
# the int64 flat array, a sort buffer and one transient of the same size.
_BYTES_PER_OCCUPIED = 24


@dataclass(frozen=True, eq=False)
class CellGrid:
    """Occupancy of the m^d cell grid at one subdivision level.

    ``bits`` packs one bit per cell (bit f&7 of byte f>>3 for flat index f);
    ``occupied`` is the sorted int64 array of occupied flat indices.  Both
    arrays are read-only; grids are safe to share across threads.
    """

    base: int
    level: int
    dim: int
    side: int
    bits: np.ndarray
    occupied: np.ndarray
    strides: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "strides",
                           tuple(self.side**(self.dim - 1 - a) for a in range(self.dim)))

    @property
    def occupied_count(self) -> int:
        return int(self.occupied.size)

    @property
    def total_cells(self) -> int:
        return self.side**self.dim

    def flat_of_cell(self, cell) -> int:
        if len(cell) != self.dim:
            raise ValueError(f"cell {tuple(cell)} has {len(cell)} coordinates, expected {self.dim}")
        f = 0
        for c in cell:
            c = int(c)
            if not 0 <= c < self.side:
                raise ValueError(f"cell coordinate {c} outside 0..{self.side - 1}")
            f = f * self.side + c
        return f

    def cell_of_flat(self, flat: int) -> tuple[int, ...]:
        out = []
        f = int(flat)
        for _ in range(self.dim):
            out.append(f % self.side)
            f //= self.side
        return tuple(reversed(out))

    def contains(self, cell) -> bool:
        f = self.flat_of_cell(cell)
        return bool((self.bits[f >> 3] >> (f & 7)) & 1)

    def coords_of(self, flats: np.ndarray) -> np.ndarray:
        """Per-axis coordinates of flat indices, shape (len(flats), dim)."""
        flats = np.asarray(flats, dtype=np.int64)
        cols = [(flats // s) % self.side for s in self.strides]
        return np.stack(cols, axis=1)

    def test_flats(self, flats: np.ndarray) -> np.ndarray:
        """Vectorized occupancy test for an array of flat indices."""
        flats = np.asarray(flats, dtype=np.int64)
        return ((self.bits[flats >> 3] >> (flats & 7).astype(np.uint8)) & 1).astype(bool)


def build_grid(ds: DigitSet, k: int, max_bytes: int | None = None) -> CellGrid:
    """Materialize the level-k occupancy bitmap by k-fold digit expansion.

    Flat indices are linear in cell coordinates and coordinates add without
    carries across levels, so the occupied set is built as a k-fold sum of
    scaled digit flats; no intermediate exceeds the output size.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = ds.base
    m = n**k
    cells = m**ds.dim
    if cells >= 2**62:
        raise OverflowError(f"grid of {m}^{ds.dim} cells exceeds int64 indexing")
    count = ds.count**k
    budget = memory_budget(max_bytes)
    bitmap_bytes = (cells + 7) >> 3
    required = bitmap_bytes + _BYTES_PER_OCCUPIED * count
    if required > budget:
        raise BudgetError(required, budget, detail=f"level {k} grid, side {m}")

    strides = tuple(m**(ds.dim - 1 - a) for a in range(ds.dim))
    dig = np.array(ds.digits, dtype=np.int64).reshape(ds.count, ds.dim)
    dig_flat = dig @ np.array(strides, dtype=np.int64)
    flats = np.zeros(1, dtype=np.int64)
    scale = 1
    for _ in range(k):
        flats = (flats[:, None] + scale * dig_flat[None, :]).ravel()
        scale *= n
    flats = np.sort(flats)

    bits = np.zeros(bitmap_bytes, dtype=np.uint8)
    np.bitwise_or.at(bits, flats >> 3, np.uint8(1) << (flats & 7).astype(np.uint8))
    bits.flags.writeable = False
    flats.flags.writeable = False
    return CellGrid(base=n, level=k, dim=ds.dim, side=m, bits=bits, occupied=flats)


# ---------------------------------------------------------------------------
# Portable bitmap (plain PBM, magic P1)
# ---------------------------------------------------------------------------

def render_pbm(grid: CellGrid, slice_spec=None) -> bytes:
    """Render a grid (or a 2-axis slice of it) as a plain PBM bitmap.

    ``slice_spec`` fixes coordinates for d > 2: a length-d sequence with
    None marking the two free axes.  The first free axis runs left to right,
    the second bottom to top (top image row = maximal coordinate); ``1``
    marks an occupied cell.  d=1 renders as an m x 1 bitmap.
    """
    m = grid.side
    if grid.dim == 1:
        if slice_spec is not None:
            raise ValueError("slice arity mismatch: no slicing for d=1")
        flats = np.arange(m, dtype=np.int64)
        row = np.where(grid.test_flats(flats), 49, 48).astype(np.uint8)  # '1'/'0'
        body = row.tobytes() + b"\n"
        return b"P1\n%d 1\n" % m + body

    if grid.dim == 2:
        if slice_spec is not None and (len(slice_spec) != 2 or any(v is not None for v in slice_spec)):
            raise ValueError("slice arity mismatch: d=2 grids have exactly 2 free axes")
        ax_h, ax_v = 0, 1
        base_flat = 0
    else:
        if slice_spec is None or len(slice_spec) != grid.dim:
            raise ValueError(f"slice arity mismatch: need {grid.dim} entries with 2 free axes")
        free = [a for a, v in enumerate(slice_spec) if v is None]
        if len(free) != 2:
            raise ValueError(f"slice arity mismatch: {len(free)} free axes, expected 2")
        ax_h, ax_v = free
        base_flat = 0
        for a, v in enumerate(slice_spec):
            if v is None:
                continue
            v = int(v)
            if not 0 <= v < m:
                raise ValueError(f"slice coordinate {v} outside 0..{m - 1}")
            base_flat += v * grid.strides[a]

    sh, sv = grid.strides[ax_h], grid.strides[ax_v]
    cols = np.arange(m, dtype=np.int64) * sh
    out = [b"P1\n%d %d\n" % (m, m)]
    for r in range(m):
        y = m - 1 - r
        occ = grid.test_flats(base_flat + y * sv + cols)
        out.append(np.where(occ, 49, 48).astype(np.uint8).tobytes() + b"\n")
    return b"".join(out)


def parse_pbm(data: bytes) -> tuple[int, int, np.ndarray]:
    """Parse a plain PBM; returns (width, height, pixels[row][col]) with 1 = set."""
    text = data.decode("ascii")
    # Strip comments, then tokenize: magic, width, height, raster digits.
    stripped = "\n".join(ln.split("#", 1)[0] for ln in text.splitlines())
    tokens = stripped.split(None, 3)
    if len(tokens) < 4 or tokens[0] != "P1":
        raise ValueError("not a plain PBM (P1) file")
    width, height = int(tokens[1]), int(tokens[2])
    raster = [c for c in tokens[3] if not c.isspace()]
    if len(raster) != width * height or any(c not in "01" for c in raster):
        raise ValueError("PBM raster does not match its dimensions")
    arr = np.array([int(c) for c in raster], dtype=np.uint8).reshape(height, width)
    return width, height, arr
