"""Connected components of level-k approximations and the trivial-point decision.

Two occupied cells are adjacent when every coordinate differs by at most one
(Chebyshev adjacency): closed unit cubes at integer offsets intersect exactly
for those offsets, so this is the component structure of the approximation as
a union of closed cells.  An island is a component that avoids the boundary
of the unit cube; islands at some level are what produce trivial points.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np

from .errors import BudgetError
from .grid import CellGrid, build_grid
from .model import DigitSet, reduce_full_rank


@dataclass(frozen=True, slots=True)
class ComponentInfo:
    """Summary of one connected component of a cell grid."""

    id: int
    cell_count: int
    bbox_min: tuple[int, ...]
    bbox_max: tuple[int, ...]
    touches_low: tuple[bool, ...]
    touches_high: tuple[bool, ...]
    is_island: bool


class ComponentLabeling:
    """Partition of the occupied cells into Chebyshev-connected components.

    ``labels[i]`` is the component id of ``grid.occupied[i]``; ids are
    assigned in order of each component's smallest flat cell index, so the
    labeling is deterministic.  Per-component stats are kept as arrays and
    :class:`ComponentInfo` objects are materialized lazily.
    """

    def __init__(self, grid: CellGrid, labels: np.ndarray,
                 counts: np.ndarray, bbox_min: np.ndarray, bbox_max: np.ndarray):
        self.grid = grid
        self.labels = labels
        self.component_count = int(counts.size)
        self._counts = counts
        self._bbox_min = bbox_min
        self._bbox_max = bbox_max
        hi = grid.side - 1
        self._touch_low = bbox_min == 0
        self._touch_high = bbox_max == hi
        self._island_mask = ~(self._touch_low.any(axis=1) | self._touch_high.any(axis=1))

    @property
    def island_ids(self) -> np.ndarray:
        return np.flatnonzero(self._island_mask)

    @property
    def component_sizes(self) -> np.ndarray:
        """Cell count per component id."""
        return self._counts

    def component_info(self, cid: int) -> ComponentInfo:
        if not 0 <= cid < self.component_count:
            raise ValueError(f"component id {cid} outside 0..{self.component_count - 1}")
        return ComponentInfo(
            id=cid,
            cell_count=int(self._counts[cid]),
            bbox_min=tuple(int(v) for v in self._bbox_min[cid]),
            bbox_max=tuple(int(v) for v in self._bbox_max[cid]),
            touches_low=tuple(bool(v) for v in self._touch_low[cid]),
            touches_high=tuple(bool(v) for v in self._touch_high[cid]),
            is_island=bool(self._island_mask[cid]),
        )

    @cached_property
    def components(self) -> list[ComponentInfo]:
        return [self.component_info(cid) for cid in range(self.component_count)]

    def label_of_cell(self, cell) -> int:
        flat = self.grid.flat_of_cell(cell)
        pos = int(np.searchsorted(self.grid.occupied, flat))
        if pos >= self.grid.occupied.size or self.grid.occupied[pos] != flat:
            raise ValueError(f"cell {tuple(cell)} is not occupied")
        return int(self.labels[pos])

    def cells_of_component(self, cid: int) -> np.ndarray:
        """Sorted flat indices of the component's cells."""
        if not 0 <= cid < self.component_count:
            raise ValueError(f"component id {cid} outside 0..{self.component_count - 1}")
        return self.grid.occupied[self.labels == cid]

    def partition(self) -> list[np.ndarray]:
        """All components as sorted flat-index arrays, ordered by id."""
        order = np.argsort(self.labels, kind="stable")
        bounds = np.cumsum(self._counts)[:-1]
        return [np.sort(part) for part in np.split(self.grid.occupied[order], bounds)]


def _negative_offsets(dim: int) -> list[tuple[int, ...]]:
    """Chebyshev neighbor offsets whose first nonzero entry is -1 (one per pair)."""
    offs = []
    for off in product((-1, 0, 1), repeat=dim):
        nz = next((v for v in off if v != 0), 0)
        if nz == -1:
            offs.append(off)
    return offs


def label_components(grid: CellGrid) -> ComponentLabeling:
    """Label occupied cells under Chebyshev adjacency via union-find.

    Neighbor pairs are extracted per offset with vectorized binary search on
    the sorted occupied array; the union loop runs compiled (path compression
    + union by size) and a final pass renumbers components by their smallest
    contained cell index.
    """
    from . import _ccl  # deferred: numba import is slow and not always needed

    occ = grid.occupied
    mcount = occ.size
    parent = np.arange(mcount, dtype=np.int64)
    size = np.ones(mcount, dtype=np.int64)
    coords = grid.coords_of(occ)
    hi = grid.side - 1

    for off in _negative_offsets(grid.dim):
        valid = np.ones(mcount, dtype=bool)
        shift = 0
        for a, delta in enumerate(off):
            if delta == -1:
                valid &= coords[:, a] > 0
                shift -= grid.strides[a]
            elif delta == 1:
                valid &= coords[:, a] < hi
                shift += grid.strides[a]
        nb = occ[valid] + shift
        pos = np.searchsorted(occ, nb)
        found = (pos < mcount) & (occ[np.minimum(pos, mcount - 1)] == nb)
        u = np.flatnonzero(valid)[found]
        v = pos[found]
        _ccl.union_edges(parent, size, u, v)

    _ccl.resolve_roots(parent)

    uniq, inv = np.unique(parent, return_inverse=True)
    first_pos = np.full(uniq.size, mcount, dtype=np.int64)
    np.minimum.at(first_pos, inv, np.arange(mcount, dtype=np.int64))
    rank = np.empty(uniq.size, dtype=np.int64)
    rank[np.argsort(first_pos)] = np.arange(uniq.size, dtype=np.int64)
    labels = rank[inv]

    counts = np.bincount(labels, minlength=uniq.size)
    order = np.argsort(labels, kind="stable")
    starts = np.zeros(uniq.size, dtype=np.int64)
    np.cumsum(counts[:-1], out=starts[1:])
    bbox_min = np.empty((uniq.size, grid.dim), dtype=np.int64)
    bbox_max = np.empty((uniq.size, grid.dim), dtype=np.int64)
    for a in range(grid.dim):
        ca = coords[order, a]
        bbox_min[:, a] = np.minimum.reduceat(ca, starts)
        bbox_max[:, a] = np.maximum.reduceat(ca, starts)
    return ComponentLabeling(grid, labels, counts, bbox_min, bbox_max)


def find_islands(labeling: ComponentLabeling) -> list[ComponentInfo]:
    """Components with every cell coordinate in [1, m-2], ordered by id."""
    return [labeling.component_info(int(cid)) for cid in labeling.island_ids]


def first_island_level(ds: DigitSet, k_max: int, max_bytes: int | None = None) -> int | None:
    """Smallest level k <= k_max whose approximation has an island, else None.

    Callers should reduce to full affine rank first; a set spanning a proper
    affine subspace never develops islands even when trivial points exist.
    """
    hit = _first_island(ds, k_max, max_bytes)
    return hit[0] if hit else None


def _first_island(ds: DigitSet, k_max: int,
                  max_bytes: int | None = None) -> tuple[int, int] | None:
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    for k in range(1, k_max + 1):
        try:
            labeling = label_components(build_grid(ds, k, max_bytes))
        except BudgetError as e:
            raise BudgetError(e.required_bytes, e.allowed_bytes,
                              detail=f"island search stopped at level {k}") from None
        ids = labeling.island_ids
        if ids.size:
            return k, int(ids[0])
    return None


# ---------------------------------------------------------------------------
# Exact piece intersections via the offset graph
# ---------------------------------------------------------------------------

def _offset_survivors(ds: DigitSet) -> frozenset[tuple[int, ...]]:
    """Offsets v in {-1,0,1}^d from which the offset graph admits an infinite walk.

    Nodes are integer offsets with every entry in {-1,0,1}; there is an edge
    w -> w' when w' = n*w + b - a for digits a, b.  The attractor meets its
    translate by v exactly when an infinite walk starts at v, i.e. when v
    survives iterated removal of nodes without outgoing edges.
    """
    n = ds.base
    deltas = {tuple(b[a] - c[a] for a in range(ds.dim))
              for b in ds.digits for c in ds.digits}
    nodes = set(product((-1, 0, 1), repeat=ds.dim))
    succ = {
        w: {wp for d in deltas
            if (wp := tuple(n * w[a] + d[a] for a in range(ds.dim))) in nodes}
        for w in nodes
    }
    alive = set(nodes)
    changed = True
    while changed:
        changed = False
        for w in list(alive):
            if not (succ[w] & alive):
                alive.remove(w)
                changed = True
    return frozenset(alive)


def piece_intersects(ds: DigitSet, v) -> bool:
    """Exact test whether the attractor meets its translate by integer offset v."""
    v = tuple(int(c) for c in v)
    if len(v) != ds.dim or any(abs(c) > 1 for c in v):
        raise ValueError(f"offset {v} must lie in {{-1,0,1}}^{ds.dim}")
    return v in _offset_survivors(ds)


def hata_connected(ds: DigitSet) -> bool:
    """Connectivity of the piece-intersection graph; True implies the attractor
    is connected (and then, with at least two digits, has no trivial point).
    """
    survivors = _offset_survivors(ds)
    digits = ds.digits
    adj: list[list[int]] = [[] for _ in digits]
    for i in range(len(digits)):
        for j in range(i + 1, len(digits)):
            u = tuple(digits[j][a] - digits[i][a] for a in range(ds.dim))
            if all(abs(c) <= 1 for c in u) and u in survivors:
                adj[i].append(j)
                adj[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == len(digits)


# ---------------------------------------------------------------------------
# Trivial-point verdict
# ---------------------------------------------------------------------------

VERDICT_HAS_TRIVIAL_POINT = "has_trivial_point"
VERDICT_NO_TRIVIAL_POINT = "no_trivial_point"
VERDICT_SINGLETON = "singleton"
VERDICT_UNKNOWN = "unknown"


@dataclass(frozen=True)
class TrivialPointVerdict:
    """Outcome of the trivial-point decision procedure.

    ``has_trivial_point`` carries the first island level, ``no_trivial_point``
    a connectivity certificate, ``singleton`` marks a one-point attractor
    (its own trivial component), and ``unknown`` records the search depth:
    island absence up to a finite level is never proof of absence.
    """

    kind: str
    level: int | None = None
    island_id: int | None = None
    certificate: str | None = None
    k_max: int | None = None

    @classmethod
    def trivial_point(cls, level: int, island_id: int) -> "TrivialPointVerdict":
        return cls(VERDICT_HAS_TRIVIAL_POINT, level=level, island_id=island_id)

    @classmethod
    def no_trivial_point(cls) -> "TrivialPointVerdict":
        return cls(VERDICT_NO_TRIVIAL_POINT, certificate="connected-attractor")

    @classmethod
    def singleton(cls) -> "TrivialPointVerdict":
        return cls(VERDICT_SINGLETON)

    @classmethod
    def unknown(cls, k_max: int) -> "TrivialPointVerdict":
        return cls(VERDICT_UNKNOWN, k_max=k_max)


def trivial_point_status(ds: DigitSet, k_max: int,
                         max_bytes: int | None = None) -> TrivialPointVerdict:
    """Decide trivial-point existence up to search depth k_max.

    Pipeline: reduce to full affine rank; a rank-0 set is a single point and
    therefore its own trivial component.  Otherwise search levels 1..k_max
    for an island (an island forces a trivial point).  Failing that, a
    connected attractor with at least two digits has no trivial point; if
    connectivity cannot be certified either, the outcome is unknown.
    """
    red = reduce_full_rank(ds)
    if red.collapsed_to_point:
        return TrivialPointVerdict.singleton()
    hit = _first_island(red.reduced, k_max, max_bytes)
    if hit is not None:
        return TrivialPointVerdict.trivial_point(*hit)
    if ds.count >= 2 and hata_connected(red.reduced):
        return TrivialPointVerdict.no_trivial_point()
    return TrivialPointVerdict.unknown(k_max)


def component_of_cell(labeling: ComponentLabeling, cell) -> tuple[ComponentInfo, list[tuple[int, ...]]]:
    """The component containing an occupied cell, with its sorted cell list."""
    cid = labeling.label_of_cell(cell)
    flats = labeling.cells_of_component(cid)
    cells = [labeling.grid.cell_of_flat(int(f)) for f in flats]
    return labeling.component_info(cid), cells
