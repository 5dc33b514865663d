"""Graph-directed systems with uniform ratio 1/n: dimension and verification.

A directed multigraph with digit-labeled edges describes a family of sets,
one per node, each the union of (z + digit)/n images of the edge targets.
The common dimension of the family is log(rho)/log(n) for the Perron root
rho of the edge-count matrix; the root is enclosed rigorously with
Collatz-Wielandt bounds.  A user-supplied decomposition can be checked
against grid components level by level.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ParseError, memory_budget, BudgetError
from .grid import build_grid
from .model import DigitSet
from .topology import component_of_cell, label_components

SPECTRAL_REL_TOL = 1e-12
SPECTRAL_MAX_ITER = 10**6


@dataclass(frozen=True)
class MWGraph:
    """Directed multigraph with digit-labeled edges and uniform ratio 1/base."""

    base: int
    dim: int
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, tuple[int, ...]], ...]

    def __post_init__(self):
        if self.base < 2:
            raise ValueError(f"base must be >= 2, got {self.base}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if not self.nodes:
            raise ValueError("graph needs at least one node")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate node names")
        canon = []
        seen = set()
        for src, dst, digit in self.edges:
            if src not in self.nodes or dst not in self.nodes:
                raise ValueError(f"edge {src}->{dst} references an unknown node")
            digit = tuple(int(c) for c in digit)
            if len(digit) != self.dim:
                raise ValueError(f"edge digit {digit} has {len(digit)} coordinates, expected {self.dim}")
            if any(not 0 <= c < self.base for c in digit):
                raise ValueError(f"edge digit {digit} outside {{0..{self.base - 1}}}^{self.dim}")
            triple = (src, dst, digit)
            if triple in seen:
                raise ValueError(f"duplicate edge {triple}")
            seen.add(triple)
            canon.append(triple)
        object.__setattr__(self, "edges", tuple(canon))

    @cached_property
    def count_matrix(self) -> np.ndarray:
        """A[u][v] = number of edges u -> v, in node order."""
        index = {name: i for i, name in enumerate(self.nodes)}
        mat = np.zeros((len(self.nodes), len(self.nodes)), dtype=np.int64)
        for src, dst, _ in self.edges:
            mat[index[src], index[dst]] += 1
        return mat

    def out_edges(self, node: str) -> list[tuple[str, tuple[int, ...]]]:
        return [(dst, digit) for src, dst, digit in self.edges if src == node]


def load_graph(data: bytes | str) -> MWGraph:
    """Parse the graph JSON format; unknown fields are rejected."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno, column=e.colno) from None
    if not isinstance(obj, dict):
        raise ParseError("graph file must be a JSON object")
    allowed = {"base", "dim", "nodes", "edges"}
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"unknown graph fields: {sorted(unknown)}")
    missing = allowed - set(obj)
    if missing:
        raise ParseError(f"missing graph fields: {sorted(missing)}")
    if not isinstance(obj["nodes"], list) or not all(isinstance(x, str) for x in obj["nodes"]):
        raise ParseError("'nodes' must be a list of strings")
    if not isinstance(obj["edges"], list):
        raise ParseError("'edges' must be a list")
    edges = []
    for i, e in enumerate(obj["edges"]):
        if not isinstance(e, dict) or set(e) != {"from", "to", "digit"}:
            raise ParseError(f"edge #{i} must have exactly the fields from/to/digit")
        if not isinstance(e["digit"], list) or not all(isinstance(c, int) for c in e["digit"]):
            raise ParseError(f"edge #{i} digit must be a list of integers")
        edges.append((e["from"], e["to"], tuple(e["digit"])))
    try:
        return MWGraph(int(obj["base"]), int(obj["dim"]), tuple(obj["nodes"]), tuple(edges))
    except (TypeError, ValueError) as e:
        raise ParseError(str(e)) from None


# ---------------------------------------------------------------------------
# Certified Perron root
# ---------------------------------------------------------------------------

def _strong_components(adj: np.ndarray) -> list[list[int]]:
    """Tarjan SCC on the boolean adjacency matrix (iterative)."""
    size = adj.shape[0]
    index = [-1] * size
    low = [0] * size
    on_stack = [False] * size
    stack: list[int] = []
    next_index = 0
    sccs: list[list[int]] = []
    for root in range(size):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            node, ei = work[-1]
            if ei == 0:
                index[node] = low[node] = next_index
                next_index += 1
                stack.append(node)
                on_stack[node] = True
            advanced = False
            for j in range(ei, size):
                if not adj[node, j]:
                    continue
                if index[j] == -1:
                    work[-1] = (node, j + 1)
                    work.append((j, 0))
                    advanced = True
                    break
                if on_stack[j]:
                    low[node] = min(low[node], index[j])
            if advanced:
                continue
            work.pop()
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == node:
                        break
                sccs.append(comp)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return sccs


def spectral_radius(matrix) -> tuple[float, float]:
    """Certified enclosure [lo, hi] of the spectral radius of a nonnegative matrix.

    The matrix is split into strongly connected components; on each, power
    iteration on the identity-shifted block (shifted to force aperiodicity,
    otherwise the bounds can oscillate forever) refines the Collatz-Wielandt
    bounds min_i (Ax)_i/x_i <= rho <= max_i (Ax)_i/x_i until the enclosure is
    tighter than 1e-12 relative or the iteration cap is hit.  The returned
    interval is widened by a float-rounding pad so that it provably contains
    the root.
    """
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"matrix must be square, got shape {mat.shape}")
    if mat.size == 0:
        raise ValueError("matrix must be nonempty")
    if (mat < 0).any():
        raise ValueError("matrix must be nonnegative")
    if not mat.any():
        return 0.0, 0.0

    lo_best, hi_best = 0.0, 0.0
    for comp in _strong_components(mat > 0):
        if len(comp) == 1:
            i = comp[0]
            val = float(mat[i, i])
            lo, hi = val, val
        else:
            block = mat[np.ix_(comp, comp)] + np.eye(len(comp))
            x = np.ones(len(comp))
            lo = hi = 0.0
            for _ in range(SPECTRAL_MAX_ITER):
                y = block @ x
                ratios = y / x
                lo, hi = float(ratios.min()), float(ratios.max())
                if hi - lo <= SPECTRAL_REL_TOL * hi:
                    break
                x = y / y.max()
            pad = 8 * len(comp) * np.finfo(np.float64).eps * hi
            lo, hi = max(0.0, lo - 1.0 - pad), hi - 1.0 + pad
        if hi > hi_best:
            hi_best = hi
        if lo > lo_best:
            lo_best = lo
    return lo_best, hi_best


def gd_dimension(graph: MWGraph) -> tuple[float, tuple[float, float]]:
    """log(Perron root)/log(base) with the enclosure mapped through the log."""
    lo, hi = spectral_radius(graph.count_matrix)
    log_n = math.log(graph.base)
    if hi == 0.0:
        return float("-inf"), (float("-inf"), float("-inf"))
    dim_lo = math.log(lo) / log_n if lo > 0 else float("-inf")
    dim_hi = math.log(hi) / log_n
    value = math.log((lo + hi) / 2) / log_n
    return value, (dim_lo, dim_hi)


# ---------------------------------------------------------------------------
# Path cells and decomposition verification
# ---------------------------------------------------------------------------

def path_cells(graph: MWGraph, start: str, length: int,
               max_bytes: int | None = None) -> np.ndarray:
    """Sorted flat indices of the level-``length`` cells reached by paths from ``start``.

    A path's cell is the positional expansion of its digit word (first edge
    most significant).  Computed by dynamic programming on (node, cell) with
    per-step deduplication, so shared cells are never enumerated per path.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    if start not in graph.nodes:
        raise ValueError(f"unknown node {start!r}")
    n, d = graph.base, graph.dim
    budget = memory_budget(max_bytes)
    states: dict[str, np.ndarray | None] = {node: None for node in graph.nodes}
    states[start] = np.zeros((1, d), dtype=np.int64)
    digit_arrays = {}
    for src, dst, digit in graph.edges:
        digit_arrays[(src, dst, digit)] = np.array(digit, dtype=np.int64)
    for _ in range(length):
        incoming: dict[str, list[np.ndarray]] = {node: [] for node in graph.nodes}
        for src, dst, digit in graph.edges:
            cur = states[src]
            if cur is not None:
                incoming[dst].append(cur * n + digit_arrays[(src, dst, digit)])
        new_states: dict[str, np.ndarray | None] = {}
        total = 0
        for node, parts in incoming.items():
            if parts:
                merged = np.unique(np.concatenate(parts, axis=0), axis=0)
                new_states[node] = merged
                total += merged.size
            else:
                new_states[node] = None
        if total * 8 > budget:
            raise BudgetError(total * 8, budget, detail="path-cell frontier")
        states = new_states
    m = n**length
    strides = np.array([m**(d - 1 - a) for a in range(d)], dtype=np.int64)
    reached = [s @ strides for s in states.values() if s is not None]
    if not reached:
        return np.empty(0, dtype=np.int64)
    return np.unique(np.concatenate(reached))


@dataclass(frozen=True)
class LevelOutcome:
    level: int
    equal: bool
    component_cells: int
    path_cell_count: int
    first_mismatch: tuple[int, ...] | None


@dataclass(frozen=True)
class GDVerification:
    """Per-level comparison of a grid component against graph path cells."""

    levels: tuple[LevelOutcome, ...]

    @property
    def all_equal(self) -> bool:
        return all(o.equal for o in self.levels)


def verify_decomposition(ds: DigitSet, graph: MWGraph, node: str, cell,
                         levels: int, max_bytes: int | None = None) -> GDVerification:
    """Check that the component of a corner cell equals the graph's path cells.

    ``cell`` is a level-1 cell; at level l the seed is its repeated-digit
    expansion (the level-l cell containing the corresponding fixed point).
    Equality is set equality of occupied cells, recorded per level together
    with the first mismatching cell when the sets differ.
    """
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    if graph.base != ds.base or graph.dim != ds.dim:
        raise ValueError("graph base/dim must match the digit set")
    digit_set = set(ds.digits)
    for _, _, digit in graph.edges:
        if digit not in digit_set:
            raise ValueError(f"graph digit {digit} is not a digit of the cube")
    cell = tuple(int(c) for c in cell)
    if cell not in digit_set:
        raise ValueError(f"seed cell {cell} is not occupied at level 1")

    n = ds.base
    outcomes = []
    for level in range(1, levels + 1):
        grid = build_grid(ds, level, max_bytes)
        labeling = label_components(grid)
        seed = tuple(c * (n**level - 1) // (n - 1) for c in cell)
        cid = labeling.label_of_cell(seed)
        comp_flats = labeling.cells_of_component(cid)
        path_flats = path_cells(graph, node, level, max_bytes)
        equal = comp_flats.size == path_flats.size and bool(np.array_equal(comp_flats, path_flats))
        mismatch = None
        if not equal:
            diff = np.setxor1d(comp_flats, path_flats)
            mismatch = grid.cell_of_flat(int(diff[0]))
        outcomes.append(LevelOutcome(level, equal, int(comp_flats.size),
                                     int(path_flats.size), mismatch))
    return GDVerification(tuple(outcomes))
