"""Dimension-drop bounds on the connectedness index and the report chain.

The connectedness index of a set is the Hausdorff dimension of the union of
its non-trivial connected components; it sits between the topological
Hausdorff dimension and dim_H.  When a level-k approximation has islands,
every point whose coding hits island letters infinitely often is trivial, so
the non-trivial part is covered by words avoiding the island cells of that
level and log(remaining cells)/(k log n) bounds the index from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .grid import build_grid
from .model import DigitSet, hausdorff_dimension, reduce_full_rank
from .topology import (
    TrivialPointVerdict,
    hata_connected,
    label_components,
)

IC_EXACT_SLACK = 1e-9

# Dimension of the empty set, used when the islands of some level cover
# every cell (then every point is trivial and the non-trivial part is empty).
EMPTY_SET_DIMENSION = -1.0


@dataclass(frozen=True)
class IslandWitness:
    """Level whose island cells realize an upper-bound candidate."""

    level: int
    removed_cells: int


@dataclass(frozen=True)
class BoundsReport:
    """dim_tH <= connectedness index <= dim_H, with the trivial-point verdict.

    ``ic_upper`` is the best island-removal bound found up to the search
    depth (equal to dim_H when no island was found); ``strict_drop`` is set
    exactly when an island witnessed a strict drop below dim_H.  ``ic_exact``
    is a caller-supplied graph-directed value, checked for consistency.
    """

    dim_h: float
    dim_h_parts: tuple[int, int]
    ic_upper: float
    ic_witness: IslandWitness | None
    ic_exact: float | None
    th_upper: float
    verdict: TrivialPointVerdict
    strict_drop: bool
    reduced_dim: int
    reduction_steps: int


@dataclass(frozen=True)
class _LevelScan:
    level: int
    island_cells: int
    first_island_id: int | None
    total_cells: int


def _scan_levels(ds: DigitSet, k_max: int, max_bytes: int | None) -> list[_LevelScan]:
    out = []
    for k in range(1, k_max + 1):
        labeling = label_components(build_grid(ds, k, max_bytes))
        ids = labeling.island_ids
        island_cells = int(labeling.component_sizes[ids].sum()) if ids.size else 0
        out.append(_LevelScan(k, island_cells,
                              int(ids[0]) if ids.size else None,
                              labeling.grid.occupied_count))
    return out


def _candidate(ds: DigitSet, scan: _LevelScan) -> float:
    remaining = scan.total_cells - scan.island_cells
    if remaining == 0:
        return EMPTY_SET_DIMENSION
    return math.log(remaining) / (scan.level * math.log(ds.base))


def ic_upper_bound(ds: DigitSet, k_max: int,
                   max_bytes: int | None = None) -> tuple[float, IslandWitness | None]:
    """Best island-removal bound on the connectedness index up to level k_max.

    For every level with islands, removing all island cells leaves a digit
    set whose attractor covers the non-trivial part, so
    log(#remaining)/(k log n) bounds the index; the minimum over levels is
    returned with its witness.  Without islands the bound degrades to dim_H.
    The input must already have full affine rank.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    from .model import affine_rank

    if affine_rank(ds) != ds.dim:
        raise ValueError("ic_upper_bound needs a full-affine-rank digit set; reduce first")
    best: float | None = None
    witness: IslandWitness | None = None
    for scan in _scan_levels(ds, k_max, max_bytes):
        if scan.island_cells == 0:
            continue
        cand = _candidate(ds, scan)
        if best is None or cand < best:
            best = cand
            witness = IslandWitness(scan.level, scan.island_cells)
    if best is None:
        return hausdorff_dimension(ds), None
    return best, witness


def bounds_report(ds: DigitSet, k_max: int, gd_value: float | None = None,
                  max_bytes: int | None = None) -> BoundsReport:
    """Assemble the full bound chain for a digit set.

    Reduces to full affine rank internally (dimension values and the index
    are invariant under the reduction) and runs a single level scan shared by
    the verdict and the upper bound.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    red = reduce_full_rank(ds)
    dim_h = hausdorff_dimension(ds)
    parts = (ds.count, ds.base)

    if red.collapsed_to_point:
        # One-point attractor: the point is trivial, nothing to bound below 0.
        return BoundsReport(
            dim_h=dim_h, dim_h_parts=parts,
            ic_upper=dim_h, ic_witness=None,
            ic_exact=_checked_exact(gd_value, dim_h),
            th_upper=dim_h,
            verdict=TrivialPointVerdict.singleton(),
            strict_drop=False,
            reduced_dim=red.reduced.dim,
            reduction_steps=red.step_count,
        )

    scans = _scan_levels(red.reduced, k_max, max_bytes)
    first_hit = next((s for s in scans if s.island_cells > 0), None)
    if first_hit is not None:
        verdict = TrivialPointVerdict.trivial_point(first_hit.level, first_hit.first_island_id)
    elif ds.count >= 2 and hata_connected(red.reduced):
        verdict = TrivialPointVerdict.no_trivial_point()
    else:
        verdict = TrivialPointVerdict.unknown(k_max)

    best: float | None = None
    witness: IslandWitness | None = None
    for scan in scans:
        if scan.island_cells == 0:
            continue
        cand = _candidate(red.reduced, scan)
        if best is None or cand < best:
            best = cand
            witness = IslandWitness(scan.level, scan.island_cells)
    ic_upper = dim_h if best is None else best

    return BoundsReport(
        dim_h=dim_h, dim_h_parts=parts,
        ic_upper=ic_upper, ic_witness=witness,
        ic_exact=_checked_exact(gd_value, ic_upper),
        th_upper=min(ic_upper, dim_h),
        verdict=verdict,
        strict_drop=first_hit is not None,
        reduced_dim=red.reduced.dim,
        reduction_steps=red.step_count,
    )


def _checked_exact(gd_value: float | None, ic_upper: float) -> float | None:
    if gd_value is None:
        return None
    if gd_value > ic_upper + IC_EXACT_SLACK:
        raise ValueError(
            f"graph-directed value {gd_value} exceeds the connectedness-index "
            f"upper bound {ic_upper}; the supplied decomposition is inconsistent")
    return float(gd_value)
