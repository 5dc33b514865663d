"""Union-find kernels for component labeling, compiled with numba.

Plain sequential union-find with path compression and union by size; the
edge loop is the hot path on multi-million-cell grids, everything around it
is vectorized numpy in :mod:`fracube.topology`.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def union_edges(parent: np.ndarray, size: np.ndarray, u: np.ndarray, v: np.ndarray) -> None:
    for e in range(u.shape[0]):
        a = u[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = v[e]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] += size[b]


@njit(cache=True)
def resolve_roots(parent: np.ndarray) -> None:
    for i in range(parent.shape[0]):
        r = i
        while parent[r] != r:
            r = parent[r]
        j = i
        while parent[j] != r:
            nxt = parent[j]
            parent[j] = r
            j = nxt
