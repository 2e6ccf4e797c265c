"""Close-pair enumeration and difference-vector clustering.

Two interchangeable enumerators produce the same multiset of difference
vectors ``x_i - x_j`` (ordered pairs, self pairs included): a uniform spatial
hash and a naive double loop kept as an oracle.  Both compute the difference
and the distance test with identical floating point expressions, so their
outputs agree bit for bit.
"""

import itertools

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

_CHUNK = 4_000_000


def _within(d, cutoff):
    return np.einsum("ij,ij->i", d, d) <= cutoff * cutoff


def naive_differences(points, cutoff, chunk=_CHUNK):
    """Yield arrays of all ordered differences with norm <= cutoff (O(P^2))."""
    x = np.asarray(points, dtype=float)
    p, n = x.shape
    rows = max(1, chunk // max(p, 1))
    for start in range(0, p, rows):
        block = x[start:start + rows]
        d = (block[:, None, :] - x[None, :, :]).reshape(-1, n)
        yield d[_within(d, cutoff)]


def hashed_differences(points, cutoff, chunk=_CHUNK):
    """Yield arrays of all ordered differences with norm <= cutoff.

    Points are bucketed in cubic cells of side ``cutoff``; each cell is paired
    with at most 3^N neighbouring cells.
    """
    x = np.asarray(points, dtype=float)
    p, n = x.shape
    if p == 0:
        return
    keys = np.floor(x / cutoff).astype(np.int64)
    keys -= keys.min(axis=0) - 1
    extent = keys.max(axis=0) + 2
    strides = np.ones(n, dtype=np.int64)
    for j in range(n - 2, -1, -1):
        strides[j] = strides[j + 1] * extent[j + 1]
    lin = keys @ strides
    order = np.argsort(lin, kind="stable")
    xs = x[order]
    cells, starts, counts = np.unique(lin[order], return_index=True, return_counts=True)

    for offset in itertools.product((-1, 0, 1), repeat=n):
        target = cells + np.asarray(offset, dtype=np.int64) @ strides
        pos = np.searchsorted(cells, target)
        pos_ok = np.minimum(pos, len(cells) - 1)
        hit = (pos < len(cells)) & (cells[pos_ok] == target)
        a_start, a_cnt = starts[hit], counts[hit]
        b_start, b_cnt = starts[pos_ok[hit]], counts[pos_ok[hit]]
        sizes = a_cnt * b_cnt
        # Split the cell pairs so each batch materialises at most `chunk` pairs.
        cum = np.cumsum(sizes)
        lo = 0
        while lo < len(sizes):
            base = cum[lo - 1] if lo else 0
            hi = int(np.searchsorted(cum, base + chunk, side="right"))
            hi = max(hi, lo + 1)
            sz = sizes[lo:hi]
            total = int(sz.sum())
            pid = np.repeat(np.arange(hi - lo), sz)
            r = np.arange(total) - np.repeat(np.cumsum(sz) - sz, sz)
            bc = b_cnt[lo:hi][pid]
            i = a_start[lo:hi][pid] + r // bc
            j = b_start[lo:hi][pid] + r % bc
            d = xs[i] - xs[j]
            yield d[_within(d, cutoff)]
            lo = hi


def _reduce_cells(keys, counts, mins, maxs):
    order = np.lexsort(keys.T[::-1])
    keys, counts, mins, maxs = keys[order], counts[order], mins[order], maxs[order]
    change = np.any(keys[1:] != keys[:-1], axis=1)
    idx = np.concatenate(([0], np.flatnonzero(change) + 1))
    return (
        keys[idx],
        np.add.reduceat(counts, idx),
        np.minimum.reduceat(mins, idx, axis=0),
        np.maximum.reduceat(maxs, idx, axis=0),
    )


def cluster_differences(chunks, dim, tol):
    """Cluster difference vectors at scale ``tol``.

    Returns ``(positions, counts)`` sorted lexicographically.  A cluster's
    position is the per-coordinate midrange of its members, which does not
    depend on enumeration order and is exactly odd under negation.
    """
    parts = []
    for d in chunks:
        if len(d) == 0:
            continue
        q = np.floor(d / tol).astype(np.int64)
        parts.append(_reduce_cells(q, np.ones(len(d), dtype=np.int64), d, d))
    if not parts:
        return np.zeros((0, dim)), np.zeros(0, dtype=np.int64)
    keys, counts, mins, maxs = (np.concatenate(z) for z in zip(*parts))
    keys, counts, mins, maxs = _reduce_cells(keys, counts, mins, maxs)

    # Merge occupied cells that touch (Chebyshev distance 1 in key space).
    m = len(keys)
    edges = cKDTree(keys.astype(float)).query_pairs(1.0, p=np.inf, output_type="ndarray")
    graph = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(m, m))
    ncomp, label = connected_components(graph, directed=False)
    c_counts = np.bincount(label, weights=counts, minlength=ncomp).astype(np.int64)
    c_min = np.full((ncomp, dim), np.inf)
    c_max = np.full((ncomp, dim), -np.inf)
    np.minimum.at(c_min, label, mins)
    np.maximum.at(c_max, label, maxs)
    pos = (c_min + c_max) / 2.0
    order = np.lexsort(pos.T[::-1])
    return pos[order], c_counts[order]
