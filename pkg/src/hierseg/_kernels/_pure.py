"""Pure-Python (numpy/scipy) implementations of the hot kernels.

These are the reference semantics; the compiled backend in ``_core.pyx``
must produce bit-identical results. Keep the two in lockstep.
"""

from __future__ import annotations

import heapq

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


def _renumber_first_occurrence(flat: np.ndarray) -> np.ndarray:
    """Renumber labels so ids follow row-major first occurrence."""
    _, first_idx, inverse = np.unique(flat, return_index=True, return_inverse=True)
    rank = np.empty(first_idx.size, dtype=np.int32)
    rank[np.argsort(first_idx, kind="stable")] = np.arange(first_idx.size, dtype=np.int32)
    return rank[inverse]


def barrier_labels(block_h: np.ndarray, block_v: np.ndarray) -> np.ndarray:
    """4-connected components of the pixel grid under edgel barriers.

    block_h[r, c] blocks the edge (r, c)-(r, c+1); block_v[r, c] blocks
    (r, c)-(r+1, c). Labels are compact, in row-major first-occurrence order.
    """
    block_h = np.asarray(block_h, dtype=bool)
    block_v = np.asarray(block_v, dtype=bool)
    H = block_h.shape[0] if block_h.ndim == 2 else block_v.shape[0] + 1
    W = block_v.shape[1] if block_v.ndim == 2 else block_h.shape[1] + 1
    idx = np.arange(H * W, dtype=np.int64).reshape(H, W)
    src = np.concatenate([idx[:, :-1][~block_h].ravel(), idx[:-1, :][~block_v].ravel()])
    dst = np.concatenate([idx[:, 1:][~block_h].ravel(), idx[1:, :][~block_v].ravel()])
    graph = coo_matrix(
        (np.ones(src.size, dtype=np.uint8), (src, dst)), shape=(H * W, H * W)
    )
    _, flat = connected_components(graph, directed=False)
    return _renumber_first_occurrence(flat).reshape(H, W)


def watershed_labels(values: np.ndarray) -> np.ndarray:
    """Catchment basins grown from regional minima by ascending strength.

    Plateaus flood FIFO: the queue is seeded with all regional-minimum pixels
    in row-major order and ordered by (pixel value, insertion counter).
    Neighbors are visited up, left, right, down.
    """
    v = np.asarray(values, dtype=np.float64)
    H, W = v.shape
    plat = barrier_labels(v[:, :-1] != v[:, 1:], v[:-1, :] != v[1:, :])
    n_plat = int(plat.max()) + 1

    not_min = np.zeros(n_plat, dtype=bool)
    m = v[:, :-1] > v[:, 1:]
    not_min[plat[:, :-1][m]] = True
    m = v[:, 1:] > v[:, :-1]
    not_min[plat[:, 1:][m]] = True
    m = v[:-1, :] > v[1:, :]
    not_min[plat[:-1, :][m]] = True
    m = v[1:, :] > v[:-1, :]
    not_min[plat[1:, :][m]] = True

    is_min = ~not_min
    seed_id = np.cumsum(is_min) - 1  # minima numbered in plateau (row-major) order

    labels = np.full((H, W), -1, dtype=np.int32)
    seed_rows, seed_cols = np.nonzero(is_min[plat])
    labels[seed_rows, seed_cols] = seed_id[plat[seed_rows, seed_cols]]
    heap = [
        (v[r, c], i, int(r), int(c))
        for i, (r, c) in enumerate(zip(seed_rows.tolist(), seed_cols.tolist()))
    ]
    heapq.heapify(heap)
    counter = len(heap)
    while heap:
        _, _, r, c = heapq.heappop(heap)
        lab = labels[r, c]
        for r2, c2 in ((r - 1, c), (r, c - 1), (r, c + 1), (r + 1, c)):
            if 0 <= r2 < H and 0 <= c2 < W and labels[r2, c2] < 0:
                labels[r2, c2] = lab
                heapq.heappush(heap, (v[r2, c2], counter, r2, c2))
                counter += 1
    return labels


def dense_merge_loop(labels: np.ndarray, eh: np.ndarray, ev: np.ndarray):
    """Merge-to-one-region on the dense boundary-grid representation.

    Every erase performs one full find-min sweep over all edgel cells and one
    full edit sweep over edgel plus pixel cells; `touched` counts exactly
    those cell visits. All edgels of a region pair carry the pair's strength;
    combined strengths use the same length-weighted mean as the sparse
    representation, so merge sequences are bit-identical across the two.

    Returns (thresholds, region_a, region_b, touched) with regions reported
    as their current (minimum surviving) labels.
    """
    L = np.asarray(labels, dtype=np.int64).copy()
    eh = np.asarray(eh, dtype=np.float64).copy()
    ev = np.asarray(ev, dtype=np.float64).copy()
    H, W = L.shape
    R0 = int(L.max()) + 1
    sweep_find = H * (W - 1) + (H - 1) * W
    sweep_edit = sweep_find + H * W

    ts: list[float] = []
    aa: list[int] = []
    bb: list[int] = []
    touched = 0
    prev_t = 0.0
    regions = R0
    while regions > 1:
        touched += sweep_find
        act_h = eh > 0
        act_v = ev > 0
        keys = np.concatenate(
            [
                (
                    np.minimum(L[:, :-1], L[:, 1:]) * R0
                    + np.maximum(L[:, :-1], L[:, 1:])
                )[act_h],
                (
                    np.minimum(L[:-1, :], L[1:, :]) * R0
                    + np.maximum(L[:-1, :], L[1:, :])
                )[act_v],
            ]
        )
        vals = np.concatenate([eh[act_h], ev[act_v]])
        uniq, first, counts = np.unique(keys, return_index=True, return_counts=True)
        strengths = vals[first]
        best = np.lexsort((uniq, strengths))[0]
        key = int(uniq[best])
        s_min = float(strengths[best])
        A, B = key // R0, key % R0
        t = s_min if s_min > prev_t else prev_t

        pa = uniq // R0
        pb = uniq % R0
        a_side: dict[int, tuple[float, int]] = {}
        b_side: dict[int, tuple[float, int]] = {}
        sel = ((pa == A) | (pb == A)) & (uniq != key)
        for k2, s2, n2 in zip(uniq[sel], strengths[sel], counts[sel]):
            c_reg = int(k2 % R0 if k2 // R0 == A else k2 // R0)
            a_side[c_reg] = (float(s2), int(n2))
        sel = ((pa == B) | (pb == B)) & (uniq != key)
        for k2, s2, n2 in zip(uniq[sel], strengths[sel], counts[sel]):
            c_reg = int(k2 % R0 if k2 // R0 == B else k2 // R0)
            b_side[c_reg] = (float(s2), int(n2))
        combined: dict[int, float] = {}
        for c_reg, (s_b, n_b) in b_side.items():
            if c_reg in a_side:
                s_a, n_a = a_side[c_reg]
                combined[c_reg] = (n_a * s_a + n_b * s_b) / (n_a + n_b)

        touched += sweep_edit
        L[L == B] = A
        for arr, la, lb in ((eh, L[:, :-1], L[:, 1:]), (ev, L[:-1, :], L[1:, :])):
            arr[(arr > 0) & (la == lb)] = 0.0
            for c_reg, v_new in combined.items():
                lo, hi = (A, c_reg) if A < c_reg else (c_reg, A)
                arr[(arr > 0) & (np.minimum(la, lb) == lo) & (np.maximum(la, lb) == hi)] = v_new

        ts.append(t)
        aa.append(int(A))
        bb.append(int(B))
        prev_t = t
        regions -= 1
    return (
        np.asarray(ts, dtype=np.float64),
        np.asarray(aa, dtype=np.int32),
        np.asarray(bb, dtype=np.int32),
        touched,
    )
