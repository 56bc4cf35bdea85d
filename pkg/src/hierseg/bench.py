"""Sparse-vs-dense representation benchmark.

Generates a seeded Voronoi-like partition with random segment strengths and
runs the full merge-to-one-region sequence under either representation. The
dense arm re-renders and sweeps the full boundary grid on every erase; the
sparse arm edits only the segments incident to the merged regions. Both
produce bit-identical merge sequences (thresholds and canonical region
pairs); only the cost differs.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ContractError
from .raster import LabelMap
from .sparse_boundaries import from_label_map

__all__ = ["BenchReport", "generate_partition", "run_sparse", "run_dense", "run_bench"]

STRENGTH_QUANTUM = 2**20  # strengths are multiples of 2^-20 so sums stay exact


@dataclass
class BenchReport:
    repr: str
    width: int
    height: int
    regions: int
    merge_seconds: float
    touched_cells: int
    merges: list  # [(threshold, region_a, region_b), ...]

    def to_dict(self) -> dict:
        return {
            "repr": self.repr,
            "width": self.width,
            "height": self.height,
            "regions": self.regions,
            "merge_seconds": self.merge_seconds,
            "touched_cells": self.touched_cells,
            "merges": [[t, a, b] for t, a, b in self.merges],
        }


def generate_partition(width: int, height: int, regions: int, seed: int):
    """Seeded Voronoi-like partition plus per-segment strengths.

    Nearest centers use exact integer squared distances with lowest-index
    tie-breaks, so the partition is deterministic across library versions.
    Cells are split into 4-connected components afterwards (the actual region
    count can slightly exceed `regions`). Strengths are uniform multiples of
    2^-20 assigned in sorted region-pair order.
    """
    if width < 1 or height < 1:
        raise ContractError("benchmark dimensions must be positive")
    if regions < 2:
        raise ContractError("benchmark needs at least 2 regions")
    if regions > width * height:
        raise ContractError("more regions than pixels")
    rng = np.random.default_rng(seed)
    centers = rng.choice(width * height, size=regions, replace=False)
    crow = (centers // width).astype(np.int64)
    ccol = (centers % width).astype(np.int64)

    nearest = np.empty((height, width), dtype=np.int64)
    cols = np.arange(width, dtype=np.int64)
    dcol2 = (cols[:, None] - ccol[None, :]) ** 2  # (W, R)
    for r in range(height):
        d2 = (r - crow) ** 2 + dcol2
        nearest[r] = np.argmin(d2, axis=1)

    same_h = nearest[:, :-1] == nearest[:, 1:]
    same_v = nearest[:-1, :] == nearest[1:, :]
    labels = _kernels.barrier_labels(~same_h, ~same_v)
    lm = LabelMap(labels)

    lab = labels.astype(np.int64)
    pairs = set()
    a = lab[:, :-1][~same_h]
    b = lab[:, 1:][~same_h]
    pairs.update(zip(np.minimum(a, b).tolist(), np.maximum(a, b).tolist()))
    a = lab[:-1, :][~same_v]
    b = lab[1:, :][~same_v]
    pairs.update(zip(np.minimum(a, b).tolist(), np.maximum(a, b).tolist()))
    draws = rng.integers(1, STRENGTH_QUANTUM + 1, size=len(pairs))  # > 0: the dense
    # grid cannot represent a 0-strength (inactive) segment
    strengths = {
        pair: float(d) / STRENGTH_QUANTUM for pair, d in zip(sorted(pairs), draws.tolist())
    }
    return lm, strengths


def run_sparse(labels: LabelMap, strengths: dict):
    """Merge to one region using the sparse representation.

    Touch accounting: edgel-level work inside erase_segment plus one touch
    per heap push/pop. Returns (merges, touched, seconds).
    """
    sb = from_label_map(labels)
    for pair, s in strengths.items():
        sb.set_strength(pair, s)
    t0 = time.perf_counter()
    sb.touches = 0
    heap = [(seg.strength, a, b) for (a, b), seg in sb.segments.items()]
    heapq.heapify(heap)
    touched = len(heap)
    merges = []
    prev_t = 0.0
    while sb.num_regions > 1:
        s, a, b = heapq.heappop(heap)
        touched += 1
        seg = sb.segments.get((a, b))
        if seg is None or seg.strength != s:
            continue
        t = s if s > prev_t else prev_t
        affected = sorted((sb.neighbors(a) | sb.neighbors(b)) - {a, b})
        sb.erase_segment((a, b))
        merges.append((t, a, b))
        prev_t = t
        for c in affected:
            key = (a, c) if a < c else (c, a)
            nxt = sb.segments.get(key)
            if nxt is not None:
                heapq.heappush(heap, (nxt.strength, key[0], key[1]))
                touched += 1
    seconds = time.perf_counter() - t0
    return merges, touched + sb.touches, seconds


def run_dense(labels: LabelMap, strengths: dict):
    """Merge to one region by sweeping the dense boundary grid every erase."""
    lab = labels.labels.astype(np.int64)
    H, W = lab.shape
    if labels.num_regions > 4096:
        raise ContractError("dense benchmark arm supports at most 4096 regions")
    eh = np.zeros((H, W - 1), dtype=np.float64)
    ev = np.zeros((H - 1, W), dtype=np.float64)
    diff_h = lab[:, :-1] != lab[:, 1:]
    diff_v = lab[:-1, :] != lab[1:, :]
    key_h = np.minimum(lab[:, :-1], lab[:, 1:]) * labels.num_regions + np.maximum(
        lab[:, :-1], lab[:, 1:]
    )
    key_v = np.minimum(lab[:-1, :], lab[1:, :]) * labels.num_regions + np.maximum(
        lab[:-1, :], lab[1:, :]
    )
    lookup = np.zeros((labels.num_regions * labels.num_regions,), dtype=np.float64)
    for (a, b), s in strengths.items():
        lookup[a * labels.num_regions + b] = s
    eh[diff_h] = lookup[key_h[diff_h]]
    ev[diff_v] = lookup[key_v[diff_v]]

    t0 = time.perf_counter()
    ts, aa, bb, touched = _kernels.dense_merge_loop(lab, eh, ev)
    seconds = time.perf_counter() - t0
    merges = [(float(t), int(a), int(b)) for t, a, b in zip(ts, aa, bb)]
    return merges, int(touched), seconds


def run_bench(width: int, height: int, regions: int, repr: str, seed: int = 0) -> BenchReport:
    """Generate the seeded partition and run one representation's merge loop."""
    if repr not in ("sparse", "dense"):
        raise ContractError(f"repr must be sparse or dense, not {repr!r}")
    labels, strengths = generate_partition(width, height, regions, seed)
    runner = run_sparse if repr == "sparse" else run_dense
    merges, touched, seconds = runner(labels, strengths)
    return BenchReport(
        repr=repr,
        width=width,
        height=height,
        regions=labels.num_regions,
        merge_seconds=seconds,
        touched_cells=touched,
        merges=merges,
    )
