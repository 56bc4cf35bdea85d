"""Region hierarchies: watershed, oriented reweighting, UCM merging.

A hierarchy is an ordered list of region merges with non-decreasing
thresholds over a finest base partition. Thresholding at t applies every
merge with threshold <= t; the equivalent boundary-grid view stamps each
base edgel with the threshold at which its segment disappeared.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from . import sparse_boundaries as sbm
from .errors import ContractError, FormatError
from .raster import BinStack, BoundaryGrid, ContourMap, LabelMap, read_pgm, write_pgm
from .raster import resample_grid_nearest
from .sparse_boundaries import SparseBoundaries, from_label_map

__all__ = [
    "Merge",
    "RegionHierarchy",
    "watershed",
    "owt_reweight",
    "build_ucm",
    "threshold",
    "to_ucm_grid",
    "combine_multiscale",
    "save_hierarchy",
    "load_hierarchy",
]


@dataclass(frozen=True)
class Merge:
    """One region merge: children disappear into parent at `threshold`."""

    threshold: float
    child_a: int
    child_b: int
    parent: int


class RegionHierarchy:
    """Base partition plus an ordered merge list with ultrametric thresholds."""

    def __init__(self, base: LabelMap, merges: list[Merge], base_boundaries: SparseBoundaries):
        if len(merges) != base.num_regions - 1:
            raise ContractError(
                f"{base.num_regions} base regions need {base.num_regions - 1} merges, "
                f"got {len(merges)}"
            )
        for prev, cur in zip(merges, merges[1:]):
            if cur.threshold < prev.threshold:
                raise ContractError("merge thresholds must be non-decreasing")
        if base_boundaries.width != base.width or base_boundaries.height != base.height:
            raise ContractError("base boundaries dimensions disagree with base partition")
        self.base = base
        self.merges = list(merges)
        self.base_boundaries = base_boundaries

    @property
    def width(self) -> int:
        return self.base.width

    @property
    def height(self) -> int:
        return self.base.height


def watershed(contours: ContourMap) -> SparseBoundaries:
    """Finest partition of a contour map: catchment basins grown from the
    regional minima by ascending strength (FIFO within plateaus).

    Each segment's strength is the mean contour value over its edgels, an
    edgel's contour value being the mean of its two adjacent pixels.
    """
    labels = _kernels.watershed_labels(contours.values)
    sb = from_label_map(LabelMap(labels))
    v = contours.values
    for key in sorted(sb.segments):
        seg = sb.segments[key]
        e = np.asarray(seg.edgels, dtype=np.int64)
        r1, c1, r2, c2 = sbm._edgel_pixels(e[:, 0], e[:, 1])
        seg.strength = float(np.mean((v[r1, c1] + v[r2, c2]) / 2.0))
    return sb


def _bracket_bins(theta: float, K: int):
    """Bins whose central angles bracket `theta`, plus the interpolation
    weight toward the higher bin. Angles wrap at pi (bin K-1 <-> bin 0)."""
    step = np.pi / K
    pos = theta / step - 0.5  # in units of bins from T(1)
    lo = int(np.floor(pos))
    w = pos - lo
    return lo % K, (lo + 1) % K, w


def owt_reweight(sb: SparseBoundaries, bins: BinStack, poly_tol: float) -> SparseBoundaries:
    """Reweight each segment by the oriented responses along its boundary.

    Each segment's edgel trace is approximated by polygonal line segments
    (tolerance `poly_tol` pixels); an edgel's value is the bin response at
    its location (mean of the two adjacent pixels), linearly interpolated
    between the two bins whose central angles bracket its polygon segment's
    orientation. The new segment strength is the mean over its edgels.
    """
    from .orientation import simplify_to_polygons

    if bins.width != sb.width or bins.height != sb.height:
        raise ContractError("bin stack dimensions disagree with the partition")
    out = sb.copy()
    chains_by_pair = simplify_to_polygons(sb, poly_tol)
    B = bins.responses
    K = bins.K
    for key in sorted(out.segments):
        seg = out.segments[key]
        values = []
        for chain in chains_by_pair[key]:
            bounds = chain.vertex_indices
            for si, (i0, i1) in enumerate(zip(bounds[:-1], bounds[1:])):
                theta = chain.segment_angles[si]
                k1, k2, w = _bracket_bins(theta, K)
                hi = i1 if si == len(bounds) - 2 else i1 - 1
                pts = np.asarray(chain.trace[i0 : hi + 1], dtype=np.int64)
                r1, c1, r2, c2 = sbm._edgel_pixels(pts[:, 0], pts[:, 1])
                resp1 = (B[k1, r1, c1] + B[k1, r2, c2]) / 2.0
                resp2 = (B[k2, r1, c1] + B[k2, r2, c2]) / 2.0
                values.append((1.0 - w) * resp1 + w * resp2)
        seg.strength = float(np.mean(np.concatenate(values)))
    return out


def build_ucm(sb: SparseBoundaries) -> RegionHierarchy:
    """Merge regions by ascending boundary strength into a full hierarchy.

    The minimum-strength segment is erased repeatedly; each merge records a
    threshold clamped to the running maximum so the result is ultrametric.
    The input is not modified.
    """
    work = sb.compact_copy()
    base = LabelMap(work._base)
    snapshot = work.copy()
    n = work.num_regions
    node_of = list(range(n))
    heap = [(seg.strength, a, b) for (a, b), seg in work.segments.items()]
    heapq.heapify(heap)
    merges: list[Merge] = []
    prev_t = 0.0
    next_node = n
    while work.num_regions > 1:
        s, a, b = heapq.heappop(heap)
        seg = work.segments.get((a, b))
        if seg is None or seg.strength != s:
            continue  # stale heap entry
        t = s if s > prev_t else prev_t
        affected = sorted((work.neighbors(a) | work.neighbors(b)) - {a, b})
        work.erase_segment((a, b))
        merges.append(Merge(t, node_of[a], node_of[b], next_node))
        node_of[a] = next_node
        next_node += 1
        prev_t = t
        for c in affected:
            key = (a, c) if a < c else (c, a)
            nxt = work.segments.get(key)
            if nxt is not None:
                heapq.heappush(heap, (nxt.strength, key[0], key[1]))
    return RegionHierarchy(base, merges, snapshot)


def threshold(h: RegionHierarchy, t: float) -> LabelMap:
    """Partition at level t: all merges with threshold <= t applied."""
    if t < 0:
        raise ContractError("threshold must be >= 0")
    n_nodes = h.base.num_regions + len(h.merges)
    parent = np.full(n_nodes, -1, dtype=np.int64)
    for m in h.merges:
        if m.threshold <= t:
            parent[m.child_a] = m.parent
            parent[m.child_b] = m.parent
    root = np.arange(n_nodes, dtype=np.int64)
    for node in range(n_nodes - 1, -1, -1):
        if parent[node] >= 0:
            root[node] = root[parent[node]]
    return LabelMap.from_raw(root[: h.base.num_regions][h.base.labels])


def to_ucm_grid(h: RegionHierarchy) -> BoundaryGrid:
    """Boundary grid whose edgels carry the threshold of the merge that
    erased them (the ultrametric contour map)."""
    work = h.base_boundaries.copy()
    cells = np.zeros((2 * h.height - 1, 2 * h.width - 1), dtype=np.float64)
    rep_of: dict[int, int] = {i: i for i in range(h.base.num_regions)}
    for m in h.merges:
        a = work.find(rep_of[m.child_a])
        b = work.find(rep_of[m.child_b])
        seg = work.segment((a, b))
        e = np.asarray(seg.edgels, dtype=np.int64)
        cells[e[:, 0], e[:, 1]] = m.threshold
        work.erase_segment((a, b))
        rep_of[m.parent] = a if a < b else b
    sbm.render_junctions(cells)
    return BoundaryGrid(cells)


def combine_multiscale(hierarchies: list[RegionHierarchy], weights: list[float]) -> RegionHierarchy:
    """Combine hierarchies from several scales into one.

    Every hierarchy's UCM grid is nearest-resampled to the finest grid
    dimensions, edgel strengths are averaged with the given weights, and a
    hierarchy is rebuilt from the combined grid.
    """
    if not hierarchies:
        raise ContractError("need at least one hierarchy")
    if len(weights) != len(hierarchies):
        raise ContractError("weights length must match the number of hierarchies")
    w = np.asarray(weights, dtype=np.float64)
    if (w < 0).any():
        raise ContractError("weights must be non-negative")
    if w.sum() == 0:
        raise ContractError("weights must not all be zero")
    gh = max(2 * h.height - 1 for h in hierarchies)
    gw = max(2 * h.width - 1 for h in hierarchies)
    stack = np.stack(
        [resample_grid_nearest(to_ucm_grid(h).cells, gh, gw) for h in hierarchies]
    )
    combined = np.average(stack, axis=0, weights=w)
    combined[0::2, 0::2] = 0.0  # resampling may smear values onto pixel cells
    combined[1::2, 1::2] = 0.0  # junctions are re-rendered, not combined
    return build_ucm(sbm.from_boundary_grid(BoundaryGrid(combined)))


# ---------------------------------------------------------------------------
# Hierarchy JSON


def save_hierarchy(h: RegionHierarchy, path) -> None:
    """Write `{base: <pgm>, merges: [{t, a, b, parent}], base_boundaries:
    <json>}` with sidecar files stored next to the JSON."""
    path = Path(path)
    stem = path.stem if path.suffix == ".json" else path.name
    base_name = stem + ".base.pgm"
    sparse_name = stem + ".boundaries.json"
    write_pgm(h.base, path.parent / base_name)
    sbm.save_json(h.base_boundaries, path.parent / sparse_name)
    doc = {
        "base": base_name,
        "merges": [
            {"t": m.threshold, "a": m.child_a, "b": m.child_b, "parent": m.parent}
            for m in h.merges
        ],
        "base_boundaries": sparse_name,
    }
    path.write_text(json.dumps(doc) + "\n")


def load_hierarchy(path) -> RegionHierarchy:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed hierarchy JSON: {exc}") from None
    base = read_pgm(path.parent / doc["base"], kind="labels")
    boundaries = sbm.load_json(path.parent / doc["base_boundaries"])
    merges = [
        Merge(float(m["t"]), int(m["a"]), int(m["b"]), int(m["parent"]))
        for m in doc["merges"]
    ]
    return RegionHierarchy(base, merges, boundaries)
