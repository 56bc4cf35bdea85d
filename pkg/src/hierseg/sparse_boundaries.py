"""Sparse boundary representation of an image partition.

Instead of a dense boundary grid, a partition's boundaries are kept as a
look-up table keyed by unordered region pairs: each entry holds the pair's
strength and the list of boundary-grid coordinates (edgels) it occupies.
Merging two regions touches only the segments incident to them, never the
full grid; region identity is tracked through a union-find so the pixel
labels are never rewritten during edits.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import ContractError, FormatError
from .raster import BoundaryGrid, LabelMap, read_pgm, write_pgm

__all__ = [
    "BoundarySegment",
    "SparseBoundaries",
    "from_label_map",
    "to_boundary_grid",
    "from_boundary_grid",
    "erase_segment",
    "set_strength",
    "save_json",
    "load_json",
]


class BoundarySegment:
    """Boundary between one pair of regions: strength plus its edgels.

    Edgel coordinates live on the boundary grid; exactly one of (grid_row,
    grid_col) is odd. region_a < region_b always.
    """

    __slots__ = ("region_a", "region_b", "strength", "edgels")

    def __init__(self, region_a: int, region_b: int, strength: float, edgels: list):
        if region_a >= region_b:
            raise ContractError("segment regions must satisfy region_a < region_b")
        if strength < 0:
            raise ContractError("segment strength must be >= 0")
        if not edgels:
            raise ContractError("segment edgel list must be non-empty")
        self.region_a = region_a
        self.region_b = region_b
        self.strength = strength
        self.edgels = edgels

    def __repr__(self):
        return (
            f"BoundarySegment({self.region_a}, {self.region_b}, "
            f"strength={self.strength!r}, edgels={len(self.edgels)})"
        )


class SparseBoundaries:
    """Partition + look-up table of boundary segments keyed by region pair.

    Single-writer: edit operations mutate in place. The pixel labels captured
    at construction are never rewritten; merged region identities resolve
    through a union-find whose representative is always the smallest label of
    the merged group. ``touches`` counts edgel-level work done by edits (the
    cost instrumentation for the sparse-vs-dense benchmark).
    """

    def __init__(self, base_labels: np.ndarray):
        base_labels = np.ascontiguousarray(base_labels, dtype=np.int32)
        self._base = base_labels
        self._n_base = int(base_labels.max()) + 1
        self._parent = np.arange(self._n_base, dtype=np.int64)
        self.num_regions = self._n_base
        self.segments: dict[tuple[int, int], BoundarySegment] = {}
        self._adj: dict[int, set[int]] = {r: set() for r in range(self._n_base)}
        self.touches = 0

    @property
    def height(self) -> int:
        return self._base.shape[0]

    @property
    def width(self) -> int:
        return self._base.shape[1]

    # -- region identity ----------------------------------------------------

    def find(self, region: int) -> int:
        """Current representative (smallest merged-in label) of a region id."""
        p = self._parent
        r = region
        while p[r] != r:
            r = p[r]
        while p[region] != region:  # path compression
            p[region], region = r, p[region]
        return int(r)

    def canonical_pair(self, pair) -> tuple[int, int]:
        a, b = (self.find(int(x)) for x in pair)
        if a == b:
            raise ContractError(f"regions {pair} are (now) the same region")
        return (a, b) if a < b else (b, a)

    def neighbors(self, region: int) -> frozenset:
        return frozenset(self._adj[self.find(region)])

    def current_labels(self) -> LabelMap:
        """Current partition as a compact LabelMap (fresh copy)."""
        roots = np.empty(self._n_base, dtype=np.int64)
        for r in range(self._n_base):
            roots[r] = self.find(r)
        return LabelMap.from_raw(roots[self._base])

    # -- segment access -----------------------------------------------------

    def segment(self, pair) -> BoundarySegment:
        key = self.canonical_pair(pair)
        seg = self.segments.get(key)
        if seg is None:
            raise ContractError(f"no boundary segment between regions {pair}")
        return seg

    def has_segment(self, pair) -> bool:
        try:
            key = self.canonical_pair(pair)
        except ContractError:
            return False
        return key in self.segments

    def set_strength(self, pair, value: float) -> None:
        if value < 0:
            raise ContractError("strength must be >= 0")
        self.segment(pair).strength = float(value)

    # -- editing ------------------------------------------------------------

    def erase_segment(self, pair) -> "SparseBoundaries":
        """Merge the two regions of `pair`, removing their shared boundary.

        Segments from both regions to a common third region are concatenated
        (survivor side first) with a length-weighted mean strength. Work is
        proportional to the segments incident to the merged regions.
        """
        a, b = self.canonical_pair(pair)
        seg = self.segments.pop((a, b), None)
        if seg is None:
            raise ContractError(f"no boundary segment between regions {pair}")
        self.touches += len(seg.edgels)
        self._parent[b] = a
        self.num_regions -= 1
        self._adj[a].discard(b)
        self._adj[b].discard(a)
        for c in sorted(self._adj[b]):
            old_key = (b, c) if b < c else (c, b)
            moved = self.segments.pop(old_key)
            self.touches += len(moved.edgels)
            new_key = (a, c) if a < c else (c, a)
            kept = self.segments.get(new_key)
            if kept is None:
                moved.region_a, moved.region_b = new_key
                self.segments[new_key] = moved
                self._adj[a].add(c)
                self._adj[c].add(a)
            else:
                n_a, s_a = len(kept.edgels), kept.strength
                n_b, s_b = len(moved.edgels), moved.strength
                kept.strength = (n_a * s_a + n_b * s_b) / (n_a + n_b)
                kept.edgels.extend(moved.edgels)
                self.touches += n_a
            self._adj[c].discard(b)
        self._adj[b] = set()
        return self

    # -- copies ---------------------------------------------------------------

    def copy(self) -> "SparseBoundaries":
        out = SparseBoundaries(self._base)
        out._parent = self._parent.copy()
        out.num_regions = self.num_regions
        out.segments = {
            k: BoundarySegment(s.region_a, s.region_b, s.strength, list(s.edgels))
            for k, s in self.segments.items()
        }
        out._adj = {r: set(ns) for r, ns in self._adj.items()}
        return out

    def compact_copy(self) -> "SparseBoundaries":
        """Copy whose labels are the compacted current partition and whose
        segment keys use the compacted ids."""
        cur = self.current_labels()
        flat_reps = np.empty(self._n_base, dtype=np.int64)
        for r in range(self._n_base):
            flat_reps[r] = self.find(r)
        rep_pix = flat_reps[self._base].ravel()
        uniq, first = np.unique(rep_pix, return_index=True)
        remap = {int(rep): int(cur.labels.ravel()[i]) for rep, i in zip(uniq, first)}
        out = SparseBoundaries(cur.labels)
        for (a, b), seg in self.segments.items():
            na, nb = remap[a], remap[b]
            if na > nb:
                na, nb = nb, na
            out.segments[(na, nb)] = BoundarySegment(na, nb, seg.strength, list(seg.edgels))
            out._adj[na].add(nb)
            out._adj[nb].add(na)
        return out


# ---------------------------------------------------------------------------
# Construction and conversions


def _edgel_pixels(gr: np.ndarray, gc: np.ndarray):
    """The two pixels adjacent to each edgel (row1, col1, row2, col2)."""
    return gr // 2, gc // 2, (gr + 1) // 2, (gc + 1) // 2


def from_label_map(labels: LabelMap) -> SparseBoundaries:
    """Extract the sparse boundaries of a compact LabelMap.

    One segment per adjacent region pair; edgels are every 4-adjacent pixel
    pair with differing labels; strengths start at 0.
    """
    lab = labels.labels.astype(np.int64)
    sb = SparseBoundaries(labels.labels)

    rr, cc = np.nonzero(lab[:, :-1] != lab[:, 1:])
    a_h = np.minimum(lab[rr, cc], lab[rr, cc + 1])
    b_h = np.maximum(lab[rr, cc], lab[rr, cc + 1])
    gr_h, gc_h = 2 * rr, 2 * cc + 1

    rr, cc = np.nonzero(lab[:-1, :] != lab[1:, :])
    a_v = np.minimum(lab[rr, cc], lab[rr + 1, cc])
    b_v = np.maximum(lab[rr, cc], lab[rr + 1, cc])
    gr_v, gc_v = 2 * rr + 1, 2 * cc

    a = np.concatenate([a_h, a_v])
    b = np.concatenate([b_h, b_v])
    gr = np.concatenate([gr_h, gr_v])
    gc = np.concatenate([gc_h, gc_v])
    if a.size == 0:
        return sb

    keys = a * labels.num_regions + b
    order = np.lexsort((gc, gr, keys))
    keys = keys[order]
    a, b, gr, gc = a[order], b[order], gr[order], gc[order]
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    ends = np.r_[starts[1:], keys.size]
    for i0, i1 in zip(starts, ends):
        ra, rb = int(a[i0]), int(b[i0])
        edgels = list(zip(gr[i0:i1].tolist(), gc[i0:i1].tolist()))
        sb.segments[(ra, rb)] = BoundarySegment(ra, rb, 0.0, edgels)
        sb._adj[ra].add(rb)
        sb._adj[rb].add(ra)
    return sb


def render_junctions(cells: np.ndarray) -> None:
    """Fill junction cells in place: max of the active incident edgels where
    at least two are active, 0 otherwise."""
    up = cells[0:-2:2, 1::2]
    down = cells[2::2, 1::2]
    left = cells[1::2, 0:-2:2]
    right = cells[1::2, 2::2]
    active = (up > 0).astype(np.int32) + (down > 0) + (left > 0) + (right > 0)
    peak = np.maximum(np.maximum(up, down), np.maximum(left, right))
    cells[1::2, 1::2] = np.where(active >= 2, peak, 0.0)


def to_boundary_grid(sb: SparseBoundaries) -> BoundaryGrid:
    """Render the sparse boundaries onto a dense boundary grid."""
    cells = np.zeros((2 * sb.height - 1, 2 * sb.width - 1), dtype=np.float64)
    for key in sorted(sb.segments):
        seg = sb.segments[key]
        e = np.asarray(seg.edgels, dtype=np.int64)
        cells[e[:, 0], e[:, 1]] = seg.strength
    render_junctions(cells)
    return BoundaryGrid(cells)


def from_boundary_grid(grid: BoundaryGrid) -> SparseBoundaries:
    """Recover a partition and its segments from a dense boundary grid.

    Regions are the 4-connected pixel components not separated by an active
    (> 0) edgel; each reconstructed segment's strength is the max over its
    edgels. Edgels that do not separate two distinct regions are dropped.
    """
    cells = grid.cells
    block_h = cells[0::2, 1::2] > 0
    block_v = cells[1::2, 0::2] > 0
    labels = _kernels.barrier_labels(block_h, block_v)
    sb = from_label_map(LabelMap(labels))
    for seg in sb.segments.values():
        e = np.asarray(seg.edgels, dtype=np.int64)
        seg.strength = float(cells[e[:, 0], e[:, 1]].max())
    return sb


def erase_segment(sb: SparseBoundaries, pair) -> SparseBoundaries:
    """Merge the two regions of `pair` (in place); returns sb."""
    return sb.erase_segment(pair)


def set_strength(sb: SparseBoundaries, pair, value: float) -> None:
    sb.set_strength(pair, value)


# ---------------------------------------------------------------------------
# JSON serialization


def save_json(sb: SparseBoundaries, path) -> None:
    """Write `{width, height, labels: <pgm path>, segments: [...]}` with the
    label PGM stored next to the JSON; segments sorted by (a, b)."""
    path = Path(path)
    compact = sb.compact_copy()
    labels_name = path.name + ".labels.pgm" if path.suffix != ".json" else path.stem + ".labels.pgm"
    write_pgm(LabelMap(compact._base), path.parent / labels_name)
    doc = {
        "width": sb.width,
        "height": sb.height,
        "labels": labels_name,
        "segments": [
            {
                "a": a,
                "b": b,
                "strength": compact.segments[(a, b)].strength,
                "edgels": [[int(gr), int(gc)] for gr, gc in compact.segments[(a, b)].edgels],
            }
            for a, b in sorted(compact.segments)
        ],
    }
    path.write_text(json.dumps(doc) + "\n")


def load_json(path) -> SparseBoundaries:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed sparse-boundaries JSON: {exc}") from None
    labels = read_pgm(path.parent / doc["labels"], kind="labels")
    if (labels.width, labels.height) != (doc["width"], doc["height"]):
        raise FormatError("sparse-boundaries JSON dimensions disagree with label file")
    sb = from_label_map(labels)
    derived = {k: set(map(tuple, s.edgels)) for k, s in sb.segments.items()}
    listed = set()
    for item in doc["segments"]:
        key = (int(item["a"]), int(item["b"]))
        if key in listed:
            raise FormatError(f"duplicate segment for region pair {key}")
        listed.add(key)
        if key not in derived:
            raise FormatError(f"segment {key} does not separate adjacent regions")
        edgels = [(int(gr), int(gc)) for gr, gc in item["edgels"]]
        if set(edgels) != derived[key]:
            raise FormatError(f"segment {key} edgels do not match the label map")
        seg = sb.segments[key]
        seg.edgels = edgels
        seg.strength = float(item["strength"])
        if seg.strength < 0:
            raise FormatError(f"segment {key} has negative strength")
    if listed != set(derived):
        raise FormatError("segment list does not cover all region adjacencies")
    return sb
