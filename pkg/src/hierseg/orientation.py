"""Contour orientation: decoding, ground-truth labeling, evaluation.

Angles are undirected boundary directions in [0, pi), measured as
atan2(delta_row, delta_col) mod pi, so a vertical boundary is pi/2 and a
horizontal one is 0. Bin k (1-based) covers [(k-1)*pi/K, k*pi/K) and has
central angle (k-0.5)*pi/K; circular adjacency wraps bin K to bin 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ContractError, FormatError
from .raster import BinStack, ContourMap, LabelMap, OrientationMap
from .sparse_boundaries import SparseBoundaries, from_label_map

__all__ = [
    "BinSpec",
    "PolygonChain",
    "GtOrientationLabels",
    "decode_orientation",
    "bin_confidence",
    "simplify_to_polygons",
    "assign_gt_orientations",
    "local_gradient_orientation",
    "eval_orientation",
    "save_gt_csv",
    "load_gt_csv",
    "save_curve_csv",
]


@dataclass(frozen=True)
class BinSpec:
    """K bins partitioning the undirected angle range [0, pi)."""

    K: int = 8

    def __post_init__(self):
        if self.K < 2:
            raise ContractError("need at least 2 orientation bins")

    @property
    def bin_width(self) -> float:
        return np.pi / self.K

    @property
    def central_angles(self) -> np.ndarray:
        """Central angle of each bin, index k-1 for bin k."""
        return (np.arange(self.K) + 0.5) * (np.pi / self.K)

    def central_angle(self, k: int) -> float:
        if not 1 <= k <= self.K:
            raise ContractError(f"bin {k} outside 1..{self.K}")
        return (k - 0.5) * (np.pi / self.K)

    def bin_of(self, theta) -> np.ndarray:
        """1-based bin containing each angle in [0, pi)."""
        k = np.floor_divide(np.asarray(theta, dtype=np.float64), np.pi / self.K).astype(
            np.int64
        ) + 1
        return np.clip(k, 1, self.K)


@dataclass
class PolygonChain:
    """Polygonal approximation of one connected boundary run.

    `vertices` are boundary-grid coordinates; `segment_angles[i]` is the
    undirected angle of vertices[i] -> vertices[i+1]. `trace` keeps the full
    ordered run and `vertex_indices` the kept positions, so edgels can be
    attributed to their polygon segment (a single-edgel run is represented by
    its own unit extent and vertex_indices [0, 0]).
    """

    vertices: list
    segment_angles: list
    trace: list = field(default_factory=list)
    vertex_indices: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise ContractError("polygon chain needs at least 2 vertices")
        for p, q in zip(self.vertices, self.vertices[1:]):
            if p == q:
                raise ContractError("consecutive polygon vertices must be distinct")


class GtOrientationLabels:
    """Orientation bin per ground-truth boundary edgel."""

    def __init__(self, coords: np.ndarray, bins: np.ndarray):
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, 2)
        bins = np.asarray(bins, dtype=np.int64).reshape(-1)
        if coords.shape[0] != bins.shape[0]:
            raise ContractError("one bin per edgel required")
        if coords.shape[0] and (bins < 1).any():
            raise ContractError("bins are 1-based")
        odd = (coords % 2).sum(axis=1)
        if coords.shape[0] and (odd != 1).any():
            raise ContractError("edgel coordinates must have exactly one odd component")
        self.coords = coords
        self.bins = bins

    def __len__(self) -> int:
        return self.coords.shape[0]


# ---------------------------------------------------------------------------
# Eq.-style decoding


def decode_orientation(
    bins: BinStack,
    spec: BinSpec,
    strong_ratio: float = 0.5,
    eps: float = 0.01,
    seed: int = 0,
) -> OrientationMap:
    """Per-pixel orientation from K bin responses.

    The winning bin's central angle is used; when the runner-up bin is
    circularly adjacent and at least `strong_ratio` of the maximum, the angle
    is the response-weighted average of the two central angles (along the
    shorter circular arc). Pixels with no response (max < eps) get an angle
    drawn uniformly from [0, pi) using `seed`.
    """
    if bins.K != spec.K:
        raise ContractError(f"bin stack has K={bins.K}, spec has K={spec.K}")
    if not 0 < strong_ratio <= 1:
        raise ContractError("strong_ratio must be in (0, 1]")
    if eps < 0:
        raise ContractError("eps must be >= 0")
    K = spec.K
    flat = bins.responses.reshape(K, -1)
    n = flat.shape[1]
    idx = np.arange(n)
    k1 = flat.argmax(axis=0)  # ties -> smaller k
    m1 = flat[k1, idx]
    rest = flat.copy()
    rest[k1, idx] = -1.0
    k2 = rest.argmax(axis=0)
    m2 = rest[k2, idx]

    T = spec.central_angles
    angles = T[k1].copy()

    step_up = (k2 - k1) % K == 1
    adjacent = step_up | ((k1 - k2) % K == 1)
    averaged = adjacent & (m2 >= strong_ratio * m1) & (m1 >= eps)
    delta = np.where(step_up, np.pi / K, -np.pi / K)
    denom = m1 + m2
    w2 = np.divide(m2, denom, out=np.zeros_like(denom), where=denom > 0)
    angles[averaged] = np.mod(T[k1] + w2 * delta, np.pi)[averaged]

    no_response = m1 < eps
    if no_response.any():
        rng = np.random.default_rng(seed)
        angles[no_response] = rng.uniform(0.0, np.pi, int(no_response.sum()))
    return OrientationMap(angles.reshape(bins.height, bins.width))


def bin_confidence(bins: BinStack) -> ContourMap:
    """Decoder confidence: the maximum bin response per pixel."""
    return ContourMap(bins.responses.max(axis=0))


# ---------------------------------------------------------------------------
# Boundary traces and polygon simplification


def _edgel_endpoints(gr: int, gc: int):
    """The two junction coordinates bounding an edgel's unit extent."""
    if gr % 2 == 0:  # between horizontally adjacent pixels: vertical extent
        return (gr - 1, gc), (gr + 1, gc)
    return (gr, gc - 1), (gr, gc + 1)


def _trace_runs(edgels: list) -> list[list]:
    """Split a segment's edgels into maximal connected runs, each ordered by
    walking the shared-junction adjacency (deterministic: runs start at the
    smallest endpoint-degree coordinate, walks take the smallest neighbor)."""
    by_junction: dict[tuple, list] = {}
    for e in edgels:
        for j in _edgel_endpoints(*e):
            by_junction.setdefault(j, []).append(e)
    adj: dict[tuple, set] = {e: set() for e in edgels}
    for shared in by_junction.values():
        for i, e in enumerate(shared):
            for f in shared[i + 1 :]:
                adj[e].add(f)
                adj[f].add(e)
    unvisited = set(edgels)
    runs = []
    while unvisited:
        endpoints = sorted(e for e in unvisited if len(adj[e] & unvisited) <= 1)
        cur = endpoints[0] if endpoints else min(unvisited)
        run = [cur]
        unvisited.discard(cur)
        while True:
            nxt = sorted(adj[cur] & unvisited)
            if not nxt:
                break
            cur = nxt[0]
            run.append(cur)
            unvisited.discard(cur)
        runs.append(run)
    return runs


def _point_segment_dist(pts: np.ndarray, p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    d = p1 - p0
    len2 = float(d @ d)
    if len2 == 0.0:
        return np.hypot(*(pts - p0).T)
    t = np.clip((pts - p0) @ d / len2, 0.0, 1.0)
    proj = p0 + t[:, None] * d
    return np.hypot(*(pts - proj).T)


def _rdp_indices(pts: np.ndarray, eps: float) -> list[int]:
    """Recursive farthest-point (split) simplification; kept indices.
    Ties on the farthest point go to the earliest index."""
    keep = [0, len(pts) - 1]
    stack = [(0, len(pts) - 1)]
    while stack:
        i0, i1 = stack.pop()
        if i1 <= i0 + 1:
            continue
        dists = _point_segment_dist(
            pts[i0 + 1 : i1].astype(np.float64), pts[i0].astype(np.float64), pts[i1].astype(np.float64)
        )
        k = int(np.argmax(dists))
        if dists[k] > eps:
            split = i0 + 1 + k
            keep.append(split)
            stack.append((i0, split))
            stack.append((split, i1))
    return sorted(set(keep))


def _angle(p: tuple, q: tuple) -> float:
    return float(np.mod(np.arctan2(q[0] - p[0], q[1] - p[1]), np.pi))


def simplify_to_polygons(sb: SparseBoundaries, tol: float) -> dict:
    """Polygonal approximation of every segment's edgel trace.

    Returns {region pair: [PolygonChain, ...]}, one chain per maximal
    connected run. Every original edgel lies within `tol` pixels of its
    chain; tol = 0 keeps the full trace. A single-edgel run becomes a chain
    along the edgel's own unit extent.
    """
    if tol < 0:
        raise ContractError("tolerance must be >= 0")
    out = {}
    for key in sorted(sb.segments):
        chains = []
        for run in _trace_runs(sb.segments[key].edgels):
            if len(run) == 1:
                j0, j1 = _edgel_endpoints(*run[0])
                chains.append(
                    PolygonChain([j0, j1], [_angle(j0, j1)], trace=list(run), vertex_indices=[0, 0])
                )
                continue
            pts = np.asarray(run, dtype=np.int64)
            if tol == 0:
                idxs = list(range(len(run)))
            else:
                idxs = _rdp_indices(pts, 2.0 * tol)  # tol is in pixels, trace in grid units
            vertices = [run[i] for i in idxs]
            angles = [_angle(p, q) for p, q in zip(vertices, vertices[1:])]
            chains.append(PolygonChain(vertices, angles, trace=list(run), vertex_indices=idxs))
        out[key] = chains
    return out


def assign_gt_orientations(gt: LabelMap, spec: BinSpec, tol: float = 3.0) -> GtOrientationLabels:
    """Label every boundary edgel of a partition with the bin of the nearest
    polygon segment's angle (ties to the earlier segment in chain order)."""
    sb = from_label_map(gt)
    chains_by_pair = simplify_to_polygons(sb, tol)
    p0s, p1s, angs = [], [], []
    for key in sorted(chains_by_pair):
        for chain in chains_by_pair[key]:
            for i, ang in enumerate(chain.segment_angles):
                p0s.append(chain.vertices[i])
                p1s.append(chain.vertices[i + 1])
                angs.append(ang)
    edgels = sorted({tuple(e) for seg in sb.segments.values() for e in seg.edgels})
    if not edgels:
        return GtOrientationLabels(np.empty((0, 2), dtype=np.int64), np.empty(0, dtype=np.int64))
    pts = np.asarray(edgels, dtype=np.float64)
    p0 = np.asarray(p0s, dtype=np.float64)
    p1 = np.asarray(p1s, dtype=np.float64)
    d = p1 - p0
    len2 = (d * d).sum(axis=1)
    len2[len2 == 0] = 1.0
    t = ((pts[:, None, :] - p0[None, :, :]) * d[None, :, :]).sum(axis=2) / len2[None, :]
    t = np.clip(t, 0.0, 1.0)
    proj = p0[None, :, :] + t[:, :, None] * d[None, :, :]
    dist = np.hypot(*(pts[:, None, :] - proj).transpose(2, 0, 1))
    nearest = dist.argmin(axis=1)  # first minimum = earliest segment
    bins = spec.bin_of(np.asarray(angs)[nearest])
    return GtOrientationLabels(np.asarray(edgels, dtype=np.int64), bins)


# ---------------------------------------------------------------------------
# Local-gradient baseline


def local_gradient_orientation(contours: ContourMap, sigma: float):
    """Gaussian-derivative gradient baseline.

    Returns (OrientationMap, confidence ContourMap): the boundary direction
    is orthogonal to the gradient; confidence is the gradient magnitude
    rescaled by its maximum (all-zero map gives all-zero confidence).
    """
    if sigma <= 0:
        raise ContractError("sigma must be > 0")
    v = contours.values
    g_col = gaussian_filter(v, sigma, order=(0, 1))
    g_row = gaussian_filter(v, sigma, order=(1, 0))
    angles = np.mod(np.arctan2(g_row, g_col) + np.pi / 2, np.pi)
    mag = np.hypot(g_row, g_col)
    peak = float(mag.max())
    conf = mag / peak if peak > 0 else np.zeros_like(mag)
    return OrientationMap(angles), ContourMap(conf)


# ---------------------------------------------------------------------------
# Evaluation protocol


def owning_pixel(coords: np.ndarray):
    """Pixel on the lower/left side of each edgel: (ceil(gr/2), floor(gc/2))."""
    coords = np.asarray(coords, dtype=np.int64)
    return (coords[:, 0] + 1) // 2, coords[:, 1] // 2


def eval_orientation(
    pred_angle: OrientationMap,
    confidence: ContourMap,
    gt: GtOrientationLabels,
    spec: BinSpec,
):
    """Accuracy-vs-confidence-percentile curve and its mean (AUC).

    Each GT edgel's prediction is the bin containing the angle at its owning
    pixel. Edgels are sorted by descending confidence; percentile p evaluates
    the top p% (confidence ties included), scoring mean per-class accuracy
    over the GT bins present. Returns (curve, auc) with curve a list of
    (percentile, accuracy).
    """
    if len(gt) == 0:
        raise ContractError("ground truth is empty")
    if (pred_angle.width, pred_angle.height) != (confidence.width, confidence.height):
        raise ContractError("prediction and confidence dimensions disagree")
    if (gt.bins > spec.K).any():
        raise ContractError(f"ground-truth bins exceed K={spec.K}")
    rows, cols = owning_pixel(gt.coords)
    if rows.max() >= pred_angle.height or cols.max() >= pred_angle.width:
        raise ContractError("ground-truth edgels fall outside the prediction map")
    pred_bins = spec.bin_of(pred_angle.angles[rows, cols])
    conf = confidence.values[rows, cols]

    order = np.argsort(-conf, kind="stable")
    conf_sorted = conf[order]
    gt_sorted = gt.bins[order]
    correct_sorted = (pred_bins == gt.bins)[order]
    n = len(gt)

    curve = []
    total = 0.0
    for p in range(1, 101):
        n_p = -((-p * n) // 100)  # ceil(p*n/100)
        cutoff = conf_sorted[n_p - 1]
        count = int(np.searchsorted(-conf_sorted, -cutoff, side="right"))
        gt_top = gt_sorted[:count]
        ok_top = correct_sorted[:count].astype(np.float64)
        hits = np.bincount(gt_top, weights=ok_top, minlength=spec.K + 1)
        sizes = np.bincount(gt_top, minlength=spec.K + 1)
        present = sizes > 0
        acc = float(np.mean(hits[present] / sizes[present]))
        curve.append((p, acc))
        total += acc
    return curve, total / 100.0


# ---------------------------------------------------------------------------
# CSV interfaces


def save_gt_csv(gt: GtOrientationLabels, path) -> None:
    lines = ["grid_row,grid_col,bin"]
    lines += [f"{gr},{gc},{b}" for (gr, gc), b in zip(gt.coords.tolist(), gt.bins.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def load_gt_csv(path) -> GtOrientationLabels:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "grid_row,grid_col,bin":
        raise FormatError("expected header grid_row,grid_col,bin")
    coords, bins = [], []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        try:
            gr, gc, b = (int(x) for x in ln.split(","))
        except ValueError:
            raise FormatError(f"malformed GT orientation row {ln!r}") from None
        coords.append((gr, gc))
        bins.append(b)
    return GtOrientationLabels(
        np.asarray(coords, dtype=np.int64).reshape(-1, 2), np.asarray(bins, dtype=np.int64)
    )


def save_curve_csv(curve, path) -> None:
    lines = ["percentile,accuracy"]
    lines += [f"{p},{acc!r}" for p, acc in curve]
    Path(path).write_text("\n".join(lines) + "\n")
