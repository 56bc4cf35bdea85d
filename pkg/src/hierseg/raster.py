"""Grid containers for per-pixel data and binary PGM/PFM file I/O.

All map types are immutable after construction (their arrays are marked
read-only) and safe to share across threads. Files use binary PGM (P5,
8/16-bit, big-endian payload) for integer data and PFM ("Pf" grayscale,
float32, bottom-up scanlines) for real-valued data.
"""

from __future__ import annotations

import re
import struct
from pathlib import Path

import numpy as np

from .errors import ContractError, FormatError

__all__ = [
    "ContourMap",
    "LabelMap",
    "BinStack",
    "OrientationMap",
    "BoundaryGrid",
    "read_pgm",
    "write_pgm",
    "read_pfm",
    "read_pfm_raw",
    "write_pfm",
    "write_pfm_raw",
    "load_bin_stack",
    "resample_nearest",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


class ContourMap:
    """Per-pixel boundary strength in [0, 1] on a width x height grid."""

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ContractError("contour map must be a 2-D grid with positive dimensions")
        if not np.isfinite(values).all():
            raise ContractError("contour map values must be finite")
        if values.min() < 0.0 or values.max() > 1.0:
            raise ContractError("contour map values must lie in [0, 1]")
        self.values = _freeze(values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other) -> bool:
        return isinstance(other, ContourMap) and np.array_equal(self.values, other.values)


class LabelMap:
    """Row-major non-negative region identifiers forming a compact labeling.

    The label set is {0..R-1} with every label present. 4-connectivity of each
    region is guaranteed by construction operations (watershed, thresholding,
    boundary-grid labeling) but is not enforced here: raw file loads may carry
    arbitrary partitions.
    """

    def __init__(self, labels: np.ndarray):
        labels = np.asarray(labels)
        if labels.ndim != 2 or labels.shape[0] < 1 or labels.shape[1] < 1:
            raise ContractError("label map must be a 2-D grid with positive dimensions")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ContractError("labels must be integers")
        labels = labels.astype(np.int32)
        if labels.min() < 0:
            raise ContractError("labels must be non-negative")
        n = int(labels.max()) + 1
        present = np.zeros(n, dtype=bool)
        present[labels.ravel()] = True
        if not present.all():
            raise ContractError("labeling is not compact: some label in 0..max is absent")
        self.labels = _freeze(labels)
        self.num_regions = n

    @classmethod
    def from_raw(cls, values: np.ndarray) -> "LabelMap":
        """Build a LabelMap from arbitrary non-negative integers by compacting
        them in row-major first-occurrence order."""
        values = np.asarray(values)
        _, first_idx, inverse = np.unique(
            values.ravel(), return_index=True, return_inverse=True
        )
        rank = np.empty(first_idx.size, dtype=np.int32)
        rank[np.argsort(first_idx, kind="stable")] = np.arange(first_idx.size, dtype=np.int32)
        return cls(rank[inverse].reshape(values.shape))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def same_partition(self, other: "LabelMap") -> bool:
        """True if the two maps define the same partition up to renaming."""
        if self.labels.shape != other.labels.shape:
            return False
        a = self.labels.ravel().astype(np.int64)
        b = other.labels.ravel().astype(np.int64)
        pairs = a * (b.max() + 1) + b
        return (
            np.unique(pairs).size == np.unique(a).size == np.unique(b).size
        )


class BinStack:
    """K orientation-bin response maps, each in [0, 1], sharing one grid."""

    def __init__(self, responses: np.ndarray):
        responses = np.asarray(responses, dtype=np.float64)
        if responses.ndim != 3:
            raise ContractError("bin stack must be a K x H x W array")
        if responses.shape[0] < 2:
            raise ContractError("bin stack needs K >= 2 bins")
        if not np.isfinite(responses).all():
            raise ContractError("bin responses must be finite")
        if responses.min() < 0.0 or responses.max() > 1.0:
            raise ContractError("bin responses must lie in [0, 1]")
        self.responses = _freeze(responses)

    @property
    def K(self) -> int:
        return self.responses.shape[0]

    @property
    def height(self) -> int:
        return self.responses.shape[1]

    @property
    def width(self) -> int:
        return self.responses.shape[2]


class OrientationMap:
    """Per-pixel undirected boundary angle in [0, pi)."""

    def __init__(self, angles: np.ndarray):
        angles = np.asarray(angles, dtype=np.float64)
        if angles.ndim != 2 or angles.shape[0] < 1 or angles.shape[1] < 1:
            raise ContractError("orientation map must be a 2-D grid with positive dimensions")
        if not np.isfinite(angles).all():
            raise ContractError("angles must be finite")
        if angles.min() < 0.0 or angles.max() >= np.pi:
            raise ContractError("angles must lie in [0, pi)")
        self.angles = _freeze(angles)

    @property
    def height(self) -> int:
        return self.angles.shape[0]

    @property
    def width(self) -> int:
        return self.angles.shape[1]


class BoundaryGrid:
    """Interleaved (2H-1) x (2W-1) lattice of pixels, edgels and junctions.

    Cells at (even, even) are pixel positions and always 0; (even, odd) and
    (odd, even) are edgel positions; (odd, odd) are junctions. Cell values are
    strengths, 0 meaning inactive.
    """

    def __init__(self, cells: np.ndarray):
        cells = np.asarray(cells, dtype=np.float64)
        if cells.ndim != 2 or cells.shape[0] % 2 == 0 or cells.shape[1] % 2 == 0:
            raise ContractError("boundary grid dimensions must be odd x odd")
        if cells[0::2, 0::2].any():
            raise ContractError("pixel positions (even, even) must be 0")
        if cells.min() < 0.0:
            raise ContractError("strengths must be non-negative")
        self.cells = _freeze(cells)

    @property
    def grid_height(self) -> int:
        return self.cells.shape[0]

    @property
    def grid_width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        """Pixel rows of the underlying image."""
        return (self.cells.shape[0] + 1) // 2

    @property
    def width(self) -> int:
        return (self.cells.shape[1] + 1) // 2


# ---------------------------------------------------------------------------
# PGM (P5)

_TOKEN = re.compile(rb"\S+")


def _read_pgm_tokens(data: bytes, count: int):
    """Yield `count` header tokens, skipping whitespace and # comments.
    Returns (tokens, offset of payload)."""
    tokens = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise FormatError("truncated PGM header")
        c = data[i : i + 1]
        if c == b"#":
            nl = data.find(b"\n", i)
            if nl < 0:
                raise FormatError("unterminated comment in PGM header")
            i = nl + 1
        elif c.isspace():
            i += 1
        else:
            m = _TOKEN.match(data, i)
            tokens.append(m.group(0))
            i = m.end()
    # exactly one whitespace byte separates the header from the payload
    if i >= len(data) or not data[i : i + 1].isspace():
        raise FormatError("missing whitespace after PGM maxval")
    return tokens, i + 1


def read_pgm(path, kind: str = "contour"):
    """Read a binary PGM (P5) file.

    kind="contour": values are divided by maxval, giving a ContourMap.
    kind="labels": raw integer values are compacted into a LabelMap.
    kind="binary": nonzero -> 1, returned as a LabelMap without compaction
    (an all-foreground mask keeps its 1s).
    """
    if kind not in ("contour", "labels", "binary"):
        raise ContractError(f"unknown PGM kind {kind!r}")
    data = Path(path).read_bytes()
    (magic,), i = _read_pgm_tokens(data, 1)
    if magic != b"P5":
        raise FormatError(f"expected PGM magic P5, found {magic!r}")
    toks, payload_at = _read_pgm_tokens(data[i:], 3)
    payload_at += i
    try:
        width, height, maxval = (int(t) for t in toks)
    except ValueError:
        raise FormatError("non-numeric PGM header field") from None
    if width < 1 or height < 1:
        raise FormatError("PGM dimensions must be positive")
    if not 1 <= maxval <= 65535:
        raise FormatError(f"PGM maxval {maxval} outside 1..65535")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    payload = data[payload_at : payload_at + need]
    if len(payload) < need:
        raise FormatError("truncated PGM payload")
    values = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    if values.max(initial=0) > maxval:
        raise FormatError("PGM sample exceeds maxval")
    if kind == "contour":
        return ContourMap(values.astype(np.float64) / maxval)
    if kind == "binary":
        return LabelMap((values != 0).astype(np.int32))
    return LabelMap.from_raw(values.astype(np.int64))


def write_pgm(m, path) -> None:
    """Write a ContourMap (quantized to maxval 255) or LabelMap to binary PGM."""
    if isinstance(m, ContourMap):
        maxval = 255
        values = np.rint(m.values * maxval).astype(np.uint8)
    elif isinstance(m, LabelMap):
        top = m.num_regions - 1
        if top > 65535:
            raise ContractError(f"{m.num_regions} labels exceed the 16-bit PGM range")
        maxval = 255 if top <= 255 else 65535
        dtype = np.uint8 if maxval == 255 else np.dtype(">u2")
        values = m.labels.astype(dtype)
        if top == 0:
            maxval = 1  # all-zero map still needs a legal maxval
    else:
        raise ContractError("write_pgm expects a ContourMap or LabelMap")
    header = f"P5\n{values.shape[1]} {values.shape[0]}\n{maxval}\n".encode()
    Path(path).write_bytes(header + values.tobytes())


# ---------------------------------------------------------------------------
# PFM ("Pf" grayscale)


def _read_pfm_line(data: bytes, i: int):
    nl = data.find(b"\n", i)
    if nl < 0:
        raise FormatError("truncated PFM header")
    return data[i:nl].decode("ascii", "replace").strip(), nl + 1


def read_pfm_raw(path) -> np.ndarray:
    """Read a grayscale PFM as a raw float64 array (no clamping).

    Used for unbounded activation fields; NaN samples and color files are
    still rejected.
    """
    data = Path(path).read_bytes()
    magic, i = _read_pfm_line(data, 0)
    if magic == "PF":
        raise FormatError("color PFM (PF) not supported, expected grayscale Pf")
    if magic != "Pf":
        raise FormatError(f"expected PFM magic Pf, found {magic!r}")
    dims, i = _read_pfm_line(data, i)
    try:
        width, height = (int(t) for t in dims.split())
    except ValueError:
        raise FormatError(f"malformed PFM dimension line {dims!r}") from None
    if width < 1 or height < 1:
        raise FormatError("PFM dimensions must be positive")
    scale_line, i = _read_pfm_line(data, i)
    try:
        scale = float(scale_line)
    except ValueError:
        raise FormatError(f"malformed PFM scale line {scale_line!r}") from None
    if scale == 0.0:
        raise FormatError("PFM scale must be nonzero")
    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    need = width * height * 4
    payload = data[i : i + need]
    if len(payload) < need:
        raise FormatError("truncated PFM payload")
    values = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    values = np.flipud(values).astype(np.float64)  # PFM scanlines are bottom-up
    if np.isnan(values).any():
        raise FormatError("PFM payload contains NaN")
    return values


def read_pfm(path):
    """Read a grayscale PFM file.

    Returns (ContourMap, clamp_count) where clamp_count is the number of
    values that had to be clamped into [0, 1]. NaN samples are rejected;
    color ("PF") files are rejected.
    """
    values = read_pfm_raw(path)
    clamped = np.clip(values, 0.0, 1.0)
    clamp_count = int(np.count_nonzero(clamped != values))
    return ContourMap(clamped), clamp_count


def write_pfm_raw(values: np.ndarray, path) -> None:
    """Write a raw 2-D float array as little-endian grayscale PFM (float32)."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ContractError("PFM payload must be a 2-D array")
    header = f"Pf\n{values.shape[1]} {values.shape[0]}\n-1.0\n".encode()
    payload = np.flipud(values).astype("<f4").tobytes()
    Path(path).write_bytes(header + payload)


def write_pfm(m: ContourMap, path) -> None:
    """Write a ContourMap as little-endian grayscale PFM (float32)."""
    if not isinstance(m, ContourMap):
        raise ContractError("write_pfm expects a ContourMap")
    write_pfm_raw(m.values, path)


def load_bin_stack(directory, K: int | None = None):
    """Load a BinStack from `bins_k<k>.pfm` files, k = 1..K, in a directory.

    K defaults to the number of matching files present. Returns
    (BinStack, total_clamp_count).
    """
    directory = Path(directory)
    if K is None:
        ks = []
        for p in directory.glob("bins_k*.pfm"):
            m = re.fullmatch(r"bins_k(\d+)\.pfm", p.name)
            if m:
                ks.append(int(m.group(1)))
        if not ks:
            raise FormatError(f"no bins_k<k>.pfm files in {directory}")
        K = max(ks)
    maps = []
    clamp_total = 0
    for k in range(1, K + 1):
        p = directory / f"bins_k{k}.pfm"
        if not p.exists():
            raise FormatError(f"missing bin file {p}")
        cm, clamped = read_pfm(p)
        maps.append(cm.values)
        clamp_total += clamped
    if len({a.shape for a in maps}) != 1:
        raise ContractError("bin maps disagree on dimensions")
    return BinStack(np.stack(maps)), clamp_total


# ---------------------------------------------------------------------------
# Resampling


def _nearest_indices(n_src: int, n_dst: int) -> np.ndarray:
    idx = np.floor((np.arange(n_dst) + 0.5) * (n_src / n_dst)).astype(np.int64)
    return np.clip(idx, 0, n_src - 1)


def resample_nearest(m, new_width: int, new_height: int):
    """Nearest-neighbor resampling: each output pixel takes the value of the
    nearest input pixel center. Returns the same kind of map."""
    if new_width < 1 or new_height < 1:
        raise ContractError("target dimensions must be >= 1")
    if isinstance(m, ContourMap):
        src = m.values
    elif isinstance(m, LabelMap):
        src = m.labels
    else:
        raise ContractError("resample_nearest expects a ContourMap or LabelMap")
    if new_height == src.shape[0] and new_width == src.shape[1]:
        return m
    rows = _nearest_indices(src.shape[0], new_height)
    cols = _nearest_indices(src.shape[1], new_width)
    out = src[np.ix_(rows, cols)]
    if isinstance(m, ContourMap):
        return ContourMap(out)
    # label sets can lose members on downsampling; recompact only then
    n = int(out.max()) + 1
    present = np.zeros(n, dtype=bool)
    present[out.ravel()] = True
    if present.all():
        return LabelMap(out)
    return LabelMap.from_raw(out)


def resample_grid_nearest(cells: np.ndarray, new_gh: int, new_gw: int) -> np.ndarray:
    """Nearest-neighbor resampling of a raw boundary-grid cell array."""
    if new_gh == cells.shape[0] and new_gw == cells.shape[1]:
        return cells.copy()
    rows = _nearest_indices(cells.shape[0], new_gh)
    cols = _nearest_indices(cells.shape[1], new_gw)
    return cells[np.ix_(rows, cols)]
