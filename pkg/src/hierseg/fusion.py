"""Class-balanced cross-entropy scoring and linear fusion of side activations.

Side activations are unbounded real fields at arbitrary per-map resolutions;
fusion bilinearly resamples them to a common grid, combines them with scalar
weights and squashes through a logistic sigmoid. The loss operates on a
probability map against a binary ground truth with a class-balance weight
beta (auto mode: fraction of background pixels).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ContractError
from .raster import ContourMap, LabelMap

__all__ = [
    "SideActivations",
    "FusionWeights",
    "class_balanced_loss",
    "class_balanced_loss_grad",
    "fuse_sides",
    "bilinear_resample",
]

P_CLAMP = 1e-7  # probability clamp before logs


@dataclass
class SideActivations:
    """M activation grids (unbounded reals) plus the fusion resolution."""

    maps: list
    target_width: int
    target_height: int

    def __post_init__(self):
        if not self.maps:
            raise ContractError("need at least one side activation map")
        self.maps = [np.asarray(m, dtype=np.float64) for m in self.maps]
        for m in self.maps:
            if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
                raise ContractError("side activations must be 2-D grids")
        if self.target_width < 1 or self.target_height < 1:
            raise ContractError("fusion resolution must be positive")


@dataclass
class FusionWeights:
    """One scalar weight per side activation map."""

    h: list

    def __post_init__(self):
        self.h = [float(x) for x in self.h]


def _check_loss_inputs(p: ContourMap, y: LabelMap, beta):
    if (p.width, p.height) != (y.width, y.height):
        raise ContractError("probability map and ground truth dimensions disagree")
    if y.labels.max() > 1:
        raise ContractError("ground truth must be binary (values in {0, 1})")
    if beta is not None and not 0 < beta < 1:
        raise ContractError("explicit beta must lie in (0, 1)")
    pos = y.labels == 1
    if beta is None:
        beta = float(np.count_nonzero(~pos)) / y.labels.size  # |Y-| / |Y|
    pc = np.clip(p.values, P_CLAMP, 1.0 - P_CLAMP)
    return pc, pos, beta


def class_balanced_loss(p: ContourMap, y: LabelMap, beta: float | None = None) -> float:
    """-beta * sum_{Y+} log p  -  (1-beta) * sum_{Y-} log(1-p).

    beta=None uses the class-balance weight |Y-|/|Y|; when one class is empty
    under auto mode, beta degenerates to 1 or 0 and the loss is carried by
    the remaining side alone. Probabilities are clamped to
    [1e-7, 1 - 1e-7] before the logs. Summation is row-major and
    deterministic (bit-stable across runs).
    """
    pc, pos, beta = _check_loss_inputs(p, y, beta)
    pos_term = float(np.sum(np.log(pc.ravel()[pos.ravel()])))
    neg_term = float(np.sum(np.log1p(-pc.ravel()[~pos.ravel()])))
    return -beta * pos_term - (1.0 - beta) * neg_term


def class_balanced_loss_grad(p: ContourMap, y: LabelMap, beta: float | None = None) -> np.ndarray:
    """Analytic d(loss)/dp per pixel: -beta/p on Y+, (1-beta)/(1-p) on Y-.

    Defined for probabilities inside the clamp interval (the loss is constant
    in p outside it).
    """
    pc, pos, beta = _check_loss_inputs(p, y, beta)
    grad = np.where(pos, -beta / pc, (1.0 - beta) / (1.0 - pc))
    return grad


def _bilinear(values: np.ndarray, new_width: int, new_height: int) -> np.ndarray:
    """Standard bilinear resampling with pixel-center alignment
    (u = (j + 0.5) * src/dst - 0.5, clamped); exact identity at equal dims."""
    h, w = values.shape
    if (new_height, new_width) == (h, w):
        return values.copy()
    ur = np.clip((np.arange(new_height) + 0.5) * (h / new_height) - 0.5, 0.0, h - 1.0)
    uc = np.clip((np.arange(new_width) + 0.5) * (w / new_width) - 0.5, 0.0, w - 1.0)
    r0 = np.floor(ur).astype(np.int64)
    c0 = np.floor(uc).astype(np.int64)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = (ur - r0)[:, None]
    fc = (uc - c0)[None, :]
    top = values[np.ix_(r0, c0)] * (1.0 - fc) + values[np.ix_(r0, c1)] * fc
    bottom = values[np.ix_(r1, c0)] * (1.0 - fc) + values[np.ix_(r1, c1)] * fc
    return top * (1.0 - fr) + bottom * fr


def bilinear_resample(m: ContourMap, new_width: int, new_height: int) -> ContourMap:
    """Bilinear resampling of a contour map (identity at equal dimensions)."""
    if new_width < 1 or new_height < 1:
        raise ContractError("target dimensions must be >= 1")
    if (new_width, new_height) == (m.width, m.height):
        return m
    return ContourMap(np.clip(_bilinear(m.values, new_width, new_height), 0.0, 1.0))


def fuse_sides(sides: SideActivations, w: FusionWeights) -> ContourMap:
    """Sigmoid of the weighted sum of the side maps, resampled to the fusion
    resolution. Output values lie strictly inside (0, 1)."""
    if len(w.h) != len(sides.maps):
        raise ContractError(
            f"{len(w.h)} weights for {len(sides.maps)} side maps"
        )
    total = np.zeros((sides.target_height, sides.target_width), dtype=np.float64)
    for weight, m in zip(w.h, sides.maps):
        total += weight * _bilinear(m, sides.target_width, sides.target_height)
    return ContourMap(expit(total))
