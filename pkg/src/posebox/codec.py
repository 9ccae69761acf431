"""Ground-truth field synthesis and the per-stage supervision loss.

Confidence maps hold, per joint class, the max over persons of a Gaussian
peak centered on each annotated joint. Direction fields hold, per limb
class, the mean of the per-person unit limb vectors over every cell inside
a 2*delta-wide rectangle along the limb. Both are evaluated at grid cell
centers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _accel
from .core import NUM_JOINTS, FieldGrid, SceneAnnotation, Skeleton, grid_dims_for_image

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EncoderConfig:
    """Field synthesis parameters.

    sigma: Gaussian spread of joint peaks, in pixels.
    delta: half-width of the limb rectangle, in pixels.
    stride: pixels per grid cell.

    Peak values below 1e-4 (outside a square window of ~3.03 sigma around
    the joint) are stored as exact zeros for speed.
    """

    sigma: float = 7.0
    delta: float = 8.0
    stride: int = 1

    def __post_init__(self) -> None:
        if self.sigma <= 0 or self.delta <= 0:
            raise ValueError("sigma and delta must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


@dataclass(frozen=True)
class LossWeights:
    """Background weight plus the binary validity mask (1 where annotated)."""

    background_weight: float
    mask: FieldGrid

    def __post_init__(self) -> None:
        if self.background_weight < 0:
            raise ValueError("background weight must be >= 0")
        if self.mask.channels != 1:
            raise ValueError("mask must be single-channel")


def encode_confidence_maps(scene: SceneAnnotation, cfg: EncoderConfig) -> list[FieldGrid]:
    """One peak map per joint class; value at a cell is the max over persons
    of exp(-d^2 / sigma^2), d the distance from the cell center to the joint.
    Missing joints contribute nothing; an empty scene yields all-zero maps."""
    gw, gh = grid_dims_for_image(scene.image_width, scene.image_height, cfg.stride)
    maps = []
    for j in range(NUM_JOINTS):
        xs = np.array([p.joints[j].x for p in scene.persons if p.joints[j] is not None])
        ys = np.array([p.joints[j].y for p in scene.persons if p.joints[j] is not None])
        data = np.zeros((gh, gw), dtype=np.float32)
        if xs.size:
            _accel.gaussian_peak_max(data, xs, ys, cfg.sigma, cfg.stride)
        maps.append(FieldGrid(data, stride=cfg.stride))
    return maps


def encode_direction_fields(scene: SceneAnnotation, cfg: EncoderConfig,
                            skeleton: Skeleton) -> list[FieldGrid]:
    """One 2-channel field per limb class: inside the rectangle of each
    person's limb the per-person field is that limb's unit vector, and the
    scene field is the mean of the non-zero per-person vectors.

    A limb is encoded only when both endpoints are present; zero-length
    limbs are skipped (counted at debug level).
    """
    gw, gh = grid_dims_for_image(scene.image_width, scene.image_height, cfg.stride)
    fields = []
    skipped = 0
    for parent, child in skeleton.limbs:
        vec_sum = np.zeros((gh, gw, 2), dtype=np.float64)
        count = np.zeros((gh, gw), dtype=np.int32)
        for person in scene.persons:
            a = person.joints[parent]
            b = person.joints[child]
            if a is None or b is None:
                continue
            written = _accel.limb_field_accumulate(
                vec_sum, count, a.x, a.y, b.x, b.y, cfg.delta, cfg.stride)
            if not written:
                skipped += 1
        data = np.zeros((gh, gw, 2), dtype=np.float32)
        hit = count > 0
        if hit.any():
            data[hit] = (vec_sum[hit] / count[hit, None]).astype(np.float32)
        fields.append(FieldGrid(data, stride=cfg.stride))
    if skipped:
        logger.debug("skipped %d zero-length limb instances while encoding", skipped)
    return fields


def background_map(confidence_maps: Sequence[FieldGrid]) -> FieldGrid:
    """1 - max over joint maps, per cell."""
    if not confidence_maps:
        raise ValueError("need at least one confidence map")
    shape = confidence_maps[0].data.shape
    stride = confidence_maps[0].stride
    for m in confidence_maps:
        if m.data.shape != shape or m.stride != stride:
            raise ValueError("confidence maps disagree in shape or stride")
    stacked = np.stack([m.data for m in confidence_maps])
    return FieldGrid((1.0 - stacked.max(axis=0)).astype(np.float32), stride=stride)


def _check_same_shape(grids: Sequence[FieldGrid], ref_hw: tuple[int, int], what: str) -> None:
    for g in grids:
        if (g.height, g.width) != ref_hw:
            raise ValueError(f"{what} shape {(g.height, g.width)} does not match mask {ref_hw}")


def supervision_loss(pred_maps: Sequence[FieldGrid], pred_background: FieldGrid,
                     pred_fields: Sequence[FieldGrid],
                     gt_maps: Sequence[FieldGrid], gt_background: FieldGrid,
                     gt_fields: Sequence[FieldGrid],
                     weights: LossWeights) -> tuple[float, float]:
    """Masked squared error of one prediction stage against ground truth.

    Returns ``(map_loss, field_loss)``: the joint-map term is masked per
    cell and the background term is scaled by the background weight; the
    field term is masked per cell. Sums run in float64.
    """
    mask = weights.mask.data.astype(np.float64)
    hw = (weights.mask.height, weights.mask.width)
    if len(pred_maps) != len(gt_maps) or len(pred_fields) != len(gt_fields):
        raise ValueError("prediction/ground-truth counts differ")
    _check_same_shape(list(pred_maps) + list(gt_maps), hw, "confidence map")
    _check_same_shape([pred_background, gt_background], hw, "background map")
    _check_same_shape(list(pred_fields) + list(gt_fields), hw, "direction field")

    map_loss = 0.0
    for p, g in zip(pred_maps, gt_maps):
        diff = p.data.astype(np.float64) - g.data.astype(np.float64)
        map_loss += float(np.sum(mask * diff * diff))
    bg_diff = pred_background.data.astype(np.float64) - gt_background.data.astype(np.float64)
    map_loss += weights.background_weight * float(np.sum(bg_diff * bg_diff))

    field_loss = 0.0
    for p, g in zip(pred_fields, gt_fields):
        diff = p.data.astype(np.float64) - g.data.astype(np.float64)
        field_loss += float(np.sum(mask * np.sum(diff * diff, axis=-1)))
    return map_loss, field_loss
