"""Candidate extraction from predicted maps and connection scoring.

Peaks are strict window maxima above a threshold, reported at cell centers
in pixel coordinates. Connections between candidate joints are scored by
sampling the limb direction field along the candidate segment and averaging
its dot product with the segment's unit direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _accel
from .core import BoundingBox, FieldGrid, Point2, Skeleton


@dataclass(frozen=True)
class DetectConfig:
    """Decoding parameters.

    peak_threshold: minimum map value for a candidate joint.
    nms_window: odd side length (cells) of the strict-maximum window. The
        default of 5 suppresses the ring of noise-made maxima that appears
        on the flat outer slope of a peak under bounded map noise; 3 keeps
        those and lets near-axis spurious candidates steal greedy
        connections from true pairs.
    sample_step: pixel spacing of field samples along a candidate segment.
    box_extension: total fractional growth applied to detector boxes
        (half on each side) before parsing.
    refine_peaks: quadratic sub-cell refinement of peak locations
        (off by default; keeps decoded locations exactly on cell centers).
    """

    peak_threshold: float = 0.1
    nms_window: int = 5
    sample_step: float = 1.0
    box_extension: float = 0.10
    refine_peaks: bool = False

    def __post_init__(self) -> None:
        if not (0.0 < self.peak_threshold < 1.0):
            raise ValueError("peak_threshold must be in (0, 1)")
        if self.nms_window < 3 or self.nms_window % 2 == 0:
            raise ValueError("nms_window must be odd and >= 3")
        if self.sample_step <= 0:
            raise ValueError("sample_step must be positive")
        if self.box_extension < 0:
            raise ValueError("box_extension must be >= 0")


@dataclass(frozen=True)
class CandidateJoint:
    """A peak of one joint class: stable id, class, pixel location, score."""

    id: int
    joint_class: int
    location: Point2
    score: float


@dataclass(frozen=True)
class CandidateConnection:
    """A scored directed pairing of a parent-class and a child-class
    candidate for one limb class."""

    limb_class: int
    start: int
    end: int
    score: float


def _quadratic_offset(lo: float, center: float, hi: float) -> float:
    denom = lo - 2.0 * center + hi
    if denom >= 0.0:
        return 0.0
    off = 0.5 * (lo - hi) / denom
    return min(0.5, max(-0.5, off))


def detect_peaks(grid: FieldGrid, joint_class: int, cfg: DetectConfig,
                 start_id: int = 0) -> list[CandidateJoint]:
    """Strict local maxima of a single-channel map, value >= threshold.

    Ties inside a window go to the lowest row-major cell. Candidates get
    sequential ids from ``start_id`` in row-major order.
    """
    if grid.channels != 1:
        raise ValueError("peak detection expects a single-channel map")
    ys, xs = _accel.find_strict_peaks(grid.data, cfg.peak_threshold, cfg.nms_window)
    out = []
    data = grid.data
    h, w = data.shape
    for k, (iy, ix) in enumerate(zip(ys.tolist(), xs.tolist())):
        ox = oy = 0.0
        if cfg.refine_peaks and 0 < ix < w - 1 and 0 < iy < h - 1:
            ox = _quadratic_offset(float(data[iy, ix - 1]), float(data[iy, ix]),
                                   float(data[iy, ix + 1]))
            oy = _quadratic_offset(float(data[iy - 1, ix]), float(data[iy, ix]),
                                   float(data[iy + 1, ix]))
        loc = Point2((ix + 0.5 + ox) * grid.stride, (iy + 0.5 + oy) * grid.stride)
        out.append(CandidateJoint(id=start_id + k, joint_class=joint_class,
                                  location=loc, score=float(data[iy, ix])))
    return out


def connection_score(field: FieldGrid, a: Point2, b: Point2, cfg: DetectConfig) -> float:
    """Average alignment between the field and segment a->b.

    The field is sampled bilinearly at max(2, ceil(len/sample_step)) points
    including both endpoints; each sample is dotted with the segment's unit
    direction. Because samples are convex combinations of cell vectors the
    result never exceeds the largest field magnitude.
    """
    if a == b:
        raise ValueError("connection endpoints coincide; direction undefined")
    if field.channels != 2:
        raise ValueError("connection scoring expects a 2-channel field")
    return _accel.line_integral_score(
        field.data, a.x, a.y, b.x, b.y, field.stride, cfg.sample_step)


def score_all_connections(candidates: Sequence[CandidateJoint],
                          fields: Sequence[FieldGrid],
                          skeleton: Skeleton,
                          cfg: DetectConfig) -> list[CandidateConnection]:
    """Score every (parent candidate, child candidate) pair of every limb.

    Output is ordered by limb class, then score descending, then
    (start id, end id) ascending, so greedy consumers are deterministic.
    """
    by_class: dict[int, list[CandidateJoint]] = {}
    for c in candidates:
        by_class.setdefault(c.joint_class, []).append(c)
    out: list[CandidateConnection] = []
    for limb_class, (parent, child) in enumerate(skeleton.limbs):
        field = fields[limb_class]
        scored = []
        for p in by_class.get(parent, []):
            for q in by_class.get(child, []):
                if p.location == q.location:
                    continue
                s = connection_score(field, p.location, q.location, cfg)
                scored.append(CandidateConnection(limb_class, p.id, q.id, s))
        scored.sort(key=lambda c: (-c.score, c.start, c.end))
        out.extend(scored)
    return out


def fuse_scales(per_scale_outputs: Sequence[tuple[float, Sequence[FieldGrid], Sequence[FieldGrid]]],
                base_shape: tuple[int, int], stride: int = 1) -> tuple[list[FieldGrid], list[FieldGrid]]:
    """Average multi-scale map/field stacks after resampling each grid to
    ``base_shape`` (height, width in cells)."""
    if not per_scale_outputs:
        raise ValueError("need at least one scale")
    n_maps = len(per_scale_outputs[0][1])
    n_fields = len(per_scale_outputs[0][2])
    gh, gw = base_shape
    fused_maps = [np.zeros((gh, gw), dtype=np.float64) for _ in range(n_maps)]
    fused_fields = [np.zeros((gh, gw, 2), dtype=np.float64) for _ in range(n_fields)]
    for _, maps, fields in per_scale_outputs:
        if len(maps) != n_maps or len(fields) != n_fields:
            raise ValueError("scales disagree in map/field counts")
        for acc, m in zip(fused_maps, maps):
            acc += _accel.resample_bilinear(m.data, gh, gw)
        for acc, f in zip(fused_fields, fields):
            acc += _accel.resample_bilinear(f.data, gh, gw)
    n = len(per_scale_outputs)
    maps_out = [FieldGrid((acc / n).astype(np.float32), stride=stride) for acc in fused_maps]
    fields_out = [FieldGrid((acc / n).astype(np.float32), stride=stride) for acc in fused_fields]
    return maps_out, fields_out


def extend_box(box: BoundingBox, image_w: float, image_h: float,
               fraction: float) -> BoundingBox:
    """Grow width and height by ``fraction`` total (half per side), then
    clip to the image."""
    if fraction < 0:
        raise ValueError("fraction must be >= 0")
    dx = box.width * fraction / 2.0
    dy = box.height * fraction / 2.0
    return BoundingBox(
        x_min=max(0.0, box.x_min - dx),
        y_min=max(0.0, box.y_min - dy),
        x_max=min(float(image_w), box.x_max + dx),
        y_max=min(float(image_h), box.y_max + dy),
    )
