"""Deterministic synthetic scenes and prediction-error perturbations.

Scenes are articulated 14-joint stick figures with coarse anatomical
proportions, placed with a minimum pairwise separation. All randomness
comes from a counter-based generator (documented below) so a corpus
replays bit-identically from its seed, independent of platform RNG
libraries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import _accel
from .core import (
    NUM_JOINTS,
    BoundingBox,
    FieldGrid,
    Pose,
    PoseJoint,
    SceneAnnotation,
    Skeleton,
)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    """Finalizer of the splitmix64 generator."""
    z = x & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class CounterRng:
    """Counter-based uniform generator.

    Draw ``i`` of stream ``s`` is ``mix64(s + (i + 1) * GOLDEN)`` where
    ``mix64`` is the splitmix64 finalizer and ``GOLDEN`` is 2^64 / phi;
    uniforms take the top 53 bits over 2^53. Substreams are derived as
    ``mix64(seed ^ mix64(key))``, so scenes of a corpus are independent
    and replayable from (seed, index) alone.
    """

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64
        self._counter = 0

    @staticmethod
    def substream(seed: int, key: int) -> "CounterRng":
        return CounterRng(_mix64((seed & _MASK64) ^ _mix64(key)))

    def next_u64(self) -> int:
        self._counter += 1
        return _mix64(self._state + self._counter * _GOLDEN)

    def uniform01(self) -> float:
        return (self.next_u64() >> 11) / float(1 << 53)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform01()

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        return lo + int(self.uniform01() * (hi - lo + 1))

    def block01(self, n: int) -> np.ndarray:
        """n uniforms in one vectorized draw (identical values to n calls
        of ``uniform01``)."""
        counters = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        z = (np.uint64(self._state) + counters * np.uint64(_GOLDEN))
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)).astype(np.float64) / float(1 << 53)


@dataclass(frozen=True)
class OcclusionSpec:
    """Zero one limb class's direction field inside the limb rectangle of
    each selected person."""

    limb_class: int
    probability: float = 1.0


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    num_persons: tuple[int, int] = (1, 5)
    person_scale: tuple[float, float] = (80.0, 120.0)
    min_separation: float = 120.0
    image_size: tuple[int, int] = (848, 480)
    noise_amplitude: float = 0.0
    occlusion: Optional[OcclusionSpec] = None

    def __post_init__(self) -> None:
        if self.num_persons[0] > self.num_persons[1] or self.num_persons[0] < 0:
            raise ValueError("bad person-count range")
        if self.person_scale[0] > self.person_scale[1] or self.person_scale[0] <= 0:
            raise ValueError("bad person-scale range")
        if self.noise_amplitude < 0:
            raise ValueError("noise amplitude must be >= 0")


def with_seed(cfg: SynthConfig, seed: int) -> SynthConfig:
    return replace(cfg, seed=seed)


def scene_seed(corpus_seed: int, index: int) -> int:
    """Per-scene seed derived from a corpus seed; stable across runs."""
    return _mix64((corpus_seed & _MASK64) ^ _mix64(0x5CE4E + index))


_PLACEMENT_KEY = 101
_NOISE_KEY = 202
_OCCLUSION_KEY = 303


def _sample_figure(rng: CounterRng, height: float) -> list[tuple[float, float]]:
    """Joint offsets relative to the neck, +y pointing down the body."""
    pts: list[Optional[tuple[float, float]]] = [None] * NUM_JOINTS

    def polar(ox: float, oy: float, angle_from_down: float, length: float,
              side: float) -> tuple[float, float]:
        return (ox + side * math.sin(angle_from_down) * length,
                oy + math.cos(angle_from_down) * length)

    pts[13] = (0.0, 0.0)  # neck
    head_angle = rng.uniform(-0.25, 0.25)
    pts[12] = (math.sin(head_angle) * 0.18 * height,
               -math.cos(head_angle) * 0.18 * height)

    for side, sh, el, wr, hp, kn, an in ((1.0, 0, 1, 2, 6, 7, 8),
                                         (-1.0, 3, 4, 5, 9, 10, 11)):
        pts[sh] = (side * rng.uniform(0.11, 0.15) * height,
                   rng.uniform(0.00, 0.05) * height)
        upper = rng.uniform(-0.5, 1.0)
        pts[el] = polar(pts[sh][0], pts[sh][1], upper, 0.16 * height, side)
        fore = upper + rng.uniform(-0.2, 1.1)
        pts[wr] = polar(pts[el][0], pts[el][1], fore, 0.15 * height, side)
        pts[hp] = (side * rng.uniform(0.06, 0.10) * height,
                   rng.uniform(0.40, 0.46) * height)
        thigh = rng.uniform(-0.35, 0.35)
        pts[kn] = polar(pts[hp][0], pts[hp][1], thigh, 0.24 * height, side)
        shin = thigh + rng.uniform(-0.45, 0.15)
        pts[an] = polar(pts[kn][0], pts[kn][1], shin, 0.24 * height, side)
    return [p for p in pts if p is not None]


def generate_scene(cfg: SynthConfig) -> SceneAnnotation:
    """Seeded scene with articulated figures, minimal joint boxes, and
    pairwise neck separation of at least ``min_separation`` when it fits.

    If placement keeps failing after bounded retries the scene carries
    fewer persons; requested and placed counts are recorded in ``meta``.
    """
    rng = CounterRng.substream(cfg.seed, _PLACEMENT_KEY)
    img_w, img_h = cfg.image_size
    margin = 2.0
    requested = rng.randint(cfg.num_persons[0], cfg.num_persons[1])
    centers: list[tuple[float, float]] = []
    persons: list[Pose] = []
    boxes: list[BoundingBox] = []
    for _ in range(requested):
        placed = False
        for _attempt in range(60):
            height = rng.uniform(cfg.person_scale[0], cfg.person_scale[1])
            offsets = _sample_figure(rng, height)
            ox0 = min(o[0] for o in offsets)
            ox1 = max(o[0] for o in offsets)
            oy0 = min(o[1] for o in offsets)
            oy1 = max(o[1] for o in offsets)
            x_lo, x_hi = margin - ox0, img_w - margin - ox1
            y_lo, y_hi = margin - oy0, img_h - margin - oy1
            if x_lo >= x_hi or y_lo >= y_hi:
                continue
            cx = rng.uniform(x_lo, x_hi)
            cy = rng.uniform(y_lo, y_hi)
            if any(math.hypot(cx - px, cy - py) < cfg.min_separation
                   for px, py in centers):
                continue
            joints = tuple(PoseJoint(cx + dx, cy + dy, 1.0) for dx, dy in offsets)
            persons.append(Pose(joints=joints))
            boxes.append(BoundingBox(cx + ox0, cy + oy0, cx + ox1, cy + oy1))
            centers.append((cx, cy))
            placed = True
            break
        if not placed:
            break
    return SceneAnnotation(
        image_width=img_w,
        image_height=img_h,
        persons=tuple(persons),
        boxes=tuple(boxes),
        meta={"requested_persons": requested, "placed_persons": len(persons)},
    )


def occluded_person_indices(cfg: SynthConfig, n_persons: int) -> list[int]:
    """Persons whose configured limb field gets zeroed, drawn from the
    occlusion substream of the scene seed."""
    if cfg.occlusion is None:
        return []
    rng = CounterRng.substream(cfg.seed, _OCCLUSION_KEY)
    return [i for i in range(n_persons) if rng.uniform01() < cfg.occlusion.probability]


def perturb_fields(maps: Sequence[FieldGrid], fields: Sequence[FieldGrid],
                   cfg: SynthConfig, scene: Optional[SceneAnnotation] = None,
                   skeleton: Optional[Skeleton] = None,
                   occlusion_half_width: float = 10.0,
                   ) -> tuple[list[FieldGrid], list[FieldGrid]]:
    """Simulate prediction error: seeded bounded noise on every cell, plus
    the configured per-person limb-field occlusion.

    Maps are clamped to [0, 1] after the noise; fields are not clamped.
    Occlusion needs the scene (and skeleton) to locate limb rectangles;
    ``occlusion_half_width`` should be at least the encoder's rectangle
    half-width so the zeroed region covers every encoded cell.
    """
    rng = CounterRng.substream(cfg.seed, _NOISE_KEY)
    amp = cfg.noise_amplitude

    def noisy(data: np.ndarray) -> np.ndarray:
        if amp == 0.0:
            return data.copy()
        noise = amp * (2.0 * rng.block01(data.size).reshape(data.shape) - 1.0)
        return (data.astype(np.float64) + noise).astype(np.float32)

    out_maps = [FieldGrid(np.clip(noisy(m.data), 0.0, 1.0), stride=m.stride)
                for m in maps]
    out_fields = [FieldGrid(noisy(f.data), stride=f.stride) for f in fields]

    if cfg.occlusion is not None:
        if scene is None or skeleton is None:
            raise ValueError("occlusion needs the scene annotation and skeleton")
        limb_class = cfg.occlusion.limb_class
        parent, child = skeleton.limbs[limb_class]
        target = out_fields[limb_class]
        mask_vec = np.zeros((target.height, target.width, 2), dtype=np.float64)
        mask_cnt = np.zeros((target.height, target.width), dtype=np.int32)
        for idx in occluded_person_indices(cfg, len(scene.persons)):
            person = scene.persons[idx]
            a, b = person.joints[parent], person.joints[child]
            if a is None or b is None:
                continue
            _accel.limb_field_accumulate(
                mask_vec, mask_cnt, a.x, a.y, b.x, b.y,
                occlusion_half_width, target.stride)
        zeroed = target.data.copy()
        zeroed[mask_cnt > 0] = 0.0
        out_fields[limb_class] = FieldGrid(zeroed, stride=target.stride)
    return out_maps, out_fields
