"""Fixed human skeleton, geometric primitives, and the dense grid type.

Everything here is immutable after construction and safe to share across
threads. Coordinates are continuous image pixels; grids store one value per
cell, with cell (ix, iy) sampling the image at ``((ix + 0.5) * stride,
(iy + 0.5) * stride)``. That cell-center convention is used consistently by
the encoder, the peak detector, and bilinear sampling, so a value written at
a cell center reads back exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

NUM_JOINTS = 14
NUM_LIMBS = 13

JOINT_NAMES = (
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_hip",
    "right_knee",
    "right_ankle",
    "left_hip",
    "left_knee",
    "left_ankle",
    "head_top",
    "neck",
)

NECK = 13

# Depth-first order from the neck: head first, then right arm, left arm,
# right leg, left leg. Processing limbs in this order guarantees a limb's
# parent joint was already reachable (root, or child of an earlier limb).
_LIMBS = (
    (13, 12),  # neck -> head_top
    (13, 0),   # neck -> right_shoulder
    (0, 1),    # right_shoulder -> right_elbow
    (1, 2),    # right_elbow -> right_wrist
    (13, 3),   # neck -> left_shoulder
    (3, 4),    # left_shoulder -> left_elbow
    (4, 5),    # left_elbow -> left_wrist
    (13, 6),   # neck -> right_hip
    (6, 7),    # right_hip -> right_knee
    (7, 8),    # right_knee -> right_ankle
    (13, 9),   # neck -> left_hip
    (9, 10),   # left_hip -> left_knee
    (10, 11),  # left_knee -> left_ankle
)


class Point2(NamedTuple):
    """A continuous 2D image location in pixels."""

    x: float
    y: float


@dataclass(frozen=True)
class Skeleton:
    """The 14-joint / 13-limb body tree rooted at the neck.

    ``limbs[c] = (parent, child)`` joint indices. The limb list is in
    depth-first order from the root, so iterating it in order never visits
    a limb before the limb that introduced its parent joint.
    """

    joints: tuple[str, ...]
    limbs: tuple[tuple[int, int], ...]
    root: int

    def __post_init__(self) -> None:
        if len(self.joints) != NUM_JOINTS or len(self.limbs) != NUM_LIMBS:
            raise ValueError("skeleton must have 14 joints and 13 limbs")
        children = [child for _, child in self.limbs]
        if sorted(children) != sorted(set(range(NUM_JOINTS)) - {self.root}):
            raise ValueError("limbs must form a tree: every non-root joint is a child exactly once")
        reachable = {self.root}
        for parent, child in self.limbs:
            if parent not in reachable:
                raise ValueError("limb list is not in depth-first order from the root")
            reachable.add(child)

    def limb_for_child(self, joint: int) -> Optional[int]:
        """Index of the limb whose child is ``joint`` (None for the root)."""
        for c, (_, child) in enumerate(self.limbs):
            if child == joint:
                return c
        return None


def canonical_skeleton() -> Skeleton:
    """The fixed skeleton used throughout: AI-Challenger 14-keypoint naming,
    limbs in the canonical depth-first order rooted at the neck."""
    return Skeleton(joints=JOINT_NAMES, limbs=_LIMBS, root=NECK)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel box with strictly positive extent."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate box: {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def area(self) -> float:
        return self.width * self.height

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


@dataclass(frozen=True)
class FieldGrid:
    """Dense 2D grid of scalars (shape ``(h, w)``) or 2-vectors
    (shape ``(h, w, 2)``), float32, at a fixed stride in pixels per cell."""

    data: np.ndarray
    stride: int = 1

    def __post_init__(self) -> None:
        if self.data.ndim == 2:
            pass
        elif self.data.ndim == 3 and self.data.shape[2] == 2:
            pass
        else:
            raise ValueError(f"grid data must be (h, w) or (h, w, 2), got {self.data.shape}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.data.dtype != np.float32:
            raise ValueError("grid data must be float32")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 2

    @staticmethod
    def zeros(width: int, height: int, channels: int = 1, stride: int = 1) -> "FieldGrid":
        shape = (height, width) if channels == 1 else (height, width, channels)
        return FieldGrid(np.zeros(shape, dtype=np.float32), stride=stride)

    def cell_center(self, ix: int, iy: int) -> Point2:
        return Point2((ix + 0.5) * self.stride, (iy + 0.5) * self.stride)


def grid_dims_for_image(image_width: int, image_height: int, stride: int) -> tuple[int, int]:
    """Grid (width, height) in cells covering an image at the given stride."""
    return (
        int(np.ceil(image_width / stride)),
        int(np.ceil(image_height / stride)),
    )


def grid_sample_bilinear(grid: FieldGrid, p: Point2) -> np.ndarray:
    """Bilinear sample of the grid at a continuous pixel location.

    Cell values live at cell centers; locations outside the grid extent clamp
    to the border cells. Returns a vector of ``grid.channels`` values.
    """
    u = p.x / grid.stride - 0.5
    v = p.y / grid.stride - 0.5
    i0 = int(np.floor(u))
    j0 = int(np.floor(v))
    fu = u - i0
    fv = v - j0
    w = grid.width
    h = grid.height
    i0c = min(max(i0, 0), w - 1)
    i1c = min(max(i0 + 1, 0), w - 1)
    j0c = min(max(j0, 0), h - 1)
    j1c = min(max(j0 + 1, 0), h - 1)
    d = grid.data
    out = (
        d[j0c, i0c] * (1.0 - fu) * (1.0 - fv)
        + d[j0c, i1c] * fu * (1.0 - fv)
        + d[j1c, i0c] * (1.0 - fu) * fv
        + d[j1c, i1c] * fu * fv
    )
    return np.atleast_1d(np.asarray(out, dtype=np.float64))


class PoseJoint(NamedTuple):
    """One detected or annotated joint: location, confidence, and (for
    decoded poses) the identity of the peak candidate it came from."""

    x: float
    y: float
    score: float
    candidate_id: Optional[int] = None


@dataclass(frozen=True)
class Pose:
    """Up to 14 joints; absent slots are None. ``source_box`` records the
    parse box for decoded poses and is None for annotations."""

    joints: tuple[Optional[PoseJoint], ...]
    source_box: Optional[BoundingBox] = None

    def __post_init__(self) -> None:
        if len(self.joints) != NUM_JOINTS:
            raise ValueError("a pose has exactly 14 joint slots")
        if self.n_present == 0:
            raise ValueError("a pose must have at least one joint")
        for j in self.joints:
            if j is not None and not (0.0 <= j.score <= 1.0):
                raise ValueError(f"joint score outside [0, 1]: {j}")

    @property
    def n_present(self) -> int:
        return sum(1 for j in self.joints if j is not None)

    def present_indices(self) -> list[int]:
        return [i for i, j in enumerate(self.joints) if j is not None]

    def joint_extent(self) -> tuple[float, float, float, float]:
        """(x_min, y_min, x_max, y_max) of the present joints (may be degenerate)."""
        xs = [j.x for j in self.joints if j is not None]
        ys = [j.y for j in self.joints if j is not None]
        return min(xs), min(ys), max(xs), max(ys)

    @staticmethod
    def from_triples(triples: Sequence[Sequence[float]]) -> "Pose":
        """Build an annotation pose from 14 ``[x, y, visibility]`` triples."""
        if len(triples) != NUM_JOINTS:
            raise ValueError("expected 14 [x, y, v] triples")
        joints: list[Optional[PoseJoint]] = []
        for x, y, vis in triples:
            joints.append(PoseJoint(float(x), float(y), 1.0) if vis else None)
        return Pose(joints=tuple(joints))

    def to_triples(self) -> list[list[float]]:
        return [
            [j.x, j.y, 1.0] if j is not None else [0.0, 0.0, 0.0]
            for j in self.joints
        ]


@dataclass(frozen=True)
class SceneAnnotation:
    """Image dimensions plus ground-truth persons and their boxes.

    ``boxes`` is aligned with ``persons`` when produced by the generator;
    detector dumps may carry a different number of boxes.
    """

    image_width: int
    image_height: int
    persons: tuple[Pose, ...] = ()
    boxes: tuple[BoundingBox, ...] = ()
    box_scores: tuple[float, ...] = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("image dimensions must be positive")
