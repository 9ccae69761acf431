"""Keypoint similarity scoring, average precision, and pipeline diagnostics.

Similarity between a predicted and an annotated pose is the visible-joint
mean of ``exp(-d^2 / (2 s^2 k^2))`` with per-joint falloff constants ``k``
and object scale ``s`` from the annotation box area. AP averages the area
under the precision-recall curve over the 10 similarity thresholds
0.50, 0.55, ..., 0.95, with predictions matched greedily in confidence
order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import BoundingBox, Pose, SceneAnnotation
from .parse import ParsedPose, pose_distance

# Benchmark-convention falloff constants (k = 2 * per-joint sigma) mapped
# onto the 14-joint skeleton; head top reuses the nose constant and the
# neck reuses the shoulder constant.
DEFAULT_JOINT_K = (
    0.158,  # right_shoulder
    0.144,  # right_elbow
    0.124,  # right_wrist
    0.158,  # left_shoulder
    0.144,  # left_elbow
    0.124,  # left_wrist
    0.214,  # right_hip
    0.174,  # right_knee
    0.178,  # right_ankle
    0.214,  # left_hip
    0.174,  # left_knee
    0.178,  # left_ankle
    0.052,  # head_top
    0.158,  # neck
)

OKS_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))


@dataclass(frozen=True)
class OksConfig:
    per_joint_k: tuple[float, ...] = DEFAULT_JOINT_K
    scale_mode: str = "box_area_sqrt"

    def __post_init__(self) -> None:
        if len(self.per_joint_k) != 14 or any(k <= 0 for k in self.per_joint_k):
            raise ValueError("need 14 positive falloff constants")
        if self.scale_mode != "box_area_sqrt":
            raise ValueError(f"unknown scale mode: {self.scale_mode}")


@dataclass(frozen=True)
class EvalReport:
    ap: float
    ap_per_threshold: tuple[float, ...]
    mean_oks: float
    matched: int
    missed: int
    spurious: int


@dataclass(frozen=True)
class DiagnosticsReport:
    duplicate_poses: int
    mean_joints_per_pose: float
    disconnected_joints: int


def oks(pred: Pose, gt: Pose, gt_box: BoundingBox, cfg: OksConfig = OksConfig()) -> float:
    """Scale-normalized keypoint similarity in [0, 1].

    Averaged over the visible ground-truth joints; a joint the prediction
    lacks contributes 0.
    """
    visible = gt.present_indices()
    if not visible:
        raise ValueError("ground-truth pose has no visible joints")
    s2 = gt_box.area()
    total = 0.0
    for i in visible:
        pj = pred.joints[i]
        if pj is None:
            continue
        gj = gt.joints[i]
        d2 = (pj.x - gj.x) ** 2 + (pj.y - gj.y) ** 2
        k = cfg.per_joint_k[i]
        total += math.exp(-d2 / (2.0 * s2 * k * k))
    return total / len(visible)


def _gt_box_for(scene: SceneAnnotation, person_idx: int) -> BoundingBox:
    if person_idx < len(scene.boxes):
        return scene.boxes[person_idx]
    x0, y0, x1, y1 = scene.persons[person_idx].joint_extent()
    return BoundingBox(x0, y0, max(x1, x0 + 1e-6), max(y1, y0 + 1e-6))


def _oks_matrix(preds: Sequence[Pose], scene: SceneAnnotation,
                cfg: OksConfig) -> list[list[float]]:
    return [
        [oks(p, scene.persons[g], _gt_box_for(scene, g), cfg)
         for g in range(len(scene.persons))]
        for p in preds
    ]


def _greedy_match(ranked: Sequence[tuple[int, int]],
                  matrices: Sequence[list[list[float]]],
                  n_gts: Sequence[int], threshold: float) -> list[Optional[int]]:
    """For globally ranked predictions (scene idx, pred idx), assign each to
    the unmatched ground truth of its scene with the highest similarity at
    or above the threshold. Returns the matched gt index per ranked entry."""
    taken: list[set[int]] = [set() for _ in n_gts]
    result: list[Optional[int]] = []
    for scene_idx, pred_idx in ranked:
        best_g = None
        best_val = -1.0
        for g in range(n_gts[scene_idx]):
            if g in taken[scene_idx]:
                continue
            val = matrices[scene_idx][pred_idx][g]
            if val >= threshold and val > best_val:
                best_val = val
                best_g = g
        if best_g is not None:
            taken[scene_idx].add(best_g)
        result.append(best_g)
    return result


def _ap_from_flags(tp_flags: Sequence[bool], total_gt: int) -> float:
    if total_gt == 0:
        raise ValueError("no ground-truth poses")
    if not tp_flags:
        return 0.0
    precisions = []
    recalls = []
    tp = 0
    for k, flag in enumerate(tp_flags):
        tp += int(flag)
        precisions.append(tp / (k + 1))
        recalls.append(tp / total_gt)
    # precision envelope from the right, area accumulated where recall rises
    for k in range(len(precisions) - 2, -1, -1):
        precisions[k] = max(precisions[k], precisions[k + 1])
    ap = 0.0
    prev_recall = 0.0
    for p, r in zip(precisions, recalls):
        if r > prev_recall:
            ap += (r - prev_recall) * p
            prev_recall = r
    return ap


def average_precision(pred_scenes: Sequence[Sequence[tuple[Pose, float]]],
                      gt_scenes: Sequence[SceneAnnotation],
                      cfg: OksConfig = OksConfig()) -> EvalReport:
    """Mean AP over the 10 similarity thresholds for aligned scene lists.

    ``pred_scenes[i]`` holds (pose, confidence) pairs for scene ``i``.
    Counts and the mean matched similarity are reported at the loosest
    threshold (0.50).
    """
    if len(pred_scenes) != len(gt_scenes):
        raise ValueError("prediction and ground-truth scene lists differ in length")
    total_gt = sum(len(s.persons) for s in gt_scenes)
    if total_gt == 0:
        raise ValueError("no ground-truth poses to evaluate against")

    matrices = [
        _oks_matrix([p for p, _ in preds], scene, cfg)
        for preds, scene in zip(pred_scenes, gt_scenes)
    ]
    n_gts = [len(s.persons) for s in gt_scenes]
    ranked = sorted(
        ((si, pi) for si, preds in enumerate(pred_scenes) for pi in range(len(preds))),
        key=lambda t: (-pred_scenes[t[0]][t[1]][1], t[0], t[1]),
    )

    aps = []
    matched = missed = spurious = 0
    mean_oks = 0.0
    for t_idx, thr in enumerate(OKS_THRESHOLDS):
        assignment = _greedy_match(ranked, matrices, n_gts, thr)
        flags = [g is not None for g in assignment]
        aps.append(_ap_from_flags(flags, total_gt))
        if t_idx == 0:
            matched = sum(flags)
            missed = total_gt - matched
            spurious = len(flags) - matched
            if matched:
                mean_oks = sum(
                    matrices[si][pi][g]
                    for (si, pi), g in zip(ranked, assignment) if g is not None
                ) / matched
    return EvalReport(
        ap=sum(aps) / len(aps),
        ap_per_threshold=tuple(aps),
        mean_oks=mean_oks,
        matched=matched,
        missed=missed,
        spurious=spurious,
    )


def pipeline_diagnostics(result: Sequence[ParsedPose], gt: SceneAnnotation,
                         joint_tolerance: float = 5.0,
                         cfg: OksConfig = OksConfig()) -> DiagnosticsReport:
    """Duplicate count, mean joints per pose, and the number of visible
    ground-truth joints with no predicted joint within tolerance."""
    duplicates = 0
    for j in range(len(result)):
        for i in range(j):
            if pose_distance(result[i].pose, result[j].pose) == 0.0:
                duplicates += 1
                break
    mean_joints = (
        sum(p.pose.n_present for p in result) / len(result) if result else 0.0
    )

    # greedily pair predictions with ground-truth persons by similarity
    pairs: dict[int, int] = {}
    if result and gt.persons:
        matrix = _oks_matrix([p.pose for p in result], gt, cfg)
        order = sorted(range(len(result)), key=lambda i: -result[i].confidence)
        taken: set[int] = set()
        for i in order:
            best_g, best_val = None, -1.0
            for g in range(len(gt.persons)):
                if g not in taken and matrix[i][g] > best_val:
                    best_g, best_val = g, matrix[i][g]
            if best_g is not None:
                pairs[best_g] = i
                taken.add(best_g)

    disconnected = 0
    tol2 = joint_tolerance * joint_tolerance
    for g, person in enumerate(gt.persons):
        pred = result[pairs[g]].pose if g in pairs else None
        for j in person.present_indices():
            pj = pred.joints[j] if pred is not None else None
            gj = person.joints[j]
            if pj is None or (pj.x - gj.x) ** 2 + (pj.y - gj.y) ** 2 > tol2:
                disconnected += 1
    return DiagnosticsReport(
        duplicate_poses=duplicates,
        mean_joints_per_pose=mean_joints,
        disconnected_joints=disconnected,
    )
