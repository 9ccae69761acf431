"""Box-constrained greedy pose assembly, pose NMS, and pose completion.

Within each bounding box, limbs are matched greedily in depth-first tree
order: for a limb class, candidate connections are accepted in decreasing
score order as long as they do not reuse a joint already consumed by an
accepted connection of that limb. Accepted connections grow per-person
joint lists keyed by candidate identity. Redundant poses across boxes are
removed by a confidence-ordered elimination on the unmatched-joint-fraction
distance, followed by a per-box uniqueness pass; finally, missing joints of
the survivors are filled from the unclaimed peak candidates inside each
pose's box.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .core import NUM_JOINTS, BoundingBox, FieldGrid, Pose, PoseJoint, Skeleton
from .detect import (
    CandidateConnection,
    CandidateJoint,
    DetectConfig,
    detect_peaks,
    score_all_connections,
)


@dataclass(frozen=True)
class ParseConfig:
    """Assembly and de-duplication parameters.

    joint_weight / connection_weight / coverage_weight: pose confidence
        mix of mean joint score, mean connection score, and the area ratio
        of the pose's joint extent to its box (must sum to 1).
    elimination_threshold: poses whose distance to a more confident pose is
        at or below this fraction of unmatched joints are removed.
    min_connection_score: floor below which a candidate connection is never
        accepted (keeps anti-aligned noise from assembling poses).
    completion_min_score: minimum peak score a candidate needs to be
        adopted for a missing joint.
    connection_mean_over_all_limbs: average the connection term over all 13
        limb slots (absent = 0) instead of over accepted connections only.
    """

    joint_weight: float = 0.2
    connection_weight: float = 0.2
    coverage_weight: float = 0.6
    elimination_threshold: float = 0.5
    min_connection_score: float = 0.05
    completion_min_score: float = 0.1
    connection_mean_over_all_limbs: bool = False

    def __post_init__(self) -> None:
        total = self.joint_weight + self.connection_weight + self.coverage_weight
        if abs(total - 1.0) > 1e-9:
            raise ValueError("confidence weights must sum to 1")
        if not (0.0 <= self.elimination_threshold <= 1.0):
            raise ValueError("elimination threshold must be in [0, 1]")


@dataclass(frozen=True)
class ParsedPose:
    pose: Pose
    confidence: float
    box_index: int


def parse_box(box: BoundingBox, candidates: Sequence[CandidateJoint],
              connections: Sequence[CandidateConnection],
              skeleton: Skeleton, cfg: ParseConfig) -> list[Pose]:
    """Assemble poses from the candidates inside one (already extended) box.

    May return several poses: disjoint sub-trees stay separate, and a box
    covering several persons yields one pose each.
    """
    inside = {c.id: c for c in candidates if box.contains(c.location.x, c.location.y)}
    by_limb: dict[int, list[CandidateConnection]] = {}
    for conn in connections:
        if conn.start in inside and conn.end in inside:
            by_limb.setdefault(conn.limb_class, []).append(conn)

    # person joint lists: candidate id -> person index, and per person a
    # slot map joint_class -> candidate id
    person_of: dict[int, int] = {}
    persons: list[dict[int, int]] = []

    for limb_class in range(len(skeleton.limbs)):
        pool = by_limb.get(limb_class, [])
        accepted: list[CandidateConnection] = []
        used_start: set[int] = set()
        used_end: set[int] = set()
        for conn in pool:  # already sorted by score desc, ids asc
            if conn.score < cfg.min_connection_score:
                continue
            if conn.start in used_start or conn.end in used_end:
                continue
            accepted.append(conn)
            used_start.add(conn.start)
            used_end.add(conn.end)
        parent_class, child_class = skeleton.limbs[limb_class]
        for conn in accepted:
            # Depth-first limb order makes a child joint impossible to have
            # been placed before its own incoming limb is processed.
            assert conn.end not in person_of, "child candidate already assigned"
            if conn.start not in person_of:
                persons.append({parent_class: conn.start, child_class: conn.end})
                idx = len(persons) - 1
                person_of[conn.start] = idx
                person_of[conn.end] = idx
            else:
                idx = person_of[conn.start]
                persons[idx][child_class] = conn.end
                person_of[conn.end] = idx

    poses = []
    for slots in persons:
        joints: list[Optional[PoseJoint]] = [None] * NUM_JOINTS
        for joint_class, cand_id in slots.items():
            c = inside[cand_id]
            joints[joint_class] = PoseJoint(c.location.x, c.location.y,
                                            min(1.0, c.score), candidate_id=c.id)
        poses.append(Pose(joints=tuple(joints), source_box=box))
    return poses


def pose_confidence(pose: Pose, connections_used: Sequence[CandidateConnection],
                    box: BoundingBox, cfg: ParseConfig) -> float:
    """Weighted mix of mean joint score, mean connection score, and the
    fraction of the box covered by the pose's joint extent.

    A single-joint pose has a zero-area extent and no connection term. The
    area ratio is capped at 1 so decode quantization at a box edge cannot
    push the confidence above 1.
    """
    present = [j for j in pose.joints if j is not None]
    if not present:
        raise ValueError("pose has no joints")
    s_joints = sum(j.score for j in present) / len(present)
    if cfg.connection_mean_over_all_limbs:
        s_conns = sum(c.score for c in connections_used) / 13.0
    elif connections_used:
        s_conns = sum(c.score for c in connections_used) / len(connections_used)
    else:
        s_conns = 0.0
    x0, y0, x1, y1 = pose.joint_extent()
    ratio = min(1.0, (x1 - x0) * (y1 - y0) / box.area())
    return (cfg.joint_weight * s_joints
            + cfg.connection_weight * s_conns
            + cfg.coverage_weight * ratio)


def _slots_match(a: Optional[PoseJoint], b: Optional[PoseJoint]) -> bool:
    if a is None or b is None:
        return False
    if a.candidate_id is not None and b.candidate_id is not None:
        return a.candidate_id == b.candidate_id
    # annotation-space poses carry no candidate identity; fall back to a
    # 1-pixel location tolerance
    return (a.x - b.x) ** 2 + (a.y - b.y) ** 2 <= 1.0


def pose_distance(a: Pose, b: Pose) -> float:
    """Fraction of unmatched joint slots, normalized by the larger joint
    count. Slots absent on both sides do not count as differing."""
    n_a = a.n_present
    n_b = b.n_present
    if n_a == 0 and n_b == 0:
        raise ValueError("cannot compare two empty poses")
    differing = 0
    for ja, jb in zip(a.joints, b.joints):
        if ja is None and jb is None:
            continue
        if not _slots_match(ja, jb):
            differing += 1
    return differing / max(n_a, n_b)


def pose_nms(poses: Sequence[ParsedPose], cfg: ParseConfig) -> list[ParsedPose]:
    """Confidence-ordered elimination of redundant poses.

    Repeatedly the most confident surviving pose becomes the reference and
    every other survivor within the elimination threshold is dropped; then
    at most one pose is kept per box. Output is sorted by confidence
    descending (ties: box index, then input order).
    """
    order = sorted(range(len(poses)),
                   key=lambda i: (-poses[i].confidence, poses[i].box_index, i))
    eliminated = [False] * len(poses)
    for ref_pos, i in enumerate(order):
        if eliminated[i]:
            continue
        for j in order[ref_pos + 1:]:
            if eliminated[j]:
                continue
            if pose_distance(poses[i].pose, poses[j].pose) <= cfg.elimination_threshold:
                eliminated[j] = True
    best_in_box: dict[int, int] = {}
    for i in order:
        if not eliminated[i] and poses[i].box_index not in best_in_box:
            best_in_box[poses[i].box_index] = i
    keep = sorted(best_in_box.values(),
                  key=lambda i: (-poses[i].confidence, poses[i].box_index, i))
    return [poses[i] for i in keep]


def complete_pose(pose: Pose, candidates: Sequence[CandidateJoint],
                  assigned_candidate_ids: set[int], cfg: ParseConfig) -> Pose:
    """Fill each missing joint slot with the best unclaimed candidate of
    that class inside the pose's box.

    Candidates are tried in decreasing score order (id ascending on ties);
    ids already held by other poses are skipped, and adopted ids are added
    to ``assigned_candidate_ids``. Present joints are never touched.
    """
    if pose.source_box is None:
        raise ValueError("pose completion needs a source box")
    box = pose.source_box
    by_class: dict[int, list[CandidateJoint]] = {}
    for c in candidates:
        if box.contains(c.location.x, c.location.y):
            by_class.setdefault(c.joint_class, []).append(c)
    joints = list(pose.joints)
    for joint_class in range(NUM_JOINTS):
        if joints[joint_class] is not None:
            continue
        pool = sorted(by_class.get(joint_class, []), key=lambda c: (-c.score, c.id))
        for c in pool:
            if c.id in assigned_candidate_ids or c.score < cfg.completion_min_score:
                continue
            joints[joint_class] = PoseJoint(c.location.x, c.location.y,
                                            min(1.0, c.score), candidate_id=c.id)
            assigned_candidate_ids.add(c.id)
            break
    return Pose(joints=tuple(joints), source_box=pose.source_box)


def _connections_of_pose(pose: Pose, skeleton: Skeleton,
                         score_index: dict[tuple[int, int, int], CandidateConnection],
                         ) -> list[CandidateConnection]:
    used = []
    for limb_class, (parent, child) in enumerate(skeleton.limbs):
        a = pose.joints[parent]
        b = pose.joints[child]
        if a is None or b is None or a.candidate_id is None or b.candidate_id is None:
            continue
        conn = score_index.get((limb_class, a.candidate_id, b.candidate_id))
        if conn is not None:
            used.append(conn)
    return used


def parse_scene(boxes: Sequence[BoundingBox], maps: Sequence[FieldGrid],
                fields: Sequence[FieldGrid], skeleton: Skeleton,
                detect_cfg: DetectConfig, parse_cfg: ParseConfig,
                apply_nms: bool = True, apply_completion: bool = True,
                ) -> list[ParsedPose]:
    """Full decode: global peak detection, connection scoring, per-box
    assembly, confidence scoring, pose NMS, and completion.

    Boxes must already be extended. The NMS and completion stages can be
    switched off independently to measure their contribution.
    """
    candidates: list[CandidateJoint] = []
    for joint_class, grid in enumerate(maps):
        candidates.extend(
            detect_peaks(grid, joint_class, detect_cfg, start_id=len(candidates)))
    connections = score_all_connections(candidates, fields, skeleton, detect_cfg)
    score_index = {(c.limb_class, c.start, c.end): c for c in connections}

    parsed: list[ParsedPose] = []
    for box_index, box in enumerate(boxes):
        for pose in parse_box(box, candidates, connections, skeleton, parse_cfg):
            used = _connections_of_pose(pose, skeleton, score_index)
            conf = pose_confidence(pose, used, box, parse_cfg)
            parsed.append(ParsedPose(pose=pose, confidence=conf, box_index=box_index))

    if apply_nms:
        parsed = pose_nms(parsed, parse_cfg)
    else:
        parsed = sorted(parsed,
                        key=lambda p: (-p.confidence, p.box_index))
    if apply_completion:
        assigned: set[int] = set()
        for p in parsed:
            for j in p.pose.joints:
                if j is not None and j.candidate_id is not None:
                    assigned.add(j.candidate_id)
        completed = []
        for p in parsed:
            filled = complete_pose(p.pose, candidates, assigned, parse_cfg)
            completed.append(ParsedPose(pose=filled, confidence=p.confidence,
                                        box_index=p.box_index))
        parsed = completed
    return parsed
