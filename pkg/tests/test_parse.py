import numpy as np
import pytest

from posebox import (
    BoundingBox,
    CandidateConnection,
    CandidateJoint,
    DetectConfig,
    EncoderConfig,
    ParseConfig,
    ParsedPose,
    Point2,
    Pose,
    PoseJoint,
    complete_pose,
    encode_confidence_maps,
    encode_direction_fields,
    extend_box,
    oks,
    parse_box,
    parse_scene,
    pose_confidence,
    pose_distance,
    pose_nms,
    score_all_connections,
)
from posebox.synth import CounterRng
from conftest import make_scene

PCFG = ParseConfig()
DCFG = DetectConfig()

# A repeatable articulated figure with sensible limb lengths, keyed to a
# center so multi-person scenes are easy to lay out.
FIGURE = {
    13: (0.0, 0.0), 12: (0.0, -18.0),
    0: (-14.0, 4.0), 1: (-17.0, 22.0), 2: (-19.0, 40.0),
    3: (14.0, 4.0), 4: (17.0, 22.0), 5: (19.0, 40.0),
    6: (-8.0, 42.0), 7: (-10.0, 66.0), 8: (-10.0, 89.0),
    9: (8.0, 42.0), 10: (10.0, 66.0), 11: (10.0, 89.0),
}


def figure_at(cx, cy, wobble=0.0, rng=None):
    out = {}
    for j, (dx, dy) in FIGURE.items():
        jx = cx + dx + (rng.uniform(-wobble, wobble) if rng else 0.0)
        jy = cy + dy + (rng.uniform(-wobble, wobble) if rng else 0.0)
        out[j] = (jx, jy)
    return out


def encode_and_decode_inputs(scene, skeleton, enc=EncoderConfig()):
    from posebox import detect_peaks
    maps = encode_confidence_maps(scene, enc)
    fields = encode_direction_fields(scene, enc, skeleton)
    candidates = []
    for j, m in enumerate(maps):
        candidates.extend(detect_peaks(m, j, DCFG, start_id=len(candidates)))
    connections = score_all_connections(candidates, fields, skeleton, DCFG)
    return maps, fields, candidates, connections


def pose_with(slots, box=None):
    joints = [None] * 14
    for j, (x, y, score, cid) in slots.items():
        joints[j] = PoseJoint(x, y, score, candidate_id=cid)
    return Pose(joints=tuple(joints), source_box=box)


def full_pose(cid_base, box=None, score=1.0):
    return pose_with(
        {j: (10.0 * j + 5, 20.0 + j, score, cid_base + j) for j in range(14)}, box)


class TestParseBox:
    def test_empty_box(self, skeleton):
        box = BoundingBox(0, 0, 10, 10)
        assert parse_box(box, [], [], skeleton, PCFG) == []

    def test_round_trip_single_person(self, skeleton):
        scene = make_scene([figure_at(60.5, 40.5)], width=130, height=150)
        _, _, candidates, connections = encode_and_decode_inputs(scene, skeleton)
        box = extend_box(scene.boxes[0], 130, 150, 0.10)
        poses = parse_box(box, candidates, connections, skeleton, PCFG)
        assert len(poses) == 1
        pose = poses[0]
        assert pose.n_present == 14
        for j in range(14):
            gt = scene.persons[0].joints[j]
            assert abs(pose.joints[j].x - gt.x) <= 1.0
            assert abs(pose.joints[j].y - gt.y) <= 1.0

    def test_one_box_two_persons(self, skeleton):
        scene = make_scene([figure_at(50.5, 40.5), figure_at(200.5, 40.5)],
                           width=260, height=150)
        _, _, candidates, connections = encode_and_decode_inputs(scene, skeleton)
        box = BoundingBox(0, 0, 260, 150)
        poses = parse_box(box, candidates, connections, skeleton, PCFG)
        assert len(poses) == 2
        ids = [frozenset(j.candidate_id for j in p.joints if j) for p in poses]
        assert not (ids[0] & ids[1])
        assert all(p.n_present == 14 for p in poses)

    def test_no_candidate_reused_within_box(self, skeleton):
        scene = make_scene([figure_at(50.5, 40.5), figure_at(110.5, 45.5)],
                           width=240, height=160)
        _, _, candidates, connections = encode_and_decode_inputs(scene, skeleton)
        box = BoundingBox(0, 0, 240, 160)
        poses = parse_box(box, candidates, connections, skeleton, PCFG)
        seen = set()
        for p in poses:
            for j in p.joints:
                if j is not None:
                    assert j.candidate_id not in seen
                    seen.add(j.candidate_id)

    def test_candidates_outside_box_excluded(self, skeleton):
        scene = make_scene([figure_at(60.5, 40.5)], width=300, height=160)
        _, _, candidates, connections = encode_and_decode_inputs(scene, skeleton)
        box = BoundingBox(200, 10, 290, 150)  # misses the person entirely
        assert parse_box(box, candidates, connections, skeleton, PCFG) == []

    def test_min_connection_score_floor(self, skeleton):
        # anti-aligned field: scores are negative, nothing assembles
        from conftest import constant_field
        cands = [
            CandidateJoint(0, 13, Point2(20.5, 20.5), 0.9),
            CandidateJoint(1, 12, Point2(20.5, 8.5), 0.8),
        ]
        fields = [constant_field((0.0, 1.0), 60, 60) for _ in range(13)]  # head limb points -y
        conns = score_all_connections(cands, fields, skeleton, DCFG)
        box = BoundingBox(0, 0, 59, 59)
        assert parse_box(box, cands, conns, skeleton, PCFG) == []


class TestPoseConfidence:
    def test_perfect_pose_is_one(self):
        box = BoundingBox(0, 0, 100, 100)
        pose = pose_with({0: (0, 0, 1.0, 0), 1: (100, 0, 1.0, 1), 2: (100, 100, 1.0, 2)}, box)
        conns = [CandidateConnection(0, 0, 1, 1.0), CandidateConnection(1, 1, 2, 1.0)]
        assert pose_confidence(pose, conns, box, PCFG) == pytest.approx(1.0)

    def test_single_joint_zero_scores(self):
        box = BoundingBox(0, 0, 100, 100)
        pose = pose_with({0: (50, 50, 0.0, 0)}, box)
        assert pose_confidence(pose, [], box, PCFG) == pytest.approx(0.0)

    def test_mixed_terms(self):
        box = BoundingBox(0, 0, 100, 100)
        # extent 100 x 50 -> ratio 0.5
        pose = pose_with({0: (0, 0, 0.5, 0), 1: (100, 0, 0.5, 1), 2: (100, 50, 0.5, 2)}, box)
        conns = [CandidateConnection(0, 0, 1, 0.5)]
        assert pose_confidence(pose, conns, box, PCFG) == pytest.approx(0.5)

    def test_area_ratio_capped_at_one(self):
        box = BoundingBox(10, 10, 20, 20)
        pose = pose_with({0: (5, 5, 1.0, 0), 1: (25, 5, 1.0, 1), 2: (25, 25, 1.0, 2)}, box)
        conf = pose_confidence(pose, [CandidateConnection(0, 0, 1, 1.0)], box, PCFG)
        assert conf <= 1.0

    def test_all_limb_slots_averaging_flag(self):
        cfg = ParseConfig(connection_mean_over_all_limbs=True)
        box = BoundingBox(0, 0, 100, 100)
        pose = pose_with({0: (0, 0, 1.0, 0), 1: (100, 0, 1.0, 1), 2: (100, 100, 1.0, 2)}, box)
        conns = [CandidateConnection(0, 0, 1, 1.0)]
        expected = 0.2 * 1.0 + 0.2 * (1.0 / 13.0) + 0.6 * 1.0
        assert pose_confidence(pose, conns, box, cfg) == pytest.approx(expected)


class TestPoseDistance:
    def test_identical_is_zero(self):
        a = full_pose(0)
        assert pose_distance(a, a) == 0.0

    def test_disjoint_ids_is_one(self):
        assert pose_distance(full_pose(0), full_pose(100)) == 1.0

    def test_half_matching(self):
        a = full_pose(0)
        slots = {j: (10.0 * j + 5, 20.0 + j, 1.0, j if j < 7 else 100 + j)
                 for j in range(14)}
        b = pose_with(slots)
        assert pose_distance(a, b) == 0.5

    def test_presence_mismatch_counts(self):
        a = full_pose(0)
        b = pose_with({j: (10.0 * j + 5, 20.0 + j, 1.0, j) for j in range(7)})
        assert pose_distance(a, b) == 0.5  # 7 slots differ / max(14, 7)

    def test_symmetry_and_range(self):
        rng = CounterRng(9)
        for _ in range(200):
            def rand_pose():
                n = rng.randint(1, 14)
                chosen = sorted({rng.randint(0, 13) for _ in range(n)})
                return pose_with({j: (rng.uniform(0, 50), rng.uniform(0, 50), 1.0,
                                      rng.randint(0, 25)) for j in chosen})
            a, b = rand_pose(), rand_pose()
            d_ab = pose_distance(a, b)
            assert d_ab == pose_distance(b, a)
            assert 0.0 <= d_ab <= 14.0 / max(a.n_present, b.n_present)
            assert (d_ab == 0.0) == (
                {j: a.joints[j].candidate_id for j in a.present_indices()}
                == {j: b.joints[j].candidate_id for j in b.present_indices()})

    def test_annotation_space_tolerance(self):
        a = pose_with({0: (10.0, 10.0, 1.0, None)})
        b = pose_with({0: (10.6, 10.6, 1.0, None)})
        c = pose_with({0: (12.0, 10.0, 1.0, None)})
        assert pose_distance(a, b) == 0.0   # within 1 px
        assert pose_distance(a, c) == 1.0   # 2 px apart


class TestPoseNms:
    def test_identical_pair_collapses(self):
        poses = [ParsedPose(full_pose(0), 0.9, 0), ParsedPose(full_pose(0), 0.8, 1)]
        out = pose_nms(poses, PCFG)
        assert len(out) == 1 and out[0].confidence == 0.9

    def test_distant_poses_in_distinct_boxes_survive(self):
        poses = [ParsedPose(full_pose(0), 0.9, 0), ParsedPose(full_pose(100), 0.8, 1)]
        assert len(pose_nms(poses, PCFG)) == 2

    def test_three_pose_trace(self):
        a = ParsedPose(full_pose(0), 0.9, 0)
        b = ParsedPose(full_pose(0), 0.8, 1)   # duplicate of a
        c = ParsedPose(full_pose(100), 0.7, 2)
        out = pose_nms([a, b, c], PCFG)
        assert [p.confidence for p in out] == [0.9, 0.7]

    def test_per_box_uniqueness(self):
        a = ParsedPose(full_pose(0), 0.9, 0)
        b = ParsedPose(full_pose(100), 0.8, 0)  # distinct pose, same box
        out = pose_nms([a, b], PCFG)
        assert len(out) == 1 and out[0].confidence == 0.9

    def _random_pose_set(self, rng):
        poses = []
        for _ in range(rng.randint(1, 8)):
            n = rng.randint(1, 14)
            chosen = sorted({rng.randint(0, 13) for _ in range(n)})
            pose = pose_with({j: (rng.uniform(0, 100), rng.uniform(0, 100), 1.0,
                                  rng.randint(0, 30)) for j in chosen})
            poses.append(ParsedPose(pose, round(rng.uniform(0, 1), 3), rng.randint(0, 3)))
        return poses

    def test_idempotent_and_postconditions(self):
        rng = CounterRng(123)
        for _ in range(300):
            poses = self._random_pose_set(rng)
            out = pose_nms(poses, PCFG)
            again = pose_nms(out, PCFG)
            assert [id(p) for p in again] == [id(p) for p in out] or again == out
            for i in range(len(out)):
                for j in range(i + 1, len(out)):
                    assert pose_distance(out[i].pose, out[j].pose) > PCFG.elimination_threshold
            boxes = [p.box_index for p in out]
            assert len(boxes) == len(set(boxes))
            confs = [p.confidence for p in out]
            assert confs == sorted(confs, reverse=True)


class TestCompletePose:
    def _candidates(self):
        return [
            CandidateJoint(50, 5, Point2(30.5, 40.5), 0.9),   # left wrist
            CandidateJoint(51, 5, Point2(32.5, 42.5), 0.4),   # weaker left wrist
            CandidateJoint(52, 7, Point2(20.5, 70.5), 0.05),  # below completion floor
        ]

    def test_complete_pose_unchanged(self):
        box = BoundingBox(0, 0, 100, 100)
        pose = full_pose(0, box)
        out = complete_pose(pose, self._candidates(), set(), PCFG)
        assert out == pose

    def test_adopts_best_unassigned(self):
        box = BoundingBox(0, 0, 100, 100)
        slots = {j: (10.0 + j, 20.0 + j, 1.0, j) for j in range(14) if j != 5}
        pose = pose_with(slots, box)
        assigned = {j for j in range(14) if j != 5}
        out = complete_pose(pose, self._candidates(), assigned, PCFG)
        assert out.joints[5] is not None
        assert out.joints[5].candidate_id == 50
        assert 50 in assigned

    def test_skips_assigned_takes_next(self):
        box = BoundingBox(0, 0, 100, 100)
        pose = pose_with({j: (10.0 + j, 20.0 + j, 1.0, j) for j in range(14) if j != 5}, box)
        assigned = {50}
        out = complete_pose(pose, self._candidates(), assigned, PCFG)
        assert out.joints[5].candidate_id == 51

    def test_exhausted_pool_leaves_missing(self):
        box = BoundingBox(0, 0, 100, 100)
        pose = pose_with({j: (10.0 + j, 20.0 + j, 1.0, j) for j in range(14) if j != 5}, box)
        assigned = {50, 51}
        out = complete_pose(pose, self._candidates(), assigned, PCFG)
        assert out.joints[5] is None

    def test_score_floor_respected(self):
        box = BoundingBox(0, 0, 100, 100)
        pose = pose_with({j: (10.0 + j, 20.0 + j, 1.0, j) for j in range(14) if j != 7}, box)
        out = complete_pose(pose, self._candidates(), set(), PCFG)
        assert out.joints[7] is None  # only candidate scores 0.05 < 0.1

    def test_never_moves_existing_joints(self):
        box = BoundingBox(0, 0, 100, 100)
        pose = pose_with({j: (10.0 + j, 20.0 + j, 1.0, j) for j in range(14) if j != 5}, box)
        out = complete_pose(pose, self._candidates(), set(), PCFG)
        for j in range(14):
            if j != 5:
                assert out.joints[j] == pose.joints[j]

    def test_requires_source_box(self):
        pose = pose_with({0: (1, 1, 1.0, 0)})
        with pytest.raises(ValueError):
            complete_pose(pose, [], set(), PCFG)


class TestParseScene:
    def make_inputs(self, skeleton, centers, width=640, height=360):
        scene = make_scene([figure_at(cx, cy) for cx, cy in centers],
                           width=width, height=height)
        enc = EncoderConfig()
        maps = encode_confidence_maps(scene, enc)
        fields = encode_direction_fields(scene, enc, skeleton)
        boxes = [extend_box(b, width, height, 0.10) for b in scene.boxes]
        return scene, maps, fields, boxes

    def test_empty_boxes(self, skeleton):
        scene, maps, fields, _ = self.make_inputs(skeleton, [(60.5, 40.5)])
        assert parse_scene([], maps, fields, skeleton, DCFG, PCFG) == []

    def test_three_person_round_trip(self, skeleton):
        centers = [(80.5, 60.5), (300.5, 80.5), (520.5, 100.5)]
        scene, maps, fields, boxes = self.make_inputs(skeleton, centers)
        results = parse_scene(boxes, maps, fields, skeleton, DCFG, PCFG)
        assert len(results) == 3
        for gi, gt in enumerate(scene.persons):
            best = max(oks(r.pose, gt, scene.boxes[gi]) for r in results)
            assert best >= 0.95

    def test_duplicated_boxes_still_unique_poses(self, skeleton):
        centers = [(80.5, 60.5), (300.5, 80.5), (520.5, 100.5)]
        scene, maps, fields, boxes = self.make_inputs(skeleton, centers)
        results = parse_scene(boxes + boxes, maps, fields, skeleton, DCFG, PCFG)
        assert len(results) == 3

    def test_no_nms_keeps_duplicates(self, skeleton):
        centers = [(80.5, 60.5)]
        scene, maps, fields, boxes = self.make_inputs(skeleton, centers)
        results = parse_scene(boxes + boxes, maps, fields, skeleton, DCFG, PCFG,
                              apply_nms=False)
        assert len(results) == 2

    def test_round_trip_at_stride_two(self, skeleton):
        scene = make_scene([figure_at(61.0, 41.0)], width=141, height=161)
        enc = EncoderConfig(stride=2)
        maps = encode_confidence_maps(scene, enc)
        fields = encode_direction_fields(scene, enc, skeleton)
        assert maps[0].data.shape == (81, 71)  # ceil of image dims / stride
        boxes = [extend_box(scene.boxes[0], 141, 161, 0.10)]
        results = parse_scene(boxes, maps, fields, skeleton, DCFG, PCFG)
        assert len(results) == 1
        pose = results[0].pose
        assert pose.n_present == 14
        for j in range(14):
            gt = scene.persons[0].joints[j]
            err = ((pose.joints[j].x - gt.x) ** 2 + (pose.joints[j].y - gt.y) ** 2) ** 0.5
            assert err <= 2 * 0.75  # within a (diagonal) half cell at stride 2

    def test_box_permutation_up_to_ordering(self, skeleton):
        centers = [(80.5, 60.5), (300.5, 80.5), (520.5, 100.5)]
        scene, maps, fields, boxes = self.make_inputs(skeleton, centers)

        def signature(results):
            return sorted(
                (tuple(sorted((j, p.pose.joints[j].candidate_id)
                              for j in p.pose.present_indices())),
                 round(p.confidence, 9))
                for p in results)

        a = parse_scene(boxes, maps, fields, skeleton, DCFG, PCFG)
        b = parse_scene(boxes[::-1], maps, fields, skeleton, DCFG, PCFG)
        assert signature(a) == signature(b)
