import numpy as np
import pytest

from posebox import FieldGrid, Pose, PoseJoint, SceneAnnotation, canonical_skeleton


@pytest.fixture(scope="session")
def skeleton():
    return canonical_skeleton()


def make_scene(person_joint_lists, width=120, height=120, boxes=None):
    """Scene from explicit per-person joint dicts {joint_class: (x, y)}."""
    persons = []
    computed_boxes = []
    for slots in person_joint_lists:
        joints = [None] * 14
        for j, (x, y) in slots.items():
            joints[j] = PoseJoint(float(x), float(y), 1.0)
        pose = Pose(joints=tuple(joints))
        persons.append(pose)
        x0, y0, x1, y1 = pose.joint_extent()
        from posebox import BoundingBox
        computed_boxes.append(BoundingBox(x0, y0, max(x1, x0 + 1e-3), max(y1, y0 + 1e-3)))
    return SceneAnnotation(
        image_width=width, image_height=height,
        persons=tuple(persons),
        boxes=tuple(boxes) if boxes is not None else tuple(computed_boxes),
    )


def constant_field(value_xy, width=40, height=40, stride=1):
    data = np.zeros((height, width, 2), dtype=np.float32)
    data[..., 0] = value_xy[0]
    data[..., 1] = value_xy[1]
    return FieldGrid(data, stride=stride)
