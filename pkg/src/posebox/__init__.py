"""Multi-person pose field codec, box-constrained parser, and evaluation.

The pipeline: annotated scenes are encoded into per-joint confidence maps
and per-limb direction fields; predicted (or synthesized) maps are decoded
back into per-person poses under bounding-box constraints with pose NMS
and completion; results are scored with keypoint-similarity AP. A seeded
synthetic-scene generator makes the whole loop verifiable end to end.
"""

from ._accel import NUMBA_ACTIVE
from .codec import (
    EncoderConfig,
    LossWeights,
    background_map,
    encode_confidence_maps,
    encode_direction_fields,
    supervision_loss,
)
from .core import (
    NUM_JOINTS,
    NUM_LIMBS,
    BoundingBox,
    FieldGrid,
    Point2,
    Pose,
    PoseJoint,
    SceneAnnotation,
    Skeleton,
    canonical_skeleton,
    grid_sample_bilinear,
)
from .detect import (
    CandidateConnection,
    CandidateJoint,
    DetectConfig,
    connection_score,
    detect_peaks,
    extend_box,
    fuse_scales,
    score_all_connections,
)
from .evaluate import (
    DiagnosticsReport,
    EvalReport,
    OksConfig,
    average_precision,
    oks,
    pipeline_diagnostics,
)
from .parse import (
    ParseConfig,
    ParsedPose,
    complete_pose,
    parse_box,
    parse_scene,
    pose_confidence,
    pose_distance,
    pose_nms,
)
from .synth import (
    CounterRng,
    OcclusionSpec,
    SynthConfig,
    generate_scene,
    perturb_fields,
    scene_seed,
    with_seed,
)

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ACTIVE",
    "NUM_JOINTS",
    "NUM_LIMBS",
    "BoundingBox",
    "CandidateConnection",
    "CandidateJoint",
    "CounterRng",
    "DetectConfig",
    "DiagnosticsReport",
    "EncoderConfig",
    "EvalReport",
    "FieldGrid",
    "LossWeights",
    "OcclusionSpec",
    "OksConfig",
    "ParseConfig",
    "ParsedPose",
    "Point2",
    "Pose",
    "PoseJoint",
    "SceneAnnotation",
    "Skeleton",
    "SynthConfig",
    "average_precision",
    "background_map",
    "canonical_skeleton",
    "complete_pose",
    "connection_score",
    "detect_peaks",
    "encode_confidence_maps",
    "encode_direction_fields",
    "extend_box",
    "fuse_scales",
    "generate_scene",
    "grid_sample_bilinear",
    "oks",
    "parse_box",
    "parse_scene",
    "perturb_fields",
    "pipeline_diagnostics",
    "pose_confidence",
    "pose_distance",
    "pose_nms",
    "scene_seed",
    "score_all_connections",
    "supervision_loss",
    "with_seed",
]
