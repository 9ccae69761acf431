"""On-disk formats: the PFT1 binary tensor container and JSON scene files.

A tensor file is ``b"PFT1"``, a little-endian uint32 rank, that many
little-endian uint32 dimensions, then the row-major float32 payload.
Scene files are JSON documents with image dimensions, persons as 14
``[x, y, visibility]`` triples, boxes as ``[x_min, y_min, x_max, y_max]``,
and optional per-box scores / per-pose confidences. A corpus file wraps a
list of id-tagged scenes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import BoundingBox, Pose, SceneAnnotation

TENSOR_MAGIC = b"PFT1"
TENSOR_SUFFIX = ".pft"


class DataFormatError(ValueError):
    """Raised for malformed or inconsistent on-disk data."""


def write_tensor(path: str | Path, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(array, dtype="<f4")
    header = TENSOR_MAGIC + struct.pack("<I", arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    Path(path).write_bytes(header + arr.tobytes())


def read_tensor(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:4] != TENSOR_MAGIC:
        raise DataFormatError(f"{path}: not a PFT1 tensor file")
    (rank,) = struct.unpack_from("<I", raw, 4)
    if len(raw) < 8 + 4 * rank:
        raise DataFormatError(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{rank}I", raw, 8)
    payload = raw[8 + 4 * rank:]
    expected = int(np.prod(dims, dtype=np.int64)) * 4 if rank else 4
    if len(payload) != expected:
        raise DataFormatError(
            f"{path}: payload is {len(payload)} bytes, dims {dims} need {expected}")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()


def _box_from_list(vals: Sequence[float]) -> BoundingBox:
    if len(vals) != 4:
        raise DataFormatError(f"box needs 4 numbers, got {vals!r}")
    return BoundingBox(*(float(v) for v in vals))


def scene_to_dict(scene: SceneAnnotation,
                  confidences: Optional[Sequence[float]] = None) -> dict:
    doc: dict = {
        "image_width": scene.image_width,
        "image_height": scene.image_height,
        "persons": [p.to_triples() for p in scene.persons],
        "boxes": [[b.x_min, b.y_min, b.x_max, b.y_max] for b in scene.boxes],
    }
    if scene.box_scores:
        doc["box_scores"] = list(scene.box_scores)
    if confidences is not None:
        doc["confidences"] = list(confidences)
    return doc


def scene_from_dict(doc: dict) -> tuple[SceneAnnotation, Optional[list[float]]]:
    """Parse a scene document; returns the annotation and, when present,
    the per-pose confidences (for prediction files)."""
    try:
        width = int(doc["image_width"])
        height = int(doc["image_height"])
        persons = tuple(Pose.from_triples(t) for t in doc.get("persons", []))
        boxes = tuple(_box_from_list(b) for b in doc.get("boxes", []))
        box_scores = tuple(float(s) for s in doc.get("box_scores", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"malformed scene document: {exc}") from exc
    confidences = doc.get("confidences")
    if confidences is not None:
        confidences = [float(c) for c in confidences]
    scene = SceneAnnotation(image_width=width, image_height=height,
                            persons=persons, boxes=boxes, box_scores=box_scores)
    return scene, confidences


def write_scene(path: str | Path, scene: SceneAnnotation,
                confidences: Optional[Sequence[float]] = None) -> None:
    Path(path).write_text(
        json.dumps(scene_to_dict(scene, confidences), sort_keys=True, indent=1)
        + "\n")


def read_scene(path: str | Path) -> tuple[SceneAnnotation, Optional[list[float]]]:
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"no such scene file: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON: {exc}") from exc
    return scene_from_dict(doc)


def write_corpus(path: str | Path, entries: Sequence[tuple[str, dict]]) -> None:
    """Write an id-tagged multi-scene document."""
    doc = {"scenes": [{"id": sid, **scene_doc} for sid, scene_doc in entries]}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def read_scene_collection(path: str | Path) -> dict[str, dict]:
    """Read scenes keyed by id from a corpus file, a single scene file
    (id = file stem), or a directory of scene files."""
    path = Path(path)
    if path.is_dir():
        out = {}
        for f in sorted(path.glob("*.json")):
            out[f.stem] = json.loads(f.read_text())
        if not out:
            raise DataFormatError(f"{path}: no scene files in directory")
        return out
    if not path.is_file():
        raise DataFormatError(f"no such file or directory: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON: {exc}") from exc
    if "scenes" in doc:
        out = {}
        for entry in doc["scenes"]:
            if "id" not in entry:
                raise DataFormatError(f"{path}: corpus scene without an id")
            out[str(entry["id"])] = entry
        return out
    return {path.stem: doc}


MANIFEST_NAME = "manifest.json"


def write_tensor_manifest(directory: str | Path, manifest: dict) -> None:
    Path(directory, MANIFEST_NAME).write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n")


def read_tensor_manifest(directory: str | Path) -> dict:
    path = Path(directory, MANIFEST_NAME)
    if not path.is_file():
        raise DataFormatError(f"missing manifest: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON: {exc}") from exc
