"""Command-line pipeline: encode, parse, eval, synth, render.

Exit codes: 0 success, 1 usage error, 2 data error. All commands are
deterministic given their flags and inputs; commands that produce tensor
or corpus directories record every parameter in a manifest so runs can
be replayed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import fileio
from .codec import EncoderConfig, background_map, encode_confidence_maps, encode_direction_fields
from .core import (
    NUM_JOINTS,
    NUM_LIMBS,
    BoundingBox,
    FieldGrid,
    Pose,
    SceneAnnotation,
    canonical_skeleton,
)
from .detect import DetectConfig, extend_box, fuse_scales
from .evaluate import OksConfig, average_precision
from .fileio import DataFormatError
from .parse import ParseConfig, parse_scene
from .synth import OcclusionSpec, SynthConfig, generate_scene, occluded_person_indices, \
    perturb_fields, scene_seed, with_seed

USAGE_ERROR = 1
DATA_ERROR = 2

_PALETTE = (
    (230, 60, 60), (60, 180, 75), (65, 110, 230), (245, 180, 35),
    (145, 70, 200), (70, 210, 210), (240, 120, 190), (160, 200, 60),
    (150, 100, 60), (100, 140, 220), (220, 150, 100), (110, 220, 150),
)


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage problems; the contract wants 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _write_tensor_dir(maps, fields, scene: SceneAnnotation, cfg: EncoderConfig,
                      out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    bg = background_map(maps)
    joint_files = [f"joint_{j:02d}{fileio.TENSOR_SUFFIX}" for j in range(NUM_JOINTS)]
    field_files = [f"limb_{c:02d}{fileio.TENSOR_SUFFIX}" for c in range(NUM_LIMBS)]
    for name, grid in zip(joint_files, maps):
        fileio.write_tensor(out_dir / name, grid.data)
    for name, grid in zip(field_files, fields):
        fileio.write_tensor(out_dir / name, grid.data)
    bg_file = f"background{fileio.TENSOR_SUFFIX}"
    fileio.write_tensor(out_dir / bg_file, bg.data)
    manifest = {
        "image_width": scene.image_width,
        "image_height": scene.image_height,
        "sigma": cfg.sigma,
        "delta": cfg.delta,
        "stride": cfg.stride,
        "grid_width": maps[0].width,
        "grid_height": maps[0].height,
        "joint_maps": joint_files,
        "direction_fields": field_files,
        "background": bg_file,
        "scales": {"1.0": "."},
    }
    fileio.write_tensor_manifest(out_dir, manifest)
    return manifest


def _encode_to_dir(scene: SceneAnnotation, cfg: EncoderConfig, out_dir: Path) -> dict:
    skeleton = canonical_skeleton()
    maps = encode_confidence_maps(scene, cfg)
    fields = encode_direction_fields(scene, cfg, skeleton)
    return _write_tensor_dir(maps, fields, scene, cfg, out_dir)


def _load_tensor_dir(tensor_dir: Path) -> tuple[dict, list[FieldGrid], list[FieldGrid]]:
    manifest = fileio.read_tensor_manifest(tensor_dir)
    try:
        stride = int(manifest["stride"])
        gw, gh = int(manifest["grid_width"]), int(manifest["grid_height"])
        joint_files = manifest["joint_maps"]
        field_files = manifest["direction_fields"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{tensor_dir}: bad manifest: {exc}") from exc
    if len(joint_files) != NUM_JOINTS or len(field_files) != NUM_LIMBS:
        raise DataFormatError(f"{tensor_dir}: manifest must list 14 maps and 13 fields")
    maps, fields = [], []
    for name in joint_files:
        data = fileio.read_tensor(tensor_dir / name)
        if data.shape != (gh, gw):
            raise DataFormatError(f"{name}: shape {data.shape} does not match manifest")
        maps.append(FieldGrid(data, stride=stride))
    for name in field_files:
        data = fileio.read_tensor(tensor_dir / name)
        if data.shape != (gh, gw, 2):
            raise DataFormatError(f"{name}: shape {data.shape} does not match manifest")
        fields.append(FieldGrid(data, stride=stride))
    return manifest, maps, fields


def cmd_encode(args: argparse.Namespace) -> int:
    scene, _ = fileio.read_scene(args.scene_file)
    cfg = EncoderConfig(sigma=args.sigma, delta=args.delta, stride=args.stride)
    _encode_to_dir(scene, cfg, Path(args.out_dir))
    return 0


def _parse_scales_flag(raw: Optional[str]) -> Optional[list[float]]:
    if raw is None:
        return None
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise DataFormatError(f"bad --scales value {raw!r}: {exc}") from exc


def cmd_parse(args: argparse.Namespace) -> int:
    tensor_dir = Path(args.tensor_dir)
    manifest, maps, fields = _load_tensor_dir(tensor_dir)
    img_w = int(manifest["image_width"])
    img_h = int(manifest["image_height"])
    stride = int(manifest["stride"])

    scales = _parse_scales_flag(args.scales)
    if scales:
        declared = {float(k): v for k, v in manifest.get("scales", {}).items()}
        per_scale = []
        for s in scales:
            if s not in declared:
                raise DataFormatError(
                    f"scale {s:g} not in manifest (has: {sorted(declared)})")
            sub = tensor_dir / declared[s]
            _, s_maps, s_fields = _load_tensor_dir(sub)
            per_scale.append((s, s_maps, s_fields))
        base_shape = (maps[0].height, maps[0].width)
        maps, fields = fuse_scales(per_scale, base_shape, stride=stride)

    boxes_doc = fileio.read_scene_collection(args.boxes_file)
    if len(boxes_doc) != 1:
        raise DataFormatError("boxes file must contain exactly one scene document")
    (box_doc,) = boxes_doc.values()
    raw_boxes = box_doc.get("boxes", [])
    boxes = []
    for b in raw_boxes:
        box = BoundingBox(float(b[0]), float(b[1]), float(b[2]), float(b[3]))
        boxes.append(extend_box(box, img_w, img_h, args.box_extension))

    detect_cfg = DetectConfig(peak_threshold=args.peak_threshold,
                              box_extension=args.box_extension)
    parse_cfg = ParseConfig(elimination_threshold=args.eta,
                            completion_min_score=args.peak_threshold)
    results = parse_scene(boxes, maps, fields, canonical_skeleton(),
                          detect_cfg, parse_cfg,
                          apply_nms=not args.no_nms,
                          apply_completion=not args.no_completion)

    out_doc = {
        "image_width": img_w,
        "image_height": img_h,
        "persons": [r.pose.to_triples() for r in results],
        "confidences": [r.confidence for r in results],
        "boxes": [[b.x_min, b.y_min, b.x_max, b.y_max] for b in boxes],
        "box_indices": [r.box_index for r in results],
        "parameters": {
            "eta": args.eta,
            "peak_threshold": args.peak_threshold,
            "box_extension": args.box_extension,
            "nms": not args.no_nms,
            "completion": not args.no_completion,
            "scales": scales,
        },
    }
    Path(args.out_file).write_text(json.dumps(out_doc, sort_keys=True, indent=1) + "\n")
    return 0


def _poses_with_conf(doc: dict) -> list[tuple[Pose, float]]:
    scene, confidences = fileio.scene_from_dict(
        {k: v for k, v in doc.items() if k != "id"})
    if confidences is None:
        confidences = [1.0] * len(scene.persons)
    if len(confidences) != len(scene.persons):
        raise DataFormatError("confidences do not align with persons")
    return list(zip(scene.persons, confidences))


def cmd_eval(args: argparse.Namespace) -> int:
    preds = fileio.read_scene_collection(args.pred_file)
    gts = fileio.read_scene_collection(args.gt_file)
    if set(preds) != set(gts):
        only_pred = sorted(set(preds) - set(gts))
        only_gt = sorted(set(gts) - set(preds))
        print(f"scene id mismatch: only in predictions {only_pred}, "
              f"only in ground truth {only_gt}", file=sys.stderr)
        return DATA_ERROR
    cfg = OksConfig()
    if args.oks_config:
        try:
            raw = json.loads(Path(args.oks_config).read_text())
            cfg = OksConfig(per_joint_k=tuple(float(k) for k in raw["per_joint_k"]))
        except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            raise DataFormatError(f"bad OKS config: {exc}") from exc
    ids = sorted(gts)
    pred_scenes = [_poses_with_conf(preds[i]) for i in ids]
    gt_scenes = [fileio.scene_from_dict({k: v for k, v in gts[i].items() if k != "id"})[0]
                 for i in ids]
    report = average_precision(pred_scenes, gt_scenes, cfg)
    print(json.dumps({
        "ap": report.ap,
        "ap_per_threshold": list(report.ap_per_threshold),
        "mean_oks": report.mean_oks,
        "matched": report.matched,
        "missed": report.missed,
        "spurious": report.spurious,
        "scenes": len(ids),
    }, sort_keys=True, indent=1))
    return 0


def _parse_person_range(raw: str) -> tuple[int, int]:
    if ":" in raw:
        lo, hi = raw.split(":", 1)
        return int(lo), int(hi)
    n = int(raw)
    return n, n


def cmd_synth(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    scenes_dir = out_dir / "scenes"
    tensors_dir = out_dir / "tensors"
    scenes_dir.mkdir(parents=True, exist_ok=True)
    tensors_dir.mkdir(parents=True, exist_ok=True)

    lo, hi = _parse_person_range(args.persons)
    occlusion = (OcclusionSpec(limb_class=args.occlude_limb)
                 if args.occlude_limb is not None else None)
    base_cfg = SynthConfig(seed=args.seed, num_persons=(lo, hi),
                           noise_amplitude=args.noise, occlusion=occlusion)
    enc_cfg = EncoderConfig(sigma=args.sigma, delta=args.delta, stride=args.stride)
    skeleton = canonical_skeleton()

    entries = []
    for i in range(args.scenes):
        sid = f"scene_{i:04d}"
        cfg = with_seed(base_cfg, scene_seed(args.seed, i))
        scene = generate_scene(cfg)
        fileio.write_scene(scenes_dir / f"{sid}.json", scene)
        maps = encode_confidence_maps(scene, enc_cfg)
        fields = encode_direction_fields(scene, enc_cfg, skeleton)
        occluded: list[int] = []
        if cfg.noise_amplitude > 0 or cfg.occlusion is not None:
            maps, fields = perturb_fields(maps, fields, cfg, scene, skeleton)
            occluded = occluded_person_indices(cfg, len(scene.persons))
        _write_tensor_dir(maps, fields, scene, enc_cfg, tensors_dir / sid)
        entries.append({
            "id": sid,
            "scene_file": f"scenes/{sid}.json",
            "tensor_dir": f"tensors/{sid}",
            "persons": len(scene.persons),
            "occluded_persons": occluded,
        })

    corpus = {
        "seed": args.seed,
        "scenes": entries,
        "config": {
            "persons": [lo, hi],
            "noise": args.noise,
            "occlude_limb": args.occlude_limb,
            "sigma": enc_cfg.sigma,
            "delta": enc_cfg.delta,
            "stride": enc_cfg.stride,
        },
    }
    (out_dir / "corpus.json").write_text(json.dumps(corpus, sort_keys=True, indent=1) + "\n")
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    from PIL import Image, ImageDraw

    scene, _ = fileio.read_scene(args.input_file)
    skeleton = canonical_skeleton()
    img = Image.new("RGB", (scene.image_width, scene.image_height), (16, 16, 16))
    draw = ImageDraw.Draw(img)
    for idx, person in enumerate(scene.persons):
        color = _PALETTE[idx % len(_PALETTE)]
        for parent, child in skeleton.limbs:
            a, b = person.joints[parent], person.joints[child]
            if a is None or b is None:
                continue
            draw.line([(a.x, a.y), (b.x, b.y)], fill=color, width=2)
        for j in person.joints:
            if j is not None:
                draw.ellipse([j.x - 3, j.y - 3, j.x + 3, j.y + 3],
                             outline=(255, 255, 255), fill=color)
    img.save(args.out_image, format="PNG")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="posebox",
                     description="Multi-person pose field codec, box-constrained "
                                 "parser, and keypoint evaluation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="synthesize field tensors from a scene file")
    p.add_argument("scene_file")
    p.add_argument("out_dir")
    p.add_argument("--sigma", type=float, default=7.0)
    p.add_argument("--delta", type=float, default=8.0)
    p.add_argument("--stride", type=int, default=1)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("parse", help="decode poses from a tensor directory")
    p.add_argument("tensor_dir")
    p.add_argument("boxes_file")
    p.add_argument("out_file")
    p.add_argument("--eta", type=float, default=0.5,
                   help="pose elimination distance threshold")
    p.add_argument("--peak-threshold", type=float, default=0.1)
    p.add_argument("--box-extension", type=float, default=0.10)
    p.add_argument("--no-nms", action="store_true")
    p.add_argument("--no-completion", action="store_true")
    p.add_argument("--scales", default=None,
                   help="comma-separated scale factors to fuse (from the manifest)")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("pred_file")
    p.add_argument("gt_file")
    p.add_argument("--oks-config", default=None,
                   help="JSON file with per_joint_k overrides")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic scene + tensor corpus")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenes", type=int, default=10)
    p.add_argument("--persons", default="1:5", help="count or LO:HI range")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--occlude-limb", type=int, default=None)
    p.add_argument("--sigma", type=float, default=7.0)
    p.add_argument("--delta", type=float, default=8.0)
    p.add_argument("--stride", type=int, default=1)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("render", help="draw a scene or parse result as a PNG")
    p.add_argument("input_file")
    p.add_argument("out_image")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataFormatError as exc:
        print(f"posebox {args.command}: {exc}", file=sys.stderr)
        return DATA_ERROR
    except (OSError, ValueError) as exc:
        print(f"posebox {args.command}: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
