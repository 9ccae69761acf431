#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three hot decode/encode stages on a synthetic 848x480 five-person
scene and checks that both paths produce matching outputs. Run:

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from posebox import EncoderConfig, SynthConfig, canonical_skeleton, generate_scene
from posebox._accel import numpy_impl
from posebox.synth import scene_seed

try:
    from posebox._accel import numba_impl
except ImportError:
    numba_impl = None


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def build_scene():
    for k in range(50):
        scene = generate_scene(SynthConfig(seed=scene_seed(991, k),
                                           num_persons=(5, 5),
                                           image_size=(848, 480)))
        if len(scene.persons) == 5:
            return scene
    raise RuntimeError("could not place five persons")


def bench(repeats):
    scene = build_scene()
    cfg = EncoderConfig()
    skeleton = canonical_skeleton()
    h, w = 480, 848
    joint_xy = [
        (np.array([p.joints[j].x for p in scene.persons]),
         np.array([p.joints[j].y for p in scene.persons]))
        for j in range(14)
    ]
    limb_ends = []
    for parent, child in skeleton.limbs:
        for p in scene.persons:
            a, b = p.joints[parent], p.joints[child]
            limb_ends.append((a.x, a.y, b.x, b.y))

    impls = [("numpy", numpy_impl)]
    if numba_impl is not None:
        numba_impl.warmup()
        impls.append(("numba", numba_impl))
    else:
        print("numba unavailable; benchmarking the numpy path only")

    results = {}
    outputs = {}
    for name, impl in impls:
        def encode_maps():
            maps = []
            for xs, ys in joint_xy:
                m = np.zeros((h, w), dtype=np.float32)
                impl.gaussian_peak_max(m, xs, ys, cfg.sigma, cfg.stride)
                maps.append(m)
            return maps

        def encode_fields():
            fields = []
            for _ in range(13):
                vs = np.zeros((h, w, 2))
                ct = np.zeros((h, w), np.int32)
                fields.append((vs, ct))
            idx = 0
            for c in range(13):
                vs, ct = fields[c]
                for _ in scene.persons:
                    ax, ay, bx, by = limb_ends[idx]
                    impl.limb_field_accumulate(vs, ct, ax, ay, bx, by, cfg.delta, cfg.stride)
                    idx += 1
            return fields

        maps = encode_maps()

        def find_peaks():
            return [impl.find_strict_peaks(m, 0.1, 5) for m in maps]

        field = np.zeros((h, w, 2), dtype=np.float32)
        vs, ct = encode_fields()[4]
        hit = ct > 0
        field[hit] = (vs[hit] / ct[hit, None]).astype(np.float32)

        def score_segments():
            total = 0.0
            for ax, ay, bx, by in limb_ends:
                total += impl.line_integral_score(field, ax, ay, bx, by, 1, 1.0)
            return total

        t_maps, out_maps = time_call(encode_maps, repeats)
        t_peaks, out_peaks = time_call(find_peaks, repeats)
        t_score, out_score = time_call(score_segments, repeats)
        results[name] = (t_maps, t_peaks, t_score)
        outputs[name] = (out_maps, out_peaks, out_score)

    print(f"\n{'stage':<28}" + "".join(f"{n:>12}" for n, _ in impls)
          + ("     speedup" if len(impls) == 2 else ""))
    stages = ["encode 14 peak maps", "strict-max peaks x14", "score 65 segments"]
    for i, stage in enumerate(stages):
        row = f"{stage:<28}"
        for name, _ in impls:
            row += f"{1e3 * results[name][i]:>10.2f}ms"
        if len(impls) == 2:
            row += f"{results['numpy'][i] / results['numba'][i]:>11.1f}x"
        print(row)

    if len(impls) == 2:
        a, b = outputs["numpy"], outputs["numba"]
        maps_ok = all(np.array_equal(x, y) for x, y in zip(a[0], b[0]))
        peaks_ok = all(np.array_equal(x[0], y[0]) and np.array_equal(x[1], y[1])
                       for x, y in zip(a[1], b[1]))
        score_ok = abs(a[2] - b[2]) < 1e-9
        print(f"\noutput parity: maps={'ok' if maps_ok else 'MISMATCH'}, "
              f"peaks={'ok' if peaks_ok else 'MISMATCH'}, "
              f"scores={'ok' if score_ok else 'MISMATCH'}")
        if not (maps_ok and peaks_ok and score_ok):
            raise SystemExit(1)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    bench(args.repeats)
