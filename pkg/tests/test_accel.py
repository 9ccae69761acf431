"""The numba and numpy kernel paths must agree on identical inputs."""

import numpy as np
import pytest

from posebox._accel import numpy_impl
from posebox.synth import CounterRng

numba_impl = pytest.importorskip("posebox._accel.numba_impl")


def random_points(rng, n, w, h):
    xs = np.array([rng.uniform(-5, w + 5) for _ in range(n)])
    ys = np.array([rng.uniform(-5, h + 5) for _ in range(n)])
    return xs, ys


class TestPathParity:
    def test_gaussian_peak_max(self):
        rng = CounterRng(1)
        for trial in range(10):
            h, w = rng.randint(20, 90), rng.randint(20, 90)
            xs, ys = random_points(rng, rng.randint(1, 6), w, h)
            sigma = rng.uniform(2.0, 9.0)
            a = np.zeros((h, w), dtype=np.float32)
            b = np.zeros((h, w), dtype=np.float32)
            numpy_impl.gaussian_peak_max(a, xs, ys, sigma, 1)
            numba_impl.gaussian_peak_max(b, xs, ys, sigma, 1)
            assert np.array_equal(a, b)

    def test_limb_field_accumulate(self):
        rng = CounterRng(2)
        for trial in range(10):
            h, w = rng.randint(20, 90), rng.randint(20, 90)
            va = np.zeros((h, w, 2)); ca = np.zeros((h, w), np.int32)
            vb = np.zeros((h, w, 2)); cb = np.zeros((h, w), np.int32)
            for _ in range(rng.randint(1, 5)):
                ax, ay = rng.uniform(0, w), rng.uniform(0, h)
                bx, by = rng.uniform(0, w), rng.uniform(0, h)
                delta = rng.uniform(1.0, 10.0)
                ra = numpy_impl.limb_field_accumulate(va, ca, ax, ay, bx, by, delta, 1)
                rb = numba_impl.limb_field_accumulate(vb, cb, ax, ay, bx, by, delta, 1)
                assert ra == rb
            assert np.array_equal(va, vb)
            assert np.array_equal(ca, cb)

    def test_find_strict_peaks(self):
        rng = CounterRng(3)
        for trial in range(10):
            h, w = rng.randint(10, 60), rng.randint(10, 60)
            data = (np.array([rng.uniform01() for _ in range(h * w)])
                    .astype(np.float32).reshape(h, w))
            # quantize to force plateaus and exercise the tie-break
            data = np.round(data * 8) / 8
            for window in (3, 5):
                ya, xa = numpy_impl.find_strict_peaks(data, 0.25, window)
                yb, xb = numba_impl.find_strict_peaks(data, 0.25, window)
                assert np.array_equal(ya, yb) and np.array_equal(xa, xb)

    def test_line_integral_score(self):
        rng = CounterRng(4)
        for trial in range(20):
            h, w = rng.randint(10, 60), rng.randint(10, 60)
            field = (np.array([rng.uniform(-1, 1) for _ in range(h * w * 2)])
                     .astype(np.float32).reshape(h, w, 2))
            ax, ay = rng.uniform(0, w), rng.uniform(0, h)
            bx, by = rng.uniform(0, w), rng.uniform(0, h)
            if (ax, ay) == (bx, by):
                continue
            step = rng.uniform(0.3, 2.0)
            sa = numpy_impl.line_integral_score(field, ax, ay, bx, by, 1, step)
            sb = numba_impl.line_integral_score(field, ax, ay, bx, by, 1, step)
            assert sa == pytest.approx(sb, abs=1e-12)

    def test_zero_length_segment_skipped(self):
        v = np.zeros((8, 8, 2)); c = np.zeros((8, 8), np.int32)
        assert numpy_impl.limb_field_accumulate(v, c, 3.0, 3.0, 3.0, 3.0, 2.0, 1) is False
        assert not bool(numba_impl.limb_field_accumulate(v, c, 3.0, 3.0, 3.0, 3.0, 2.0, 1))
        assert not c.any()
