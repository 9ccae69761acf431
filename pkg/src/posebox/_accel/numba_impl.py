"""Numba-jitted versions of the hot grid kernels.

Same contracts as ``numpy_impl``; loops are written cell-for-cell against
the same formulas so the two paths agree to float rounding. Importing this
module requires numba; the package falls back to the numpy path otherwise.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .numpy_impl import SUPPORT_SIGMA, resample_bilinear  # noqa: F401  (re-export)


@njit(cache=True)
def _gaussian_peak_max(out, xs, ys, sigma, stride):
    h, w = out.shape
    radius = sigma * SUPPORT_SIGMA
    inv_s2 = 1.0 / (sigma * sigma)
    for k in range(xs.shape[0]):
        x = xs[k]
        y = ys[k]
        ix0 = max(0, int(math.ceil((x - radius) / stride - 0.5)))
        ix1 = min(w - 1, int(math.floor((x + radius) / stride - 0.5)))
        iy0 = max(0, int(math.ceil((y - radius) / stride - 0.5)))
        iy1 = min(h - 1, int(math.floor((y + radius) / stride - 0.5)))
        for iy in range(iy0, iy1 + 1):
            cy = (iy + 0.5) * stride
            dy2 = (cy - y) * (cy - y)
            for ix in range(ix0, ix1 + 1):
                cx = (ix + 0.5) * stride
                d2 = (cx - x) * (cx - x) + dy2
                val = np.float32(math.exp(-d2 * inv_s2))
                if val > out[iy, ix]:
                    out[iy, ix] = val


def gaussian_peak_max(out, xs, ys, sigma, stride):
    _gaussian_peak_max(out, xs, ys, float(sigma), int(stride))


@njit(cache=True)
def _limb_field_accumulate(vec_sum, count, ax, ay, bx, by, delta, stride):
    h, w = count.shape
    dx = bx - ax
    dy = by - ay
    length = math.hypot(dx, dy)
    if length == 0.0:
        return False
    vx = dx / length
    vy = dy / length
    x_lo = min(ax, bx) - delta
    x_hi = max(ax, bx) + delta
    y_lo = min(ay, by) - delta
    y_hi = max(ay, by) + delta
    ix0 = max(0, int(math.ceil(x_lo / stride - 0.5)))
    ix1 = min(w - 1, int(math.floor(x_hi / stride - 0.5)))
    iy0 = max(0, int(math.ceil(y_lo / stride - 0.5)))
    iy1 = min(h - 1, int(math.floor(y_hi / stride - 0.5)))
    for iy in range(iy0, iy1 + 1):
        cy = (iy + 0.5) * stride
        py = cy - ay
        for ix in range(ix0, ix1 + 1):
            cx = (ix + 0.5) * stride
            px = cx - ax
            along = px * vx + py * vy
            if along < 0.0 or along > length:
                continue
            across = py * vx - px * vy
            if abs(across) > delta:
                continue
            vec_sum[iy, ix, 0] += vx
            vec_sum[iy, ix, 1] += vy
            count[iy, ix] += 1
    return True


def limb_field_accumulate(vec_sum, count, ax, ay, bx, by, delta, stride):
    return _limb_field_accumulate(
        vec_sum, count, float(ax), float(ay), float(bx), float(by),
        float(delta), int(stride))


@njit(cache=True)
def _find_strict_peaks(grid, threshold, window):
    h, w = grid.shape
    r = window // 2
    ys = []
    xs = []
    for y in range(h):
        for x in range(w):
            v = grid[y, x]
            if v < threshold:
                continue
            idx = y * w + x
            ok = True
            for ny in range(max(0, y - r), min(h, y + r + 1)):
                for nx in range(max(0, x - r), min(w, x + r + 1)):
                    if ny == y and nx == x:
                        continue
                    nv = grid[ny, nx]
                    if nv > v or (nv == v and ny * w + nx < idx):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                ys.append(y)
                xs.append(x)
    out_y = np.empty(len(ys), dtype=np.int64)
    out_x = np.empty(len(xs), dtype=np.int64)
    for i in range(len(ys)):
        out_y[i] = ys[i]
        out_x[i] = xs[i]
    return out_y, out_x


def find_strict_peaks(grid, threshold, window):
    return _find_strict_peaks(grid, np.float32(threshold), int(window))


@njit(cache=True)
def _line_integral_score(field, ax, ay, bx, by, stride, sample_step):
    h, w = field.shape[:2]
    dx = bx - ax
    dy = by - ay
    length = math.hypot(dx, dy)
    n = max(2, int(math.ceil(length / sample_step)))
    ux = dx / length
    uy = dy / length
    total = 0.0
    for i in range(n):
        t = i / (n - 1)
        u = (ax + t * dx) / stride - 0.5
        v = (ay + t * dy) / stride - 0.5
        i0 = int(math.floor(u))
        j0 = int(math.floor(v))
        fu = u - i0
        fv = v - j0
        i0c = min(max(i0, 0), w - 1)
        i1c = min(max(i0 + 1, 0), w - 1)
        j0c = min(max(j0, 0), h - 1)
        j1c = min(max(j0 + 1, 0), h - 1)
        fx = (field[j0c, i0c, 0] * (1.0 - fu) * (1.0 - fv)
              + field[j0c, i1c, 0] * fu * (1.0 - fv)
              + field[j1c, i0c, 0] * (1.0 - fu) * fv
              + field[j1c, i1c, 0] * fu * fv)
        fy = (field[j0c, i0c, 1] * (1.0 - fu) * (1.0 - fv)
              + field[j0c, i1c, 1] * fu * (1.0 - fv)
              + field[j1c, i0c, 1] * (1.0 - fu) * fv
              + field[j1c, i1c, 1] * fu * fv)
        total += fx * ux + fy * uy
    return total / n


def line_integral_score(field, ax, ay, bx, by, stride, sample_step):
    return float(_line_integral_score(
        field, float(ax), float(ay), float(bx), float(by),
        int(stride), float(sample_step)))


def warmup() -> None:
    """Trigger JIT compilation of all kernels on tiny inputs."""
    m = np.zeros((4, 4), dtype=np.float32)
    gaussian_peak_max(m, np.array([1.0]), np.array([1.0]), 1.0, 1)
    vs = np.zeros((4, 4, 2), dtype=np.float64)
    ct = np.zeros((4, 4), dtype=np.int32)
    limb_field_accumulate(vs, ct, 0.5, 0.5, 2.5, 0.5, 1.0, 1)
    find_strict_peaks(m, 0.1, 3)
    f = np.zeros((4, 4, 2), dtype=np.float32)
    line_integral_score(f, 0.5, 0.5, 2.5, 0.5, 1, 1.0)
