"""Pure-numpy reference implementations of the hot grid kernels.

These are the fallback path when numba is unavailable or disabled via
``POSEBOX_DISABLE_NUMBA=1``. The numba implementations mirror these
cell-for-cell; both paths must agree to float rounding.
"""

from __future__ import annotations

import math

import numpy as np

# Gaussians are rasterized only inside a square window where the peak value
# can reach 1e-4; cells outside store exact zeros (documented tolerance).
SUPPORT_SIGMA = math.sqrt(math.log(1e4))


def gaussian_peak_max(out: np.ndarray, xs: np.ndarray, ys: np.ndarray,
                      sigma: float, stride: int) -> None:
    """Max-accumulate ``exp(-d^2 / sigma^2)`` peaks into a (h, w) float32 map.

    ``d`` is the pixel distance from each cell center to the peak at
    ``(xs[k], ys[k])``.
    """
    h, w = out.shape
    radius = sigma * SUPPORT_SIGMA
    for x, y in zip(xs.tolist(), ys.tolist()):
        ix0 = max(0, int(math.ceil((x - radius) / stride - 0.5)))
        ix1 = min(w - 1, int(math.floor((x + radius) / stride - 0.5)))
        iy0 = max(0, int(math.ceil((y - radius) / stride - 0.5)))
        iy1 = min(h - 1, int(math.floor((y + radius) / stride - 0.5)))
        if ix0 > ix1 or iy0 > iy1:
            continue
        cx = (np.arange(ix0, ix1 + 1, dtype=np.float64) + 0.5) * stride
        cy = (np.arange(iy0, iy1 + 1, dtype=np.float64) + 0.5) * stride
        d2 = (cx[None, :] - x) ** 2 + (cy[:, None] - y) ** 2
        vals = np.exp(-d2 / (sigma * sigma)).astype(np.float32)
        region = out[iy0:iy1 + 1, ix0:ix1 + 1]
        np.maximum(region, vals, out=region)


def limb_field_accumulate(vec_sum: np.ndarray, count: np.ndarray,
                          ax: float, ay: float, bx: float, by: float,
                          delta: float, stride: int) -> bool:
    """Add the unit direction of segment a->b into every cell whose center
    lies in the 2*delta-wide rectangle around the segment.

    ``vec_sum`` is (h, w, 2) float64, ``count`` (h, w) int32. Returns False
    for a zero-length segment (nothing written).
    """
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
    if ix0 > ix1 or iy0 > iy1:
        return True
    cx = (np.arange(ix0, ix1 + 1, dtype=np.float64) + 0.5) * stride
    cy = (np.arange(iy0, iy1 + 1, dtype=np.float64) + 0.5) * stride
    px = cx[None, :] - ax
    py = cy[:, None] - ay
    along = px * vx + py * vy
    across = py * vx - px * vy
    mask = (along >= 0.0) & (along <= length) & (np.abs(across) <= delta)
    region = vec_sum[iy0:iy1 + 1, ix0:ix1 + 1]
    region[..., 0][mask] += vx
    region[..., 1][mask] += vy
    count[iy0:iy1 + 1, ix0:ix1 + 1][mask] += 1
    return True


def find_strict_peaks(grid: np.ndarray, threshold: float,
                      window: int) -> tuple[np.ndarray, np.ndarray]:
    """Cells >= threshold that beat every window neighbor; an equal-valued
    neighbor wins only if it has a smaller row-major index. Returns
    (ys, xs) in row-major order."""
    h, w = grid.shape
    r = window // 2
    padded = np.full((h + 2 * r, w + 2 * r), -np.inf, dtype=grid.dtype)
    padded[r:r + h, r:r + w] = grid
    wmax = grid.copy()
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dx == 0 and dy == 0:
                continue
            np.maximum(wmax, padded[r + dy:r + dy + h, r + dx:r + dx + w], out=wmax)
    ys, xs = np.nonzero((grid >= threshold) & (grid >= wmax))
    keep_ys: list[int] = []
    keep_xs: list[int] = []
    for y, x in zip(ys.tolist(), xs.tolist()):
        v = grid[y, x]
        ok = True
        for ny in range(max(0, y - r), min(h, y + r + 1)):
            for nx in range(max(0, x - r), min(w, x + r + 1)):
                if ny == y and nx == x:
                    continue
                if grid[ny, nx] == v and (ny * w + nx) < (y * w + x):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            keep_ys.append(y)
            keep_xs.append(x)
    return np.asarray(keep_ys, dtype=np.int64), np.asarray(keep_xs, dtype=np.int64)


def line_integral_score(field: np.ndarray, ax: float, ay: float,
                        bx: float, by: float, stride: int,
                        sample_step: float) -> float:
    """Mean dot product between the bilinearly sampled (h, w, 2) field and
    the unit direction of segment a->b, over max(2, ceil(len/step)) evenly
    spaced samples including both endpoints."""
    h, w = field.shape[:2]
    dx = bx - ax
    dy = by - ay
    length = math.hypot(dx, dy)
    n = max(2, int(math.ceil(length / sample_step)))
    ux = dx / length
    uy = dy / length
    ts = np.arange(n, dtype=np.float64) / (n - 1)
    u = (ax + ts * dx) / stride - 0.5
    v = (ay + ts * dy) / stride - 0.5
    i0 = np.floor(u).astype(np.int64)
    j0 = np.floor(v).astype(np.int64)
    fu = u - i0
    fv = v - j0
    i0c = np.clip(i0, 0, w - 1)
    i1c = np.clip(i0 + 1, 0, w - 1)
    j0c = np.clip(j0, 0, h - 1)
    j1c = np.clip(j0 + 1, 0, h - 1)
    w00 = (1.0 - fu) * (1.0 - fv)
    w10 = fu * (1.0 - fv)
    w01 = (1.0 - fu) * fv
    w11 = fu * fv
    total = 0.0
    for ch, uc in ((0, ux), (1, uy)):
        samp = (
            field[j0c, i0c, ch] * w00
            + field[j0c, i1c, ch] * w10
            + field[j1c, i0c, ch] * w01
            + field[j1c, i1c, ch] * w11
        )
        total += float(np.sum(samp)) * uc
    return total / n


def resample_bilinear(data: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resample a (h, w) or (h, w, 2) grid onto a new cell lattice, aligning
    by relative cell-center position; borders clamp."""
    h, w = data.shape[:2]
    sy = h / out_h
    sx = w / out_w
    u = (np.arange(out_w, dtype=np.float64) + 0.5) * sx - 0.5
    v = (np.arange(out_h, dtype=np.float64) + 0.5) * sy - 0.5
    i0 = np.floor(u).astype(np.int64)
    j0 = np.floor(v).astype(np.int64)
    fu = (u - i0)[None, :]
    fv = (v - j0)[:, None]
    i0c = np.clip(i0, 0, w - 1)
    i1c = np.clip(i0 + 1, 0, w - 1)
    j0c = np.clip(j0, 0, h - 1)
    j1c = np.clip(j0 + 1, 0, h - 1)
    if data.ndim == 2:
        out = (
            data[np.ix_(j0c, i0c)] * (1 - fu) * (1 - fv)
            + data[np.ix_(j0c, i1c)] * fu * (1 - fv)
            + data[np.ix_(j1c, i0c)] * (1 - fu) * fv
            + data[np.ix_(j1c, i1c)] * fu * fv
        )
    else:
        wu = fu[..., None]
        wv = fv[..., None]
        out = (
            data[np.ix_(j0c, i0c)] * (1 - wu) * (1 - wv)
            + data[np.ix_(j0c, i1c)] * wu * (1 - wv)
            + data[np.ix_(j1c, i0c)] * (1 - wu) * wv
            + data[np.ix_(j1c, i1c)] * wu * wv
        )
    return out.astype(np.float32)
