"""Pixel-level primitives for the detection pipeline.

Conventions, used consistently everywhere:

* HSV: H in [0, 360), S and V in [0, 1]; H = 0 whenever S = 0.
* Masks are boolean HxW arrays.
* Out-of-image neighborhoods are background (0) for all windowed
  operations; rectangular kernels anchor at ``floor(size / 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

_CONN8 = np.ones((3, 3), dtype=bool)


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Convert an HxWx3 8-bit image to float HSV (hexcone model).

    Single precision: hue is accurate to ~2e-4 degrees, far inside any
    sensible threshold margin.  Images with few distinct colors (flat
    shading) take a fast path: convert each distinct color once, then
    gather.
    """
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected an HxWx3 image")
    if rgb.dtype == np.uint8 and rgb.shape[0] * rgb.shape[1] > 4096:
        vals = [np.flatnonzero(np.bincount(rgb[..., c].ravel(),
                                           minlength=256)) for c in range(3)]
        nr, ng, nb = (len(v) for v in vals)
        if nr * ng * nb <= 4096:
            rank = np.zeros((3, 256), dtype=np.int32)
            for c in range(3):
                rank[c, vals[c]] = np.arange(len(vals[c]))
            idx = (rank[0, rgb[..., 0]] * ng
                   + rank[1, rgb[..., 1]]) * nb + rank[2, rgb[..., 2]]
            colors = np.stack(np.meshgrid(*vals, indexing="ij"),
                              axis=-1).astype(np.uint8)
            table = _rgb_to_hsv_dense(colors.reshape(-1, 1, 3)).reshape(-1, 3)
            return table[idx]
    return _rgb_to_hsv_dense(rgb)


def _rgb_to_hsv_dense(rgb: np.ndarray) -> np.ndarray:
    f = rgb.astype(np.float32) * np.float32(1.0 / 255.0)
    r, g, b = f[..., 0], f[..., 1], f[..., 2]
    v = np.maximum(np.maximum(r, g), b)
    c = v - np.minimum(np.minimum(r, g), b)
    s = np.divide(c, v, out=np.zeros_like(v), where=v > 0)
    chroma = c > 0
    cc = np.where(chroma, c, np.float32(1.0))
    hr = np.mod((g - b) / cc, np.float32(6.0))
    hg = (b - r) / cc + np.float32(2.0)
    hb = (r - g) / cc + np.float32(4.0)
    h = np.where(v == r, hr, np.where(v == g, hg, hb))
    h = np.where(chroma, h * np.float32(60.0), np.float32(0.0))
    h = np.mod(h, np.float32(360.0))
    return np.stack([h, s, v], axis=2)


def hsv_in_range(hsv: np.ndarray, lo, hi) -> np.ndarray:
    """Inclusive box test per channel; ``lo[0] > hi[0]`` wraps the hue."""
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    h_lo, s_lo, v_lo = lo
    h_hi, s_hi, v_hi = hi
    if h_lo > h_hi:
        h_ok = (h >= h_lo) | (h <= h_hi)
    else:
        h_ok = (h >= h_lo) & (h <= h_hi)
    return h_ok & (s >= s_lo) & (s <= s_hi) & (v >= v_lo) & (v <= v_hi)


def _box_sum(mask: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """Exact integer count of set pixels in each anchored window.

    Window for output pixel (i, j) covers rows [i - kh//2, i - kh//2 + kh)
    and the analogous columns; out-of-image pixels count as zero.
    """
    h, w = mask.shape
    ah, aw = kh // 2, kw // 2
    padded = np.zeros((h + kh, w + kw), dtype=np.int32)
    padded[1 + ah:1 + ah + h, 1 + aw:1 + aw + w] = mask
    c = padded.cumsum(axis=0).cumsum(axis=1)
    return c[kh:, kw:] - c[:-kh, kw:] - c[kh:, :-kw] + c[:-kh, :-kw]


def morph(mask: np.ndarray, kernel: tuple[int, int], mode: str) -> np.ndarray:
    """Dilate or erode with a rectangular structuring element.

    A window with any set pixel dilates to 1; erosion requires the full
    window set, so pixels outside the image count as background and set
    regions erode away at the border.
    """
    if mode not in ("dilate", "erode"):
        raise ValueError(f"mode must be 'dilate' or 'erode', got {mode!r}")
    kh, kw = kernel
    h, w = mask.shape
    if kh < 1 or kw < 1:
        raise ValueError("kernel dimensions must be >= 1")
    if kh > h or kw > w:
        raise ValueError(f"kernel {kernel} larger than image {mask.shape}")
    filt = ndimage.maximum_filter if mode == "dilate" else ndimage.minimum_filter
    out = filt(np.ascontiguousarray(mask, dtype=np.uint8), size=(kh, kw),
               mode="constant", cval=0)
    return out.astype(bool)


def median3x3(mask: np.ndarray) -> np.ndarray:
    """3x3 binary median: majority vote with zero-padded borders."""
    return _box_sum(np.ascontiguousarray(mask, dtype=bool), 3, 3) >= 5


@dataclass
class LabeledRegions:
    """8-connected components with per-label statistics.

    ``labels`` holds 0 for background and 1..n for components.  ``bboxes``
    rows are (row_min, col_min, row_max, col_max), inclusive.
    """

    labels: np.ndarray
    areas: np.ndarray        # (n,) int
    bboxes: np.ndarray       # (n, 4) int
    centroids: np.ndarray    # (n, 2) float, (row, col)

    @property
    def count(self) -> int:
        return len(self.areas)


def connected_components(mask: np.ndarray) -> LabeledRegions:
    labels, n = ndimage.label(mask, structure=_CONN8)
    if n == 0:
        return LabeledRegions(labels,
                              np.zeros(0, dtype=np.int64),
                              np.zeros((0, 4), dtype=np.int64),
                              np.zeros((0, 2)))
    flat = labels.ravel()
    areas = np.bincount(flat, minlength=n + 1)[1:]
    bboxes = np.zeros((n, 4), dtype=np.int64)
    for i, sl in enumerate(ndimage.find_objects(labels, max_label=n)):
        bboxes[i] = (sl[0].start, sl[1].start, sl[0].stop - 1, sl[1].stop - 1)
    rows, cols = np.nonzero(labels)
    lab = labels[rows, cols]
    sum_r = np.bincount(lab, weights=rows, minlength=n + 1)[1:]
    sum_c = np.bincount(lab, weights=cols, minlength=n + 1)[1:]
    centroids = np.stack([sum_r / areas, sum_c / areas], axis=1)
    return LabeledRegions(labels, areas.astype(np.int64), bboxes, centroids)


def distance_transform_normalized(mask: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance to the nearest unset pixel, normalized so
    that each 8-connected component peaks at exactly 1.0.

    Unset pixels map to 0.  A mask with no unset pixel at all is degenerate
    and maps to all ones.
    """
    mask = np.asarray(mask, dtype=bool)
    out = np.zeros(mask.shape, dtype=np.float64)
    if not mask.any():
        return out
    if mask.all():
        return np.ones(mask.shape, dtype=np.float64)
    edt = ndimage.distance_transform_edt(mask)
    labels, n = ndimage.label(mask, structure=_CONN8)
    peaks = np.asarray(ndimage.maximum(edt, labels, index=np.arange(1, n + 1)),
                       dtype=np.float64)
    lut = np.concatenate([[1.0], peaks])
    out = edt / lut[labels]
    out[~mask] = 0.0
    return out
