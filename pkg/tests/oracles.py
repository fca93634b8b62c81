"""Independent brute-force oracles for the pixel primitives.

Each oracle is written as directly as possible from the operation's
definition — per-pixel loops, flood fill, exhaustive nearest-neighbor
search — and deliberately shares no code with the library.
"""

from __future__ import annotations

import colorsys
import itertools
from collections import deque

import numpy as np


def oracle_rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    h, w, _ = rgb.shape
    out = np.zeros((h, w, 3))
    for i in range(h):
        for j in range(w):
            r, g, b = (float(c) / 255.0 for c in rgb[i, j])
            hh, ss, vv = colorsys.rgb_to_hsv(r, g, b)
            out[i, j] = (hh * 360.0) % 360.0, ss, vv
    return out


def oracle_in_range(hsv: np.ndarray, lo, hi) -> np.ndarray:
    h, w, _ = hsv.shape
    out = np.zeros((h, w), dtype=bool)
    for i in range(h):
        for j in range(w):
            hv, sv, vv = hsv[i, j]
            if lo[0] > hi[0]:
                h_ok = hv >= lo[0] or hv <= hi[0]
            else:
                h_ok = lo[0] <= hv <= hi[0]
            out[i, j] = (h_ok and lo[1] <= sv <= hi[1]
                         and lo[2] <= vv <= hi[2])
    return out


def oracle_morph(mask: np.ndarray, kernel, mode: str) -> np.ndarray:
    """Naive sliding-window maximum/minimum with background padding."""
    kh, kw = kernel
    ah, aw = kh // 2, kw // 2
    h, w = mask.shape
    out = np.zeros((h, w), dtype=bool)
    for i in range(h):
        r0, r1 = max(0, i - ah), min(h, i - ah + kh)
        for j in range(w):
            c0, c1 = max(0, j - aw), min(w, j - aw + kw)
            window = mask[r0:r1, c0:c1]
            if mode == "dilate":
                out[i, j] = window.any()
            else:
                # clipped window means padding zeros are in play
                full = (r1 - r0 == kh) and (c1 - c0 == kw)
                out[i, j] = full and window.all()
    return out


def oracle_median3x3(mask: np.ndarray) -> np.ndarray:
    h, w = mask.shape
    out = np.zeros((h, w), dtype=bool)
    for i in range(h):
        for j in range(w):
            vals = []
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    ii, jj = i + di, j + dj
                    if 0 <= ii < h and 0 <= jj < w:
                        vals.append(int(mask[ii, jj]))
                    else:
                        vals.append(0)
            vals.sort()
            out[i, j] = bool(vals[4])
    return out


def oracle_components(mask: np.ndarray):
    """BFS flood fill, 8-connectivity.

    Returns (labels, list of (area, bbox, centroid)) where bbox is
    (rmin, cmin, rmax, cmax) inclusive.
    """
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    stats = []
    next_label = 0
    for si in range(h):
        for sj in range(w):
            if not mask[si, sj] or labels[si, sj]:
                continue
            next_label += 1
            queue = deque([(si, sj)])
            labels[si, sj] = next_label
            pixels = []
            while queue:
                i, j = queue.popleft()
                pixels.append((i, j))
                for di in (-1, 0, 1):
                    for dj in (-1, 0, 1):
                        ii, jj = i + di, j + dj
                        if (0 <= ii < h and 0 <= jj < w
                                and mask[ii, jj] and not labels[ii, jj]):
                            labels[ii, jj] = next_label
                            queue.append((ii, jj))
            rows = [p[0] for p in pixels]
            cols = [p[1] for p in pixels]
            area = len(pixels)
            bbox = (min(rows), min(cols), max(rows), max(cols))
            centroid = (sum(rows) / area, sum(cols) / area)
            stats.append((area, bbox, centroid))
    return labels, stats


def oracle_distance_transform(mask: np.ndarray) -> np.ndarray:
    """Exhaustive nearest-unset-pixel search (un-normalized distances)."""
    h, w = mask.shape
    out = np.zeros((h, w))
    unset = np.argwhere(~mask)
    if len(unset) == 0:
        out[mask] = np.inf
        return out
    set_px = np.argwhere(mask)
    for i, j in set_px:
        d2 = (unset[:, 0] - i) ** 2 + (unset[:, 1] - j) ** 2
        out[i, j] = np.sqrt(d2.min())
    return out


def oracle_dt_cores(mask: np.ndarray, threshold: float, min_area: int) -> int:
    """Count cores of the normalized distance transform above a threshold,
    keeping only cores larger than ``min_area`` pixels.  Built entirely from
    the other oracles in this file.
    """
    dist = oracle_distance_transform(mask)
    labels, stats = oracle_components(mask)
    norm = np.zeros_like(dist)
    for idx in range(1, len(stats) + 1):
        sel = labels == idx
        peak = dist[sel].max()
        if peak > 0:
            norm[sel] = dist[sel] / peak
    _, core_stats = oracle_components(norm > threshold)
    return sum(1 for area, _, _ in core_stats if area > min_area)


def oracle_max_matching(allowed: np.ndarray) -> int:
    """Maximum bipartite matching size by exhaustive recursion.

    ``allowed[i, j]`` says whether left node i may pair with right node j.
    Exponential; meant for sides of at most ~8 nodes.
    """
    na, nb = allowed.shape

    def best(i: int, used: int) -> int:
        if i == na:
            return 0
        top = best(i + 1, used)
        for j in range(nb):
            if allowed[i, j] and not used & (1 << j):
                top = max(top, 1 + best(i + 1, used | (1 << j)))
        return top

    return best(0, 0)


def oracle_tsp_open(costs, start: int = 0) -> float:
    """Cheapest open path from ``start`` through all nodes, by brute force.

    Exhaustive over every permutation; meant for at most ~8 nodes.
    """
    n = len(costs)
    others = [i for i in range(n) if i != start]
    best = float("inf")
    for perm in itertools.permutations(others):
        order = [start, *perm]
        cost = sum(costs[order[i], order[i + 1]] for i in range(n - 1))
        best = min(best, cost)
    return best
