"""Unit tests for the pixel primitives, oracle-first."""

import numpy as np
import pytest

from orchard import imgproc

from oracles import (oracle_components, oracle_distance_transform,
                     oracle_in_range, oracle_median3x3, oracle_morph,
                     oracle_rgb_to_hsv)


def random_mask(rng, h, w, density=None):
    if density is None:
        density = rng.uniform(0.2, 0.8)
    return rng.random((h, w)) < density


# ---------------------------------------------------------------- rgb_to_hsv

def test_hsv_pure_red():
    img = np.full((1, 1, 3), (255, 0, 0), dtype=np.uint8)
    h, s, v = imgproc.rgb_to_hsv(img)[0, 0]
    assert (h, s, v) == (0.0, 1.0, 1.0)


def test_hsv_gray_has_zero_saturation_and_hue():
    img = np.full((1, 1, 3), (128, 128, 128), dtype=np.uint8)
    h, s, v = imgproc.rgb_to_hsv(img)[0, 0]
    assert h == 0.0 and s == 0.0
    assert v == pytest.approx(128 / 255)


def test_hsv_pure_blue():
    img = np.full((1, 1, 3), (0, 0, 255), dtype=np.uint8)
    h, s, v = imgproc.rgb_to_hsv(img)[0, 0]
    assert (h, s, v) == (240.0, 1.0, 1.0)


def test_hsv_matches_colorsys_oracle():
    rng = np.random.default_rng(101)
    img = rng.integers(0, 256, (24, 32, 3), dtype=np.uint8)
    got = imgproc.rgb_to_hsv(img).astype(np.float64)
    want = oracle_rgb_to_hsv(img)
    # single-precision conversion: hue good to ~2e-4 on the 0..360 scale
    assert np.allclose(got[..., 0], want[..., 0], atol=5e-4)
    assert np.allclose(got[..., 1:], want[..., 1:], atol=1e-6)
    assert got[..., 0].max() < 360.0


def test_hsv_rejects_bad_shape():
    with pytest.raises(ValueError):
        imgproc.rgb_to_hsv(np.zeros((4, 4), dtype=np.uint8))


# -------------------------------------------------------------- hsv_in_range

def test_in_range_full_bounds_all_ones():
    rng = np.random.default_rng(2)
    img = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
    hsv = imgproc.rgb_to_hsv(img)
    mask = imgproc.hsv_in_range(hsv, (0, 0, 0), (360, 1, 1))
    assert mask.all()


def test_in_range_wraparound_catches_red():
    hsv = np.array([[[0.0, 1.0, 1.0], [355.0, 0.8, 0.9], [180.0, 1.0, 1.0]]])
    mask = imgproc.hsv_in_range(hsv, (350, 0, 0), (10, 1, 1))
    assert mask.tolist() == [[True, True, False]]


def test_in_range_matches_scalar_oracle():
    rng = np.random.default_rng(33)
    img = rng.integers(0, 256, (20, 20, 3), dtype=np.uint8)
    hsv = imgproc.rgb_to_hsv(img)
    for lo, hi in [((20, 0.1, 0.2), (200, 0.9, 1.0)),
                   ((340, 0.0, 0.0), (25, 1.0, 1.0)),
                   ((0, 0.5, 0.5), (360, 1.0, 1.0))]:
        got = imgproc.hsv_in_range(hsv, lo, hi)
        assert np.array_equal(got, oracle_in_range(hsv, lo, hi))


# --------------------------------------------------------------------- morph

def test_dilate_single_pixel_horizontal_run():
    mask = np.zeros((5, 40), dtype=bool)
    mask[2, 20] = True
    out = imgproc.morph(mask, (1, 25), "dilate")
    expect = np.zeros_like(mask)
    expect[2, 20 - 12:20 + 13] = True
    assert np.array_equal(out, expect)


def test_dilate_clips_at_border():
    mask = np.zeros((3, 10), dtype=bool)
    mask[1, 0] = True
    out = imgproc.morph(mask, (1, 9), "dilate")
    assert out[1].tolist() == [True] * 5 + [False] * 5


def test_morph_all_zero_stays_zero():
    mask = np.zeros((12, 12), dtype=bool)
    for mode in ("dilate", "erode"):
        assert not imgproc.morph(mask, (3, 3), mode).any()


def test_morph_kernel_too_large_raises():
    mask = np.zeros((10, 10), dtype=bool)
    with pytest.raises(ValueError):
        imgproc.morph(mask, (11, 3), "dilate")
    with pytest.raises(ValueError):
        imgproc.morph(mask, (3, 0), "dilate")
    with pytest.raises(ValueError):
        imgproc.morph(mask, (3, 3), "open")


def test_morph_matches_naive_oracle():
    rng = np.random.default_rng(7)
    for _ in range(12):
        h, w = rng.integers(6, 48, size=2)
        mask = random_mask(rng, h, w)
        for kernel in [(1, 5), (5, 1), (3, 3), (2, 4), (1, 25) if w >= 25 else (1, 3)]:
            if kernel[0] > h or kernel[1] > w:
                continue
            for mode in ("dilate", "erode"):
                got = imgproc.morph(mask, kernel, mode)
                assert np.array_equal(got, oracle_morph(mask, kernel, mode)), \
                    (kernel, mode)


def test_morph_duality_interior():
    rng = np.random.default_rng(8)
    mask = random_mask(rng, 32, 32)
    k = (3, 5)
    eroded = imgproc.morph(mask, k, "erode")
    dual = ~imgproc.morph(~mask, k, "dilate")
    assert np.array_equal(eroded[3:-3, 3:-3], dual[3:-3, 3:-3])


def test_dilation_monotone():
    rng = np.random.default_rng(9)
    m2 = random_mask(rng, 24, 24)
    m1 = m2 & random_mask(rng, 24, 24)
    d1 = imgproc.morph(m1, (3, 3), "dilate")
    d2 = imgproc.morph(m2, (3, 3), "dilate")
    assert not (d1 & ~d2).any()


# ----------------------------------------------------------------- median3x3

def test_median_clears_isolated_pixel():
    mask = np.zeros((7, 7), dtype=bool)
    mask[3, 3] = True
    assert not imgproc.median3x3(mask).any()


def test_median_keeps_block_interior():
    mask = np.zeros((14, 14), dtype=bool)
    mask[2:12, 2:12] = True
    out = imgproc.median3x3(mask)
    assert out[3:11, 3:11].all()


def test_median_matches_sort_oracle():
    rng = np.random.default_rng(11)
    for _ in range(10):
        h, w = rng.integers(4, 40, size=2)
        mask = random_mask(rng, h, w)
        assert np.array_equal(imgproc.median3x3(mask), oracle_median3x3(mask))


def test_median_idempotent_on_rectangle():
    mask = np.zeros((16, 16), dtype=bool)
    mask[4:12, 4:12] = True
    once = imgproc.median3x3(mask)
    twice = imgproc.median3x3(once)
    assert np.array_equal(once, twice)


# ------------------------------------------------------ connected_components

def test_components_diagonal_touch_is_one():
    mask = np.zeros((4, 4), dtype=bool)
    mask[1, 1] = mask[2, 2] = True
    regions = imgproc.connected_components(mask)
    assert regions.count == 1
    assert regions.areas.tolist() == [2]
    assert regions.bboxes.tolist() == [[1, 1, 2, 2]]
    assert np.allclose(regions.centroids, [[1.5, 1.5]])


def test_components_empty_mask():
    regions = imgproc.connected_components(np.zeros((5, 5), dtype=bool))
    assert regions.count == 0
    assert regions.labels.max() == 0


def test_components_match_flood_fill_oracle():
    rng = np.random.default_rng(13)
    for _ in range(10):
        h, w = rng.integers(4, 40, size=2)
        mask = random_mask(rng, h, w, density=rng.uniform(0.15, 0.6))
        regions = imgproc.connected_components(mask)
        _, stats = oracle_components(mask)
        assert regions.count == len(stats)
        got = sorted(zip(regions.areas.tolist(),
                         map(tuple, regions.bboxes.tolist()),
                         map(tuple, np.round(regions.centroids, 9).tolist())))
        want = sorted((a, b, tuple(np.round(c, 9))) for a, b, c in stats)
        assert got == want


def test_components_areas_sum_to_popcount():
    rng = np.random.default_rng(14)
    mask = random_mask(rng, 30, 30)
    regions = imgproc.connected_components(mask)
    assert regions.areas.sum() == mask.sum()
    assert set(np.unique(regions.labels)) <= set(range(regions.count + 1))


# --------------------------------------- distance_transform_normalized

def test_dt_single_pixel_is_one():
    mask = np.zeros((5, 5), dtype=bool)
    mask[2, 2] = True
    out = imgproc.distance_transform_normalized(mask)
    assert out[2, 2] == 1.0
    assert out.sum() == 1.0


def test_dt_disc_peaks_at_center():
    yy, xx = np.mgrid[:41, :41]
    mask = (yy - 20) ** 2 + (xx - 20) ** 2 <= 15 ** 2
    out = imgproc.distance_transform_normalized(mask)
    assert out[20, 20] == 1.0
    # decreasing outward along the +x radius
    radial = out[20, 20:36]
    assert np.all(np.diff(radial) <= 1e-12)
    assert out[~mask].max() == 0.0


def test_dt_matches_brute_force_oracle():
    rng = np.random.default_rng(17)
    for _ in range(6):
        h, w = rng.integers(8, 64, size=2)
        mask = random_mask(rng, h, w, density=rng.uniform(0.3, 0.7))
        want = oracle_distance_transform(mask)
        labels, stats = oracle_components(mask)
        norm = np.zeros_like(want)
        for idx in range(1, len(stats) + 1):
            sel = labels == idx
            norm[sel] = want[sel] / want[sel].max()
        got = imgproc.distance_transform_normalized(mask)
        assert np.abs(got - norm).max() <= 1e-6


def test_dt_empty_and_full_masks():
    assert imgproc.distance_transform_normalized(
        np.zeros((4, 4), dtype=bool)).sum() == 0.0
    assert imgproc.distance_transform_normalized(
        np.ones((4, 4), dtype=bool)).min() == 1.0


def test_dt_threshold_subcomponents_nest():
    rng = np.random.default_rng(19)
    mask = imgproc.morph(random_mask(rng, 48, 48, 0.35), (3, 3), "dilate")
    out = imgproc.distance_transform_normalized(mask)
    parents = imgproc.connected_components(mask)
    for theta in (0.3, 0.7, 1.0):
        cores = imgproc.connected_components(out >= theta)
        for i in range(1, cores.count + 1):
            parent_ids = np.unique(parents.labels[cores.labels == i])
            assert len(parent_ids) == 1 and parent_ids[0] > 0
