"""Two-side fusion tests: mirroring, greedy matching, and its properties."""

import numpy as np
import pytest

from orchard import detector as det
from orchard import fusion
from orchard import scene as sc

from oracles import oracle_max_matching


def observation(bed_index, side, uvs, missing=False):
    """Build a located BedObservation.

    ``uvs`` are raw camera-frame coordinates: a both-sides fruit at fused
    lateral u appears as +u in the A frame and -u in the B frame.
    """
    dets = [det.FruitDetection(centroid=(10.0, 10.0), area=150,
                               bbox=(0, 0, 9, 9), slot="centre",
                               local_uv=(float(u), float(v)))
            for u, v in uvs]
    return det.BedObservation(bed_index=bed_index, side=side,
                              slots=(dets, [], []), missing=missing)


def mirrored(uvs):
    return [(-u, v) for u, v in uvs]


def spaced_points(rng, n, min_dist):
    points = []
    while len(points) < n:
        p = rng.uniform(-0.9, 0.9, 2)
        if all(np.hypot(p[0] - q[0], p[1] - q[1]) > min_dist for q in points):
            points.append(p)
    return points


# ------------------------------------------------------------------ basics

def test_empty_b_side_counts_a_alone():
    a = observation(4, "A", [(0.1, 0.2), (-0.3, 0.5)])
    b = observation(4, "B", [])
    fused = fusion.merge_bed_sides(a, b)
    assert fused.count == 2
    assert fused.matched_pairs == []
    assert len(fused.singletons) == 2
    assert not fused.partially_observed


def test_mirrored_fruit_matches_once():
    a = observation(7, "A", [(0.25, 0.4)])
    b = observation(7, "B", mirrored([(0.25, 0.4)]))
    fused = fusion.merge_bed_sides(a, b)
    assert fused.count == 1
    assert len(fused.matched_pairs) == 1
    assert fused.singletons == []


def test_mixed_bed_counts_every_fruit_once():
    shared = [(0.3, 0.2), (-0.4, 0.6)]
    a_only = [(0.0, -0.3)]
    b_only = [(0.55, 0.0)]
    a = observation(12, "A", shared + a_only)
    b = observation(12, "B", mirrored(shared + b_only))
    fused = fusion.merge_bed_sides(a, b)
    assert fused.count == 4
    assert len(fused.matched_pairs) == 2
    assert len(fused.singletons) == 2
    assert fused.bed_index == 12


def test_matching_tolerates_small_observation_noise():
    a = observation(3, "A", [(0.30, 0.20)])
    b = observation(3, "B", mirrored([(0.302, 0.197)]))
    fused = fusion.merge_bed_sides(a, b)
    assert fused.count == 1 and len(fused.matched_pairs) == 1


# ------------------------------------------------------------------ errors

def test_bed_index_mismatch_rejected():
    a = observation(3, "A", [])
    b = observation(4, "B", [])
    with pytest.raises(ValueError):
        fusion.merge_bed_sides(a, b)


def test_same_side_twice_rejected():
    a1 = observation(3, "A", [])
    a2 = observation(3, "A", [])
    with pytest.raises(ValueError):
        fusion.merge_bed_sides(a1, a2)


def test_unlocated_detections_rejected():
    bare = det.FruitDetection(centroid=(5.0, 5.0), area=120,
                              bbox=(0, 0, 9, 9), slot="left")
    a = det.BedObservation(bed_index=2, side="A", slots=([bare], [], []))
    b = observation(2, "B", [])
    with pytest.raises(ValueError):
        fusion.merge_bed_sides(a, b)


def test_bed_count_checks_its_invariant():
    with pytest.raises(ValueError):
        fusion.BedCount(bed_index=1, count=2, matched_pairs=[],
                        singletons=[])


# ---------------------------------------------------------- missing sides

def test_missing_side_counts_other_alone():
    a = observation(9, "A", [], missing=True)
    b = observation(9, "B", mirrored([(0.1, 0.1), (0.4, -0.2), (-0.5, 0.3)]))
    fused = fusion.merge_bed_sides(a, b)
    assert fused.count == 3
    assert fused.partially_observed
    assert len(fused.singletons) == 3
    assert fused.matched_pairs == []


def test_both_sides_missing_gives_zero():
    a = observation(9, "A", [], missing=True)
    b = observation(9, "B", [], missing=True)
    fused = fusion.merge_bed_sides(a, b)
    assert fused.count == 0 and fused.partially_observed


# -------------------------------------------------------------- properties

def test_merge_is_symmetric_in_argument_order():
    rng = np.random.default_rng(1)
    for _ in range(50):
        na, nb = rng.integers(0, 7, 2)
        a = observation(5, "A", rng.uniform(-0.9, 0.9, (na, 2)))
        b = observation(5, "B", rng.uniform(-0.9, 0.9, (nb, 2)))
        ab = fusion.merge_bed_sides(a, b)
        ba = fusion.merge_bed_sides(b, a)
        assert ab.count == ba.count
        assert len(ab.matched_pairs) == len(ba.matched_pairs)


def test_count_bounds():
    rng = np.random.default_rng(2)
    for _ in range(100):
        na, nb = rng.integers(0, 8, 2)
        a = observation(5, "A", rng.uniform(-0.9, 0.9, (na, 2)))
        b = observation(5, "B", rng.uniform(-0.9, 0.9, (nb, 2)))
        radius = float(rng.uniform(0.0, 0.5))
        fused = fusion.merge_bed_sides(a, b, match_radius=radius)
        assert max(na, nb) <= fused.count <= na + nb


def test_zero_radius_sums_both_sides():
    rng = np.random.default_rng(3)
    for _ in range(20):
        na, nb = rng.integers(0, 6, 2)
        pts = rng.uniform(-0.9, 0.9, (max(na, nb), 2))
        # identical coordinates on both sides: still no match at radius 0
        a = observation(5, "A", pts[:na])
        b = observation(5, "B", mirrored(pts[:nb]))
        fused = fusion.merge_bed_sides(a, b, match_radius=0.0)
        assert fused.count == na + nb


def test_infinite_radius_keeps_larger_side():
    rng = np.random.default_rng(4)
    for _ in range(20):
        na, nb = rng.integers(0, 8, 2)
        a = observation(5, "A", rng.uniform(-0.9, 0.9, (na, 2)))
        b = observation(5, "B", rng.uniform(-0.9, 0.9, (nb, 2)))
        fused = fusion.merge_bed_sides(a, b, match_radius=np.inf)
        assert fused.count == max(na, nb)


def test_greedy_equals_bruteforce_on_spaced_fruits():
    rng = np.random.default_rng(5)
    radius = 0.07
    for _ in range(40):
        n = int(rng.integers(1, 9))
        points = spaced_points(rng, n, min_dist=2.2 * radius)
        kinds = rng.integers(0, 3, n)    # 0: A only, 1: B only, 2: both
        noise = lambda: rng.uniform(-radius / 5, radius / 5, 2)
        a_pts = [p + noise() for p, k in zip(points, kinds) if k != 1]
        b_pts = [p + noise() for p, k in zip(points, kinds) if k != 0]
        a = observation(6, "A", a_pts)
        b = observation(6, "B", mirrored(b_pts))
        fused = fusion.merge_bed_sides(a, b, match_radius=radius)
        assert fused.count == n
        assert len(fused.matched_pairs) == int(np.sum(kinds == 2))


def test_greedy_never_beats_bruteforce_matching():
    rng = np.random.default_rng(6)
    for _ in range(60):
        na, nb = rng.integers(0, 8, 2)
        pa = rng.uniform(-0.5, 0.5, (na, 2))
        pb = rng.uniform(-0.5, 0.5, (nb, 2))
        radius = float(rng.uniform(0.02, 0.6))
        a = observation(6, "A", pa)
        b = observation(6, "B", mirrored(pb))
        fused = fusion.merge_bed_sides(a, b, match_radius=radius)
        allowed = np.zeros((na, nb), dtype=bool)
        for i in range(na):
            for j in range(nb):
                allowed[i, j] = np.hypot(*(pa[i] - pb[j])) < radius
        assert len(fused.matched_pairs) <= oracle_max_matching(allowed)
        assert fused.count >= na + nb - oracle_max_matching(allowed)


# ------------------------------------------------------------- end to end

def test_fused_counts_match_ground_truth_on_generated_scene():
    scene = sc.generate_scene(11)
    for bed in scene.beds:
        obs_a = det.analyze_frame(sc.capture_frame(scene, bed.index, "A"),
                                  bed.plant_type)[0]
        obs_b = det.analyze_frame(sc.capture_frame(scene, bed.index, "B"),
                                  bed.plant_type)[0]
        fused = fusion.merge_bed_sides(obs_a, obs_b)
        assert fused.count == bed.gt_total, bed.index
        both = sum(1 for f in bed.iter_fruits() if f.sides == "AB")
        assert len(fused.matched_pairs) == both
        assert not fused.partially_observed
