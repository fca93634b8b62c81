"""Two-side observation fusion.

A fruit growing near a bed's mid-plane is visible from both faces, so
adding the two side counts would count it twice.  Both observations
carry bed-local (lateral, vertical) coordinates measured along each
camera's own right axis; mirroring side B's lateral coordinate about
the bed's vertical mid-plane brings both sides into one frame, where a
both-sides fruit appears at (nearly) the same point.  Greedy
closest-pair matching under ``match_radius`` then identifies those
duplicates; everything unmatched was seen from one side only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .detector import BedObservation, FruitDetection

DEFAULT_MATCH_RADIUS = 0.07


@dataclass
class BedCount:
    """Fused fruit count for one bed."""

    bed_index: int
    count: int
    matched_pairs: list[tuple[FruitDetection, FruitDetection]] = \
        field(default_factory=list)
    singletons: list[FruitDetection] = field(default_factory=list)
    partially_observed: bool = False

    def __post_init__(self) -> None:
        if self.count != len(self.matched_pairs) + len(self.singletons):
            raise ValueError("count must equal |matched_pairs| + |singletons|")


def _located(obs: BedObservation) -> list[FruitDetection]:
    dets = obs.detections
    for d in dets:
        if d.local_uv is None:
            raise ValueError("merge_bed_sides needs located detections "
                             "(local_uv populated)")
    return dets


def _greedy_pairs(pos_a: np.ndarray, pos_b: np.ndarray,
                  match_radius: float) -> list[tuple[int, int]]:
    """Closest-first pairing of two point sets, each point used once."""
    candidates = []
    for i, pa in enumerate(pos_a):
        for j, pb in enumerate(pos_b):
            d = float(np.hypot(pa[0] - pb[0], pa[1] - pb[1]))
            if d < match_radius:
                candidates.append((d, i, j))
    candidates.sort()
    used_a: set[int] = set()
    used_b: set[int] = set()
    pairs = []
    for _, i, j in candidates:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((i, j))
    return pairs


def merge_bed_sides(obs_a: BedObservation, obs_b: BedObservation,
                    match_radius: float = DEFAULT_MATCH_RADIUS) -> BedCount:
    """Fuse the two side observations of one bed into a fruit count.

    Observations may be given in either side order.  A flagged-missing
    side contributes nothing and marks the bed partially observed; the
    other side is counted alone.  Matching is greedy closest-first on
    planar distance after mirroring B's lateral coordinate, strictly
    below ``match_radius`` (so radius 0 matches nothing).
    """
    if obs_a.bed_index != obs_b.bed_index:
        raise ValueError(f"cannot merge observations of different beds: "
                         f"{obs_a.bed_index} vs {obs_b.bed_index}")
    if {obs_a.side, obs_b.side} != {"A", "B"}:
        raise ValueError("merge_bed_sides needs one observation per side")
    if obs_a.side == "B":
        obs_a, obs_b = obs_b, obs_a

    if obs_a.missing or obs_b.missing:
        present = [] if (obs_a.missing and obs_b.missing) else \
            _located(obs_b if obs_a.missing else obs_a)
        return BedCount(bed_index=obs_a.bed_index, count=len(present),
                        singletons=list(present), partially_observed=True)

    dets_a = _located(obs_a)
    dets_b = _located(obs_b)
    pos_a = np.array([d.local_uv for d in dets_a], dtype=float).reshape(-1, 2)
    pos_b = np.array([d.local_uv for d in dets_b], dtype=float).reshape(-1, 2)
    pos_b = pos_b * np.array([-1.0, 1.0])    # mirror about the mid-plane

    pairs = _greedy_pairs(pos_a, pos_b, match_radius)
    matched_a = {i for i, _ in pairs}
    matched_b = {j for _, j in pairs}
    singletons = [d for i, d in enumerate(dets_a) if i not in matched_a]
    singletons += [d for j, d in enumerate(dets_b) if j not in matched_b]
    matched = [(dets_a[i], dets_b[j]) for i, j in pairs]
    return BedCount(bed_index=obs_a.bed_index,
                    count=len(matched) + len(singletons),
                    matched_pairs=matched, singletons=singletons)
