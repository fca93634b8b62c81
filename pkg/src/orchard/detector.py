"""Per-frame fruit detection.

The pipeline runs in three stages on one RGB + depth frame:

1. ``segment_beds``: the union of board-white and foliage-green pixels is
   dilated with a 1x25 then a 25x1 element, cleaned with a 3x3 median,
   intersected with the near-depth gate, and split into connected
   components; components larger than the bed-area threshold are the
   visible plant beds.  The depth gate removes bed rows visible in the
   background.
2. ``propeller_mask``: propeller-colored pixels, dilated 3x3.  The mask
   is subtracted from the fruit masks only.
3. ``count_fruits_in_region``: the bed region is cut into left / centre /
   right slots; per slot the fruit-colored mask goes through median 3x3,
   erode 3x3, dilate 3x3, then components below the area or bbox-area
   thresholds are dropped; the normalized distance transform of the
   survivors, binarized at ``dt_threshold``, splits touching fruits —
   each core above ``dt_core_area_min`` is one detection.

``analyze_frame`` composes the stages for an annotated capture frame and
converts detections into bed-local planar coordinates (meters) with the
depth map and the pinhole camera, producing one BedObservation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import imgproc
from .config import ColorProfile, DetectorParams, HsvRange

SLOT_NAMES = ("left", "centre", "right")


@dataclass(frozen=True)
class FruitDetection:
    """One counted fruit.

    ``centroid`` is the (row, col) of the distance-transform core in
    full-image pixels; ``area`` and ``bbox`` describe the parent
    component the core was split from.  ``local_uv`` is filled by
    analyze_frame: bed-local (lateral, vertical) meters, lateral along
    the camera's right axis so that the two sides of a bed see mirrored
    values.
    """

    centroid: tuple[float, float]
    area: int
    bbox: tuple[int, int, int, int]      # (row_min, col_min, row_max, col_max)
    slot: str
    local_uv: tuple[float, float] | None = None


@dataclass
class BedObservation:
    """All detections of the mission's fruit type on one bed side."""

    bed_index: int
    side: str
    slots: tuple[list[FruitDetection], list[FruitDetection], list[FruitDetection]] = \
        field(default_factory=lambda: ([], [], []))
    missing: bool = False

    def __post_init__(self) -> None:
        if self.side not in ("A", "B"):
            raise ValueError(f"side must be 'A' or 'B', got {self.side!r}")
        if not 1 <= self.bed_index <= 27:
            raise ValueError(f"bed_index must lie in 1..27, got {self.bed_index}")
        if len(self.slots) != len(SLOT_NAMES):
            raise ValueError("slots must hold exactly three detection lists")

    @property
    def detections(self) -> list[FruitDetection]:
        return [d for slot in self.slots for d in slot]

    @property
    def count(self) -> int:
        return sum(len(slot) for slot in self.slots)


def _in_range(hsv: np.ndarray, hsv_range: HsvRange) -> np.ndarray:
    lo, hi = hsv_range.as_tuples()
    return imgproc.hsv_in_range(hsv, lo, hi)


def _bed_regions(hsv, depth, profile: ColorProfile, params: DetectorParams):
    mask = _in_range(hsv, profile.board) | _in_range(hsv, profile.foliage)
    # 1x25 then 25x1 dilation, fused: dilating by two segments in sequence
    # equals one dilation by their Minkowski sum, the 25x25 box
    mask = imgproc.morph(mask, (25, 25), "dilate")
    mask = imgproc.median3x3(mask)
    mask &= depth <= params.depth_gate
    cc = imgproc.connected_components(mask)
    area_min = params.bed_area_min * params.scale(hsv.shape[1], hsv.shape[0])
    regions = []
    for i in range(cc.count):
        if cc.areas[i] > area_min:
            regions.append((cc.labels == i + 1,
                            tuple(int(v) for v in cc.bboxes[i])))
    return regions


def segment_beds(frame, profile: ColorProfile | None = None,
                 params: DetectorParams | None = None):
    """Bed regions of one frame as (mask, bbox) pairs.

    ``bbox`` is (row_min, col_min, row_max, col_max), inclusive.  Beds in
    background rows fall to the depth gate; fragments of neighboring beds
    fall to the area threshold.  Empty list when nothing qualifies.
    """
    profile = profile if profile is not None else ColorProfile()
    params = params if params is not None else DetectorParams()
    hsv = imgproc.rgb_to_hsv(frame.rgb)
    return _bed_regions(hsv, frame.depth, profile, params)


def propeller_mask(frame, profile: ColorProfile | None = None) -> np.ndarray:
    """Propeller-colored pixels dilated 3x3; AND-NOT this with fruit masks."""
    profile = profile if profile is not None else ColorProfile()
    hsv = imgproc.rgb_to_hsv(frame.rgb)
    mask = _in_range(hsv, profile.propeller)
    if not mask.any():
        return mask
    return imgproc.morph(mask, (3, 3), "dilate")


def slot_partition(region_bbox) -> tuple[tuple[int, int, int, int], ...]:
    """Cut a bed bbox into left / centre / right vertical thirds.

    The first two slots take floor(width / 3) columns each, the right
    slot the remainder, so the three sub-rectangles tile the region.
    """
    rmin, cmin, rmax, cmax = region_bbox
    width = cmax - cmin + 1
    if width < 3 or rmax < rmin:
        raise ValueError(f"region too small to partition: {region_bbox}")
    cuts = (cmin, cmin + width // 3, cmin + 2 * (width // 3), cmax + 1)
    return tuple((rmin, cuts[k], rmax, cuts[k + 1] - 1) for k in range(3))


def _check_partition(region, partition) -> None:
    rmin, cmin, rmax, cmax = region
    if len(partition) != len(SLOT_NAMES):
        raise ValueError("slot partition must have exactly three slots")
    col = cmin
    for sub in partition:
        if (sub[0], sub[2]) != (rmin, rmax) or sub[1] != col or sub[3] < sub[1]:
            raise ValueError(f"slot partition does not tile the region: {partition}")
        col = sub[3] + 1
    if col != cmax + 1:
        raise ValueError(f"slot partition does not tile the region: {partition}")


def count_fruits_in_region(hsv, region, partition, fruit_range: HsvRange,
                           params: DetectorParams,
                           exclude: np.ndarray | None = None):
    """Run the per-slot filter cascade inside one bed region.

    ``region`` is the bed's pixel bbox and ``partition`` its three slot
    sub-rectangles (see slot_partition).  ``exclude`` removes pixels
    (e.g. propellers) from the fruit masks before filtering.  Returns
    FruitDetections with full-image pixel coordinates; a component whose
    distance-transform cores all stay below the core-area threshold
    yields nothing, while a component with several cores (touching
    fruits) yields several detections.
    """
    _check_partition(region, partition)
    scale = params.scale(hsv.shape[1], hsv.shape[0])
    area_min = params.fruit_area_min * scale
    bbox_min = params.fruit_bbox_area_min * scale
    core_min = params.dt_core_area_min * scale
    detections = []
    for name, (rmin, cmin, rmax, cmax) in zip(SLOT_NAMES, partition):
        window = (slice(rmin, rmax + 1), slice(cmin, cmax + 1))
        mask = _in_range(hsv[window], fruit_range)
        if exclude is not None:
            mask &= ~exclude[window]
        mask = imgproc.median3x3(mask)
        mask = imgproc.morph(mask, (3, 3), "erode")
        mask = imgproc.morph(mask, (3, 3), "dilate")
        cc = imgproc.connected_components(mask)
        keep = np.zeros(cc.count + 1, dtype=bool)
        for i in range(cc.count):
            r0, c0, r1, c1 = cc.bboxes[i]
            bbox_area = (r1 - r0 + 1) * (c1 - c0 + 1)
            keep[i + 1] = cc.areas[i] >= area_min and bbox_area >= bbox_min
        survivors = keep[cc.labels]
        if not survivors.any():
            continue
        dist = imgproc.distance_transform_normalized(survivors)
        cores = imgproc.connected_components(dist >= params.dt_threshold)
        for i in range(cores.count):
            if cores.areas[i] <= core_min:
                continue
            crow, ccol = cores.centroids[i]
            parent = int(cc.labels[int(round(crow)), int(round(ccol))])
            if parent == 0:  # centroid of a concave core: sample a member pixel
                rows, cols = np.nonzero(cores.labels == i + 1)
                parent = int(cc.labels[rows[0], cols[0]])
            r0, c0, r1, c1 = (int(v) for v in cc.bboxes[parent - 1])
            detections.append(FruitDetection(
                centroid=(float(crow) + rmin, float(ccol) + cmin),
                area=int(cc.areas[parent - 1]),
                bbox=(r0 + rmin, c0 + cmin, r1 + rmin, c1 + cmin),
                slot=name))
    return detections


def _pixel_ray(camera, row: float, col: float) -> np.ndarray:
    u = (col - camera.cx) / camera.focal
    v = (row - camera.cy) / camera.focal
    direction = u * camera.right + v * camera.down + camera.forward
    return direction / np.linalg.norm(direction)


def _locate(camera, depth, fruit_mask, det: FruitDetection,
            params: DetectorParams) -> tuple[float, float] | None:
    """Bed-local (lateral, vertical) meters for one detection.

    Lateral is measured along the camera's right axis, vertical along
    world +z, both relative to the camera axis — which the capture pose
    centers on the bed.  Uses the median depth over the detection's
    fruit pixels, pushed from the visible cap to the sphere center.
    None when the detection lies off the bed face (plus tolerance).
    """
    r0, c0, r1, c1 = det.bbox
    window = (slice(r0, r1 + 1), slice(c0, c1 + 1))
    sample = fruit_mask[window] & np.isfinite(depth[window])
    if not sample.any():
        return None
    d_med = float(np.median(depth[window][sample]))
    r_est = min(np.sqrt(det.area / np.pi) * d_med / camera.focal,
                params.fruit_radius_max)
    # the median of the visible cap sits ~0.707 fruit radii short of the
    # sphere center (median of sqrt(1 - rho^2) over the projected disc)
    direction = _pixel_ray(camera, *det.centroid)
    point = np.asarray(camera.position) + direction * (d_med + 0.707 * r_est)
    lateral = float(np.dot(point - camera.position, camera.right))
    vertical = float(point[2] - camera.position[2])
    if abs(lateral) > params.face_halfwidth + params.face_tolerance:
        return None
    return (lateral, vertical)


def analyze_frame(frame, mission_plant: str,
                  profile: ColorProfile | None = None,
                  params: DetectorParams | None = None) -> list[BedObservation]:
    """Full detection pipeline for one annotated capture frame.

    The frame must carry (bed_index, side).  Returns a single-element
    list: the observation of the annotated bed, flagged ``missing`` when
    no bed region qualifies (so a harness can count missing beds).
    """
    profile = profile if profile is not None else ColorProfile()
    params = params if params is not None else DetectorParams()
    if frame.bed_index is None or frame.side is None:
        raise ValueError("analyze_frame needs a frame annotated with bed and side")
    fruit_range = profile.fruit_range(mission_plant)
    hsv = imgproc.rgb_to_hsv(frame.rgb)
    regions = _bed_regions(hsv, frame.depth, profile, params)
    if not regions:
        return [BedObservation(bed_index=frame.bed_index, side=frame.side,
                               missing=True)]
    center = np.array([frame.camera.cy, frame.camera.cx])
    _, bbox = min(regions, key=lambda reg: float(np.linalg.norm(
        np.array([(reg[1][0] + reg[1][2]) / 2.0,
                  (reg[1][1] + reg[1][3]) / 2.0]) - center)))
    exclude = _in_range(hsv, profile.propeller)
    if exclude.any():
        exclude = imgproc.morph(exclude, (3, 3), "dilate")
    detections = count_fruits_in_region(hsv, bbox, slot_partition(bbox),
                                        fruit_range, params, exclude=exclude)
    fruit_mask = _in_range(hsv, fruit_range) & ~exclude
    slots: tuple[list, list, list] = ([], [], [])
    for det in detections:
        uv = _locate(frame.camera, frame.depth, fruit_mask, det, params)
        if uv is None:
            continue
        placed = FruitDetection(centroid=det.centroid, area=det.area,
                                bbox=det.bbox, slot=det.slot, local_uv=uv)
        slots[SLOT_NAMES.index(det.slot)].append(placed)
    return [BedObservation(bed_index=frame.bed_index, side=frame.side,
                           slots=slots)]


def annotate(rgb: np.ndarray, detections) -> np.ndarray:
    """Burn detection boxes and core crosses into a copy of the image."""
    out = rgb.copy()
    box = np.array([255, 255, 255], dtype=np.uint8)
    cross = np.array([0, 0, 0], dtype=np.uint8)
    h, w = out.shape[:2]
    for det in detections:
        r0, c0, r1, c1 = det.bbox
        out[r0, c0:c1 + 1] = box
        out[r1, c0:c1 + 1] = box
        out[r0:r1 + 1, c0] = box
        out[r0:r1 + 1, c1] = box
        crow, ccol = (int(round(v)) for v in det.centroid)
        out[crow, max(ccol - 3, 0):min(ccol + 4, w)] = cross
        out[max(crow - 3, 0):min(crow + 4, h), ccol] = cross
    return out
