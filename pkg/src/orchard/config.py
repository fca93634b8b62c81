"""Configuration dataclasses and JSON loading for the whole pipeline.

Every tunable lives here so a single JSON file can reproduce a run.  The
``ORCHARD_CONFIG`` environment variable names a default config file; CLI
flags override it.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

ENV_CONFIG_VAR = "ORCHARD_CONFIG"

PLANT_TYPES = ("tomato", "pepper", "eggplant")


class ConfigError(ValueError):
    """Raised for malformed or infeasible configuration."""


@dataclass
class Bounds:
    """Axis-aligned allowed flight volume in meters."""

    x_min: float = -2.0
    x_max: float = 22.0
    y_min: float = -3.25
    y_max: float = 10.75
    z_min: float = 0.25
    z_max: float = 2.75

    def contains(self, x: float, y: float, z: float) -> bool:
        return (self.x_min <= x <= self.x_max
                and self.y_min <= y <= self.y_max
                and self.z_min <= z <= self.z_max)


@dataclass
class LayoutConfig:
    """Warehouse grid of plant beds.

    Beds are arranged in ``rows`` rows along y, ``cols`` beds per row along
    x.  A bed's face is ``bed_width`` x ``bed_height`` (x by z); the bed is
    ``bed_depth`` thick along y.  Side A is the +y face, side B the -y face.
    """

    rows: int = 3
    cols: int = 9
    bed_width: float = 2.0
    bed_height: float = 1.5
    bed_depth: float = 1.0
    bed_gap: float = 0.25          # lateral gap between beds in a row
    row_pitch: float = 4.0         # aisle width = row_pitch - bed_depth
    first_bed_x: float = 1.0       # x of the first bed center in every row
    first_row_y: float = 0.0
    bed_z_center: float = 1.0
    capture_standoff: float = 1.75  # camera distance from the bed face
    start_position: tuple[float, float, float] = (-1.0, -2.25, 1.0)
    start_yaw: float = 0.0
    # bed face structure: one solid white backing board filling the gray
    # frame, with three plant slots (lateral fruit/foliage anchors) on it
    slot_pitch: float = 0.65        # u offset of the side slots
    board_height: float = 1.2
    frame_thickness: float = 0.05

    @property
    def slot_offsets(self) -> tuple[float, float, float]:
        return (-self.slot_pitch, 0.0, self.slot_pitch)

    @property
    def n_beds(self) -> int:
        return self.rows * self.cols

    @property
    def aisle_width(self) -> float:
        return self.row_pitch - self.bed_depth

    def bed_center(self, index: int) -> tuple[float, float, float]:
        """Center of bed ``index`` (1-based, row-major)."""
        i = index - 1
        r, c = divmod(i, self.cols)
        x = self.first_bed_x + c * (self.bed_width + self.bed_gap)
        y = self.first_row_y + r * self.row_pitch
        return (x, y, self.bed_z_center)


@dataclass
class FruitConfig:
    """Per-plant fruit generation parameters."""

    count_min: int = 0
    count_max: int = 6
    radius_min: float = 0.045
    radius_max: float = 0.06
    # Minimum separation between any two fruit centers of one bed in the
    # face plane (u, v).  Keeps projections disjoint and makes the two-side
    # merge unambiguous.
    min_planar_separation: float = 0.18
    single_side_prob: float = 0.25
    lateral_extent: float = 0.22    # around the slot center
    height_extent: float = 0.33     # around the bed z center
    depth_extent: float = 0.18      # max |y| offset of a single-side fruit
    depth_offset_min: float = 0.10  # min |y| offset of a single-side fruit


@dataclass
class FoliageConfig:
    blobs_per_plant: int = 12
    lateral_jitter: float = 0.13
    height_band: float = 0.38
    depth_jitter: float = 0.08
    rx_min: float = 0.10
    rx_max: float = 0.17
    ry_min: float = 0.05
    ry_max: float = 0.08
    rz_min: float = 0.08
    rz_max: float = 0.14


@dataclass
class Palette:
    """Flat-shading RGB colors used by the renderer (0..255 per channel)."""

    background: tuple[int, int, int] = (70, 75, 85)
    board: tuple[int, int, int] = (245, 245, 245)
    foliage: tuple[int, int, int] = (40, 140, 50)
    frame: tuple[int, int, int] = (105, 105, 110)
    tomato: tuple[int, int, int] = (210, 30, 35)
    pepper: tuple[int, int, int] = (230, 200, 30)
    eggplant: tuple[int, int, int] = (120, 35, 160)
    propeller: tuple[int, int, int] = (25, 25, 30)

    def fruit_color(self, plant_type: str) -> tuple[int, int, int]:
        return getattr(self, plant_type)


@dataclass
class SceneConfig:
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    bounds: Bounds = field(default_factory=Bounds)
    fruit: FruitConfig = field(default_factory=FruitConfig)
    foliage: FoliageConfig = field(default_factory=FoliageConfig)
    palette: Palette = field(default_factory=Palette)
    propellers_enabled: bool = False
    propeller_radius_px: int = 85   # quarter-disc radius at each image corner
    propeller_depth: float = 0.05


@dataclass
class CameraConfig:
    width: int = 640
    height: int = 480
    focal: float = 525.0


@dataclass
class HsvRange:
    """Inclusive HSV box; ``h_lo > h_hi`` means a wraparound hue interval."""

    h_lo: float
    h_hi: float
    s_lo: float = 0.0
    s_hi: float = 1.0
    v_lo: float = 0.0
    v_hi: float = 1.0

    def as_tuples(self) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
        return (self.h_lo, self.s_lo, self.v_lo), (self.h_hi, self.s_hi, self.v_hi)


@dataclass
class ColorProfile:
    """Named HSV ranges consumed by the detector."""

    tomato: HsvRange = field(default_factory=lambda: HsvRange(350.0, 10.0, 0.4, 1.0, 0.3, 1.0))
    pepper: HsvRange = field(default_factory=lambda: HsvRange(45.0, 65.0, 0.4, 1.0, 0.3, 1.0))
    eggplant: HsvRange = field(default_factory=lambda: HsvRange(265.0, 290.0, 0.4, 1.0, 0.3, 1.0))
    foliage: HsvRange = field(default_factory=lambda: HsvRange(90.0, 150.0, 0.4, 1.0, 0.3, 1.0))
    board: HsvRange = field(default_factory=lambda: HsvRange(0.0, 360.0, 0.0, 0.1, 0.85, 1.0))
    propeller: HsvRange = field(default_factory=lambda: HsvRange(0.0, 360.0, 0.0, 0.5, 0.0, 0.2))

    def fruit_range(self, plant_type: str) -> HsvRange:
        if plant_type not in ("tomato", "pepper", "eggplant"):
            raise ConfigError(f"unknown plant type: {plant_type!r}")
        return getattr(self, plant_type)

    def validate(self) -> None:
        """Fruit hue intervals must be pairwise disjoint."""
        def hue_set(r: HsvRange) -> list[tuple[float, float]]:
            if r.h_lo > r.h_hi:
                return [(r.h_lo, 360.0), (0.0, r.h_hi)]
            return [(r.h_lo, r.h_hi)]

        names = ("tomato", "pepper", "eggplant")
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                for lo1, hi1 in hue_set(getattr(self, a)):
                    for lo2, hi2 in hue_set(getattr(self, b)):
                        if max(lo1, lo2) <= min(hi1, hi2):
                            raise ConfigError(f"fruit hue ranges overlap: {a} vs {b}")


@dataclass
class DetectorParams:
    """Pixel thresholds at the 640x480 reference resolution.

    Area-like thresholds scale linearly with the actual pixel count over
    the reference pixel count.
    """

    bed_area_min: float = 100_000.0
    fruit_area_min: float = 100.0
    fruit_bbox_area_min: float = 200.0
    dt_threshold: float = 0.7
    dt_core_area_min: float = 10.0
    depth_gate: float = 4.25         # midway between near and far bed rows
    reference_pixels: int = 640 * 480
    fruit_radius_max: float = 0.06   # cap for the surface-to-center push
    face_halfwidth: float = 1.0      # lateral half extent of a bed face
    face_tolerance: float = 0.05     # accept detections this far off the face

    def scale(self, width: int, height: int) -> float:
        return (width * height) / float(self.reference_pixels)

    def validate(self) -> None:
        if not (0.0 < self.dt_threshold <= 1.0):
            raise ConfigError("dt_threshold must lie in (0, 1]")
        for name in ("bed_area_min", "fruit_area_min", "fruit_bbox_area_min",
                     "dt_core_area_min", "depth_gate"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")


@dataclass
class PlannerConfig:
    v_max: float = 2.0
    a_max: float = 1.0
    standoff: float | None = None     # None: use the scene's capture_standoff
    grid_resolution: float = 0.25
    nodes_per_segment: int = 12
    dwell: float = 1.0                # capture hold at each waypoint, seconds
    drone_radius: float = 0.3
    clearance_margin: float = 0.2     # extra inflation beyond the drone radius
    capture_speed_eps: float = 0.05
    match_radius: float = 0.07        # two-side fusion pairing distance
    sample_dt: float = 0.02

    @property
    def inflation(self) -> float:
        return self.drone_radius + self.clearance_margin


@dataclass
class ScoringConfig:
    t_base: float = 100.0
    d_base: float = 150.0


@dataclass
class AppConfig:
    scene: SceneConfig = field(default_factory=SceneConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)
    profile: ColorProfile = field(default_factory=ColorProfile)
    detector: DetectorParams = field(default_factory=DetectorParams)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    scoring: ScoringConfig = field(default_factory=ScoringConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _build(cls, data: dict, path: str):
    """Construct a dataclass from a dict, recursing into dataclass fields."""
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    kwargs = {}
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"{path}: unknown key {key!r}")
        f = fields[key]
        sub = f.type if isinstance(f.type, type) else None
        # dataclass field types arrive as strings under `from __future__ import
        # annotations`; resolve the ones we own by name.
        type_name = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "")
        resolved = _DATACLASS_TYPES.get(type_name, sub if dataclasses.is_dataclass(sub) else None)
        if resolved is not None and isinstance(value, dict):
            kwargs[key] = _build(resolved, value, f"{path}.{key}")
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


_DATACLASS_TYPES = {
    cls.__name__: cls
    for cls in (Bounds, LayoutConfig, FruitConfig, FoliageConfig, Palette,
                SceneConfig, CameraConfig, HsvRange, ColorProfile,
                DetectorParams, PlannerConfig, ScoringConfig)
}


def config_from_dict(data: dict) -> AppConfig:
    cfg = _build(AppConfig, data, "config")
    cfg.profile.validate()
    cfg.detector.validate()
    return cfg


def load_config(path: str | None = None) -> AppConfig:
    """Load a config file, or defaults when no path is given.

    Falls back to the ``ORCHARD_CONFIG`` environment variable when ``path``
    is None.
    """
    if path is None:
        path = os.environ.get(ENV_CONFIG_VAR)
    if path is None:
        return AppConfig()
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data)


def save_config(cfg: AppConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(cfg.to_json())
        fh.write("\n")
