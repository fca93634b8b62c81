"""Synthetic warehouse scenes with exact ground truth, plus a software
renderer producing aligned RGB + depth frames.

World model
-----------
Beds sit on a rows x cols grid.  Each bed is a solid white backing board
in the bed's vertical mid-plane inside a gray frame, with three plant
slots holding green foliage ellipsoids and fruit spheres.  Side A is the
+y face of a bed, side B the -y face.

Every fruit records which sides it is visible from.  Visibility is not
left to chance: fruits seen from both sides are centered on the backing
board (one cap per side), one-side-only fruits sit wholly in front of it
(the board hides them from the other side), and the generator casts
sight rays from the side's capture pose and re-samples placements until
each visible fruit has a clear corridor (center, an inner ring, and an
outer silhouette ring of rays).  A final verification pass re-checks
every fruit, so the recorded visibility is exact by construction.

Rendering is flat-shaded z-buffered ray casting against four analytic
primitive kinds: spheres (fruits), axis-aligned ellipsoids (foliage),
rectangles and discs in y-planes (boards and frame bars; discs are kept
for hand-built scenes).  Depth is the Euclidean distance along the pixel
ray, infinity where nothing is hit.  The camera is a yaw-only pinhole:
forward (cos yaw, sin yaw, 0), right (sin yaw, -cos yaw, 0),
down (0, 0, -1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import (PLANT_TYPES, Bounds, ConfigError, LayoutConfig,
                     SceneConfig, _build)

SIDES = ("A", "B")

# palette indices in the renderer color table
_BG, _BOARD, _FOLIAGE, _FRAME, _TOMATO, _PEPPER, _EGGPLANT, _PROP = range(8)
_FRUIT_COLOR_INDEX = {"tomato": _TOMATO, "pepper": _PEPPER, "eggplant": _EGGPLANT}


# --------------------------------------------------------------------------
# domain types


@dataclass
class FruitSpec:
    center: tuple[float, float, float]
    radius: float
    sides: str                       # "A", "B", or "AB"
    # extra green disc (cx, cy, cz, radius), normal along y; never set by
    # the generator, available to hand-built scenes
    occluder: tuple[float, float, float, float] | None = None


@dataclass
class PlantSpec:
    slot_u: float                    # lateral offset from the bed center
    fruits: list[FruitSpec] = field(default_factory=list)
    # foliage blobs: (cx, cy, cz, rx, ry, rz), axis-aligned ellipsoids
    foliage: list[tuple[float, float, float, float, float, float]] = field(default_factory=list)


@dataclass
class BedSpec:
    index: int                       # 1-based
    plant_type: str
    center: tuple[float, float, float]
    yaw: float                       # reserved; always 0 in generated scenes
    plants: list[PlantSpec]
    gt_total: int = 0
    gt_side_a: int = 0
    gt_side_b: int = 0

    def iter_fruits(self):
        for plant in self.plants:
            yield from plant.fruits


@dataclass
class SceneSpec:
    rng_seed: int
    config: SceneConfig
    beds: list[BedSpec]
    _prims: "ScenePrimitives | None" = field(default=None, repr=False, compare=False)

    @property
    def layout(self) -> LayoutConfig:
        return self.config.layout

    @property
    def bounds(self) -> Bounds:
        return self.config.bounds


@dataclass
class CameraModel:
    """Yaw-only pinhole camera."""

    width: int
    height: int
    focal: float
    cx: float
    cy: float
    position: tuple[float, float, float]
    yaw: float

    @classmethod
    def at(cls, position, yaw, width=640, height=480, focal=525.0):
        return cls(width=width, height=height, focal=focal,
                   cx=(width - 1) / 2.0, cy=(height - 1) / 2.0,
                   position=tuple(float(v) for v in position), yaw=float(yaw))

    @property
    def forward(self) -> np.ndarray:
        return np.array([math.cos(self.yaw), math.sin(self.yaw), 0.0])

    @property
    def right(self) -> np.ndarray:
        return np.array([math.sin(self.yaw), -math.cos(self.yaw), 0.0])

    @property
    def down(self) -> np.ndarray:
        return np.array([0.0, 0.0, -1.0])


@dataclass
class Frame:
    """One camera observation: RGB + aligned Euclidean depth."""

    rgb: np.ndarray                  # HxWx3 uint8
    depth: np.ndarray                # HxW float, inf = no hit
    camera: CameraModel
    bed_index: int | None = None     # capture annotation
    side: str | None = None


def capture_pose(layout: LayoutConfig, bed_index: int, side: str):
    """Camera position and yaw for inspecting one side of a bed."""
    if side not in SIDES:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    bx, by, bz = layout.bed_center(bed_index)
    off = layout.bed_depth / 2.0 + layout.capture_standoff
    if side == "A":
        return (bx, by + off, bz), -math.pi / 2.0
    return (bx, by - off, bz), math.pi / 2.0


# --------------------------------------------------------------------------
# primitive soup (renderer + sight-ray checks share these arrays)


@dataclass
class ScenePrimitives:
    sphere_c: np.ndarray             # (S,3)
    sphere_r: np.ndarray             # (S,)
    sphere_color: np.ndarray         # (S,) palette indices
    ell_c: np.ndarray                # (E,3)
    ell_s: np.ndarray                # (E,3) semi-axes
    rect: np.ndarray                 # (R,5): y, x0, x1, z0, z1
    rect_color: np.ndarray
    disc: np.ndarray                 # (D,4): cx, cy, cz, radius
    palette: np.ndarray              # (8,3) uint8


def _palette_lut(config: SceneConfig) -> np.ndarray:
    p = config.palette
    return np.array([p.background, p.board, p.foliage, p.frame,
                     p.tomato, p.pepper, p.eggplant, p.propeller], dtype=np.uint8)


def _bed_rects(layout: LayoutConfig, center) -> list[tuple[float, float, float, float, float, int]]:
    """Backing board and frame bars of one bed: (y, x0, x1, z0, z1, color)."""
    bx, by, bz = center
    hw, hh = layout.bed_width / 2.0, layout.bed_height / 2.0
    ft = layout.frame_thickness
    hb = layout.board_height / 2.0
    rects = [(by, bx - hw + ft, bx + hw - ft, bz - hb, bz + hb, _BOARD)]
    # frame: two posts, top and bottom bars (disjoint extents, no overlap)
    rects.append((by, bx - hw, bx - hw + ft, bz - hh, bz + hh, _FRAME))
    rects.append((by, bx + hw - ft, bx + hw, bz - hh, bz + hh, _FRAME))
    rects.append((by, bx - hw + ft, bx + hw - ft, bz + hh - ft, bz + hh, _FRAME))
    rects.append((by, bx - hw + ft, bx + hw - ft, bz - hh, bz - hh + ft, _FRAME))
    return rects


def scene_primitives(scene: SceneSpec) -> ScenePrimitives:
    """Flatten a scene into renderable primitive arrays (memoized)."""
    if scene._prims is not None:
        return scene._prims
    spheres, sphere_colors = [], []
    ells = []
    rects = []
    discs = []
    for bed in scene.beds:
        rects.extend(_bed_rects(scene.layout, bed.center))
        color = _FRUIT_COLOR_INDEX[bed.plant_type]
        for plant in bed.plants:
            for fx in plant.fruits:
                spheres.append((*fx.center, fx.radius))
                sphere_colors.append(color)
                if fx.occluder is not None:
                    discs.append(fx.occluder)
            ells.extend(plant.foliage)
    rect_arr = np.array(rects, dtype=np.float64).reshape(-1, 6)
    sph = np.array(spheres, dtype=np.float64).reshape(-1, 4)
    ell = np.array(ells, dtype=np.float64).reshape(-1, 6)
    prims = ScenePrimitives(
        sphere_c=sph[:, :3], sphere_r=sph[:, 3],
        sphere_color=np.array(sphere_colors, dtype=np.int64),
        ell_c=ell[:, :3], ell_s=ell[:, 3:],
        rect=rect_arr[:, :5], rect_color=rect_arr[:, 5].astype(np.int64),
        disc=np.array(discs, dtype=np.float64).reshape(-1, 4),
        palette=_palette_lut(scene.config))
    scene._prims = prims
    return prims


# --------------------------------------------------------------------------
# analytic ray intersections (shared by renderer and generator)

_EPS = 1e-9


def _ray_sphere_t(origin, dirs, center, radius):
    """First-hit distances for unit ``dirs`` x one sphere.

    ``dirs`` may have any leading shape; ``origin`` may be a single point
    or one point per ray.
    """
    oc = np.asarray(origin) - center
    b = np.sum(dirs * oc, axis=-1)
    disc = b * b - (np.sum(oc * oc, axis=-1) - radius * radius)
    with np.errstate(invalid="ignore"):
        t = -b - np.sqrt(disc)
    return np.where((disc >= 0) & (t > _EPS), t, np.inf)


def _ray_ellipsoid_t(origin, dirs, center, semi):
    q = (np.asarray(origin) - center) / semi
    dd = dirs / semi
    a = np.sum(dd * dd, axis=-1)
    b = np.sum(dd * q, axis=-1)
    c0 = np.sum(q * q, axis=-1) - 1.0
    disc = b * b - a * c0
    with np.errstate(invalid="ignore"):
        t = (-b - np.sqrt(disc)) / a
    return np.where((disc >= 0) & (t > _EPS), t, np.inf)


def _ray_yplane_t(origin_y, dirs_y, plane_y):
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (plane_y - origin_y) / dirs_y
    return np.where((np.abs(dirs_y) > _EPS) & (t > _EPS), t, np.inf)


def _ray_rect_t(origin, dirs, rect_row):
    origin = np.asarray(origin)
    y, x0, x1, z0, z1 = rect_row
    t = _ray_yplane_t(origin[..., 1], dirs[..., 1], y)
    hx = origin[..., 0] + t * dirs[..., 0]
    hz = origin[..., 2] + t * dirs[..., 2]
    inside = (hx >= x0) & (hx <= x1) & (hz >= z0) & (hz <= z1)
    return np.where(inside, t, np.inf)


def _ray_disc_t(origin, dirs, disc_row):
    origin = np.asarray(origin)
    cx, cy, cz, radius = disc_row
    t = _ray_yplane_t(origin[..., 1], dirs[..., 1], cy)
    hx = origin[..., 0] + t * dirs[..., 0]
    hz = origin[..., 2] + t * dirs[..., 2]
    inside = (hx - cx) ** 2 + (hz - cz) ** 2 <= radius * radius
    return np.where(inside, t, np.inf)


# broadcast variants: one origin, T rays x S primitives -> (T, S) distances


def _rays_spheres_t(origin, dirs, centers, radii):
    oc = origin[None, :] - centers                    # (S,3)
    b = dirs @ oc.T                                   # (T,S)
    c0 = np.einsum("ij,ij->i", oc, oc) - radii ** 2   # (S,)
    disc = b * b - c0[None, :]
    with np.errstate(invalid="ignore"):
        t = -b - np.sqrt(disc)
    return np.where((disc >= 0) & (t > _EPS), t, np.inf)


def _rays_ells_t(origin, dirs, centers, semis):
    q = (origin[None, :] - centers) / semis           # (S,3)
    dd = dirs[:, None, :] / semis[None, :, :]         # (T,S,3)
    a = np.sum(dd * dd, axis=-1)
    b = np.sum(dd * q[None, :, :], axis=-1)
    c0 = np.sum(q * q, axis=1) - 1.0
    disc = b * b - a * c0[None, :]
    with np.errstate(invalid="ignore"):
        t = (-b - np.sqrt(disc)) / a
    return np.where((disc >= 0) & (t > _EPS), t, np.inf)


def _rays_rects_t(origin, dirs, rects):
    dy = dirs[:, 1:2]                                 # (T,1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (rects[None, :, 0] - origin[1]) / dy      # (T,R)
    hx = origin[0] + t * dirs[:, 0:1]
    hz = origin[2] + t * dirs[:, 2:3]
    inside = ((hx >= rects[None, :, 1]) & (hx <= rects[None, :, 2])
              & (hz >= rects[None, :, 3]) & (hz <= rects[None, :, 4]))
    valid = inside & (np.abs(dy) > _EPS) & (t > _EPS)
    return np.where(valid, t, np.inf)


def _rays_discs_t(origin, dirs, discs):
    dy = dirs[:, 1:2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (discs[None, :, 1] - origin[1]) / dy
    hx = origin[0] + t * dirs[:, 0:1]
    hz = origin[2] + t * dirs[:, 2:3]
    inside = ((hx - discs[None, :, 0]) ** 2 + (hz - discs[None, :, 2]) ** 2
              <= discs[None, :, 3] ** 2)
    valid = inside & (np.abs(dy) > _EPS) & (t > _EPS)
    return np.where(valid, t, np.inf)


# --------------------------------------------------------------------------
# scene generation


def _sight_targets(center, radius, n_ring=8):
    """Sight-ray endpoints for one fruit: center, an inner ring and the
    1.2 r silhouette ring, all in the fruit's y-plane."""
    cx, cy, cz = center
    ang = np.linspace(0.0, 2.0 * math.pi, n_ring, endpoint=False)
    pts = [np.array([cx, cy, cz])]
    for ring_r in (0.72 * radius, 1.2 * radius):
        for a in ang:
            pts.append(np.array([cx + ring_r * math.cos(a), cy,
                                 cz + ring_r * math.sin(a)]))
    return np.array(pts)


class _BedBuilder:
    """Incremental placement with sight-ray rejection for one bed.

    Primitives and committed sight rays live in numpy arrays so each
    placement attempt costs a handful of vectorized intersection calls.
    """

    def __init__(self, layout: LayoutConfig, center, config: SceneConfig):
        self.layout = layout
        self.center = center
        self.config = config
        self.sph = np.zeros((0, 4))
        self.disc_arr = np.zeros((0, 4))
        self.ell = np.zeros((0, 6))
        self.rect_arr = np.array([r[:5] for r in _bed_rects(layout, center)])
        # committed sight rays, one row per ray: origin, unit dir, length
        self.ray_o = np.zeros((0, 3))
        self.ray_d = np.zeros((0, 3))
        self.ray_len = np.zeros(0)

    def _capture_origin(self, side: str) -> np.ndarray:
        bx, by, bz = self.center
        off = self.layout.bed_depth / 2.0 + self.layout.capture_standoff
        y = by + off if side == "A" else by - off
        return np.array([bx, y, self.layout.bed_z_center])

    @staticmethod
    def _ray_geometry(origin, targets):
        vecs = targets - origin
        lengths = np.linalg.norm(vecs, axis=1)
        return vecs / lengths[:, None], lengths

    def _min_hits(self, origin, dirs, skip_sphere=-1):
        best = np.full(len(dirs), np.inf)
        if len(self.sph):
            t = _rays_spheres_t(origin, dirs, self.sph[:, :3], self.sph[:, 3])
            if skip_sphere >= 0:
                t[:, skip_sphere] = np.inf
            best = np.minimum(best, t.min(axis=1))
        if len(self.ell):
            best = np.minimum(best, _rays_ells_t(
                origin, dirs, self.ell[:, :3], self.ell[:, 3:]).min(axis=1))
        best = np.minimum(best, _rays_rects_t(origin, dirs, self.rect_arr).min(axis=1))
        if len(self.disc_arr):
            best = np.minimum(best, _rays_discs_t(origin, dirs, self.disc_arr).min(axis=1))
        return best

    def _corridor_clear(self, fruit_center, radius, side) -> bool:
        origin = self._capture_origin(side)
        dirs, lengths = self._ray_geometry(origin, _sight_targets(fruit_center, radius))
        return bool(np.all(self._min_hits(origin, dirs) >= lengths - 1e-6))

    def _blocks_existing(self, kind, row) -> bool:
        """Would a new primitive cut any already-committed sight ray?"""
        if not len(self.ray_o):
            return False
        row = np.asarray(row, dtype=np.float64)
        if kind == "sphere":
            t = _ray_sphere_t(self.ray_o, self.ray_d, row[:3], row[3])
        elif kind == "disc":
            t = _ray_disc_t(self.ray_o, self.ray_d, row)
        else:
            t = _ray_ellipsoid_t(self.ray_o, self.ray_d, row[:3], row[3:])
        return bool(np.any(t < self.ray_len - 1e-6))

    def add_sphere(self, row) -> None:
        self.sph = np.vstack([self.sph, np.asarray(row, dtype=np.float64)])

    def add_disc(self, row) -> None:
        self.disc_arr = np.vstack([self.disc_arr, np.asarray(row, dtype=np.float64)])

    def add_ellipsoid(self, row) -> None:
        self.ell = np.vstack([self.ell, np.asarray(row, dtype=np.float64)])

    def commit_fruit(self, fruit_center, radius, sides) -> None:
        self.add_sphere((*fruit_center, radius))
        for side in sides:
            origin = self._capture_origin(side)
            dirs, lengths = self._ray_geometry(origin, _sight_targets(fruit_center, radius))
            self.ray_o = np.vstack([self.ray_o, np.broadcast_to(origin, dirs.shape)])
            self.ray_d = np.vstack([self.ray_d, dirs])
            self.ray_len = np.concatenate([self.ray_len, lengths])


def _inside_slot_volume(layout: LayoutConfig, config: SceneConfig,
                        bed_center, slot_u, point, radius) -> bool:
    fc = config.fruit
    bx, by, bz = bed_center
    return (abs(point[0] - (bx + slot_u)) <= fc.lateral_extent + 1e-9
            and abs(point[2] - bz) <= fc.height_extent + 1e-9
            and abs(point[1] - by) <= fc.depth_extent + radius + 1e-9)


def _place_fruits(rng, builder: _BedBuilder, slot_u: float, count: int,
                  placed_uz: list[tuple[float, float]]) -> list[FruitSpec]:
    layout, config = builder.layout, builder.config
    fc = config.fruit
    bx, by, bz = builder.center
    fruits = []
    for _ in range(count):
        for _attempt in range(60):
            u = slot_u + rng.uniform(-fc.lateral_extent, fc.lateral_extent)
            z = rng.uniform(-fc.height_extent, fc.height_extent)
            radius = rng.uniform(fc.radius_min, fc.radius_max)
            if rng.uniform() < fc.single_side_prob:
                sides = "A" if rng.uniform() < 0.5 else "B"
            else:
                sides = "AB"
            if sides == "AB":
                y = by  # centered on the backing board: one cap per side
            else:
                # wholly in front of the backing board, hidden from the
                # other side by the board itself
                d_off = rng.uniform(fc.depth_offset_min, fc.depth_extent)
                y = by + d_off if sides == "A" else by - d_off
            if any((u - pu) ** 2 + (z - pz) ** 2 < fc.min_planar_separation ** 2
                   for pu, pz in placed_uz):
                continue
            center = (bx + u, y, bz + z)
            if builder._blocks_existing("sphere", (*center, radius)):
                continue
            if not all(builder._corridor_clear(center, radius, s) for s in sides):
                continue
            builder.commit_fruit(center, radius, sides)
            placed_uz.append((u, z))
            fruits.append(FruitSpec(center=tuple(float(v) for v in center),
                                    radius=float(radius), sides=sides))
            break
    return fruits


def _place_foliage(rng, builder: _BedBuilder, slot_u: float) -> list[tuple]:
    config = builder.config
    fo = config.foliage
    bx, by, bz = builder.center
    blobs = []
    for _ in range(fo.blobs_per_plant):
        for _attempt in range(40):
            cx = bx + slot_u + rng.uniform(-fo.lateral_jitter, fo.lateral_jitter)
            cy = by + rng.uniform(-fo.depth_jitter, fo.depth_jitter)
            cz = bz + rng.uniform(-fo.height_band, fo.height_band)
            semi = (rng.uniform(fo.rx_min, fo.rx_max),
                    rng.uniform(fo.ry_min, fo.ry_max),
                    rng.uniform(fo.rz_min, fo.rz_max))
            # keep clear of every fruit sphere (conservative per-axis test)
            ok = True
            for sx, sy, sz, sr in builder.sph:
                d = np.array([cx - sx, cy - sy, cz - sz])
                scale = np.array(semi) + sr + 0.01
                if np.sum((d / scale) ** 2) < 1.0:
                    ok = False
                    break
            if not ok:
                continue
            blob = (cx, cy, cz, *semi)
            if builder._blocks_existing("ellipsoid", blob):
                continue
            builder.add_ellipsoid(blob)
            blobs.append(tuple(float(v) for v in blob))
            break
    return blobs


def _validate_layout(config: SceneConfig) -> None:
    layout, bounds, fc = config.layout, config.bounds, config.fruit
    if layout.n_beds != 27:
        raise ConfigError(f"layout must give exactly 27 beds, got {layout.n_beds}")
    if layout.bed_gap <= 0 or layout.aisle_width <= 0:
        raise ConfigError("beds overlap: need positive bed_gap and aisle width")
    inner_hw = layout.bed_width / 2.0 - layout.frame_thickness
    if layout.slot_pitch + fc.lateral_extent + fc.radius_max > inner_hw + 1e-9:
        raise ConfigError("fruit volume extends past the backing board")
    if fc.height_extent + fc.radius_max > layout.board_height / 2.0 + 1e-9:
        raise ConfigError("fruit volume taller than the backing board")
    if fc.depth_extent + fc.radius_max > layout.bed_depth / 2.0 + 1e-9:
        raise ConfigError("fruit volume deeper than the bed")
    if fc.depth_offset_min <= fc.radius_max:
        raise ConfigError("single-side fruits must clear the backing board")
    if fc.depth_offset_min > fc.depth_extent:
        raise ConfigError("depth_offset_min exceeds depth_extent")
    if not bounds.contains(*layout.start_position):
        raise ConfigError("start position outside bounds")
    for index in (1, layout.n_beds):
        bx, by, bz = layout.bed_center(index)
        for dx, dy, dz in ((layout.bed_width / 2, layout.bed_depth / 2, 0),):
            for sx in (-1, 1):
                for sy in (-1, 1):
                    if not bounds.contains(bx + sx * dx, by + sy * dy, bz):
                        raise ConfigError("bed grid does not fit inside bounds")
        if not (bounds.z_min <= bz - layout.bed_height / 2
                and bz + layout.bed_height / 2 <= bounds.z_max):
            raise ConfigError("bed height does not fit inside bounds")
    for index in (1, layout.cols, layout.n_beds - layout.cols + 1, layout.n_beds):
        for side in SIDES:
            pos, _ = capture_pose(layout, index, side)
            if not bounds.contains(*pos):
                raise ConfigError(f"capture pose for bed {index} side {side} "
                                  "lies outside bounds")


def generate_scene(seed: int, config: SceneConfig | None = None) -> SceneSpec:
    """Deterministically generate a scene from a seed."""
    config = config if config is not None else SceneConfig()
    _validate_layout(config)
    layout = config.layout
    beds = []
    for index in range(1, layout.n_beds + 1):
        rng = np.random.default_rng([abs(int(seed)), index])
        center = layout.bed_center(index)
        plant_type = PLANT_TYPES[int(rng.integers(0, len(PLANT_TYPES)))]
        builder = _BedBuilder(layout, center, config)
        slots = layout.slot_offsets
        counts = [int(rng.integers(config.fruit.count_min,
                                   config.fruit.count_max + 1))
                  for _ in slots]
        placed_uz: list[tuple[float, float]] = []
        slot_fruits = [_place_fruits(rng, builder, slot, n, placed_uz)
                       for slot, n in zip(slots, counts)]
        plants = []
        for slot, fruits in zip(slots, slot_fruits):
            foliage = _place_foliage(rng, builder, slot)
            plants.append(PlantSpec(slot_u=float(slot), fruits=fruits,
                                    foliage=foliage))
        all_fruits = [f for p in plants for f in p.fruits]
        beds.append(BedSpec(
            index=index, plant_type=plant_type,
            center=tuple(float(v) for v in center), yaw=0.0, plants=plants,
            gt_total=len(all_fruits),
            gt_side_a=sum(1 for f in all_fruits if "A" in f.sides),
            gt_side_b=sum(1 for f in all_fruits if "B" in f.sides)))
    scene = SceneSpec(rng_seed=int(seed), config=config, beds=beds)
    verify_scene(scene)
    return scene


def verify_scene(scene: SceneSpec) -> None:
    """Re-check every recorded visibility with fresh sight rays.

    Raises RuntimeError if any visible fruit is occluded — generation
    guarantees this never fires, and tests lean on that guarantee.
    """
    layout = scene.layout
    for bed in scene.beds:
        builder = _BedBuilder(layout, bed.center, scene.config)
        ordered: list[FruitSpec] = []
        for plant in bed.plants:
            for blob in plant.foliage:
                builder.add_ellipsoid(blob)
            for fx in plant.fruits:
                ordered.append(fx)
                builder.add_sphere((*fx.center, fx.radius))
                if fx.occluder is not None:
                    builder.add_disc(fx.occluder)
        for own, fx in enumerate(ordered):
            for side in fx.sides:
                origin = builder._capture_origin(side)
                dirs, lengths = builder._ray_geometry(
                    origin, _sight_targets(fx.center, fx.radius))
                hits = builder._min_hits(origin, dirs, skip_sphere=own)
                if not np.all(hits >= lengths - 1e-6):
                    raise RuntimeError(
                        f"bed {bed.index}: fruit at {fx.center} occluded "
                        f"from side {side}")


def check_scene(scene: SceneSpec) -> None:
    """Validate SceneSpec structural invariants (raises ValueError)."""
    layout = scene.layout
    if len(scene.beds) != 27:
        raise ValueError("scene must contain exactly 27 beds")
    indices = [bed.index for bed in scene.beds]
    if sorted(indices) != list(range(1, 28)):
        raise ValueError("bed indices must be exactly 1..27")
    for bed in scene.beds:
        if bed.plant_type not in PLANT_TYPES:
            raise ValueError(f"bed {bed.index}: unknown plant type")
        bx, by, bz = bed.center
        for plant in bed.plants:
            for fx in plant.fruits:
                if not fx.sides or any(s not in SIDES for s in fx.sides):
                    raise ValueError(f"bed {bed.index}: bad visible sides")
                if not _inside_slot_volume(layout, scene.config, bed.center,
                                           plant.slot_u, fx.center, fx.radius):
                    raise ValueError(
                        f"bed {bed.index}: fruit outside its plant volume")
                off = fx.center[1] - by
                if fx.sides == "AB" and off != 0.0:
                    raise ValueError(
                        f"bed {bed.index}: two-side fruit off the mid-plane")
                if fx.sides in ("A", "B"):
                    signed = off if fx.sides == "A" else -off
                    if signed <= fx.radius:
                        raise ValueError(
                            f"bed {bed.index}: one-side fruit not clear of "
                            "the backing board")
        for dx in (-layout.bed_width / 2, layout.bed_width / 2):
            for dy in (-layout.bed_depth / 2, layout.bed_depth / 2):
                if not scene.bounds.contains(bx + dx, by + dy, bz):
                    raise ValueError(f"bed {bed.index} outside bounds")
    # beds must not overlap: check row/column pitch against bed size
    if layout.bed_width > layout.bed_width + layout.bed_gap - 1e-9:
        raise ValueError("beds overlap laterally")
    if layout.bed_depth >= layout.row_pitch:
        raise ValueError("beds overlap across rows")


def ground_truth_count(scene: SceneSpec, mission) -> int:
    """Total fruits of the mission's type over the mission's beds.

    Each fruit counts once regardless of how many sides it is visible
    from.  Bed indices outside 1..27 raise ValueError.
    """
    by_index = {bed.index: bed for bed in scene.beds}
    total = 0
    for index in mission.bed_indices:
        if index not in by_index:
            raise ValueError(f"bed index {index} outside 1..{len(scene.beds)}")
        bed = by_index[index]
        if bed.plant_type == mission.plant_type:
            total += bed.gt_total
    return total


def ground_truth_side_count(scene: SceneSpec, bed_index: int, side: str) -> int:
    """Fruits of a bed visible from one side (recorded at generation)."""
    if side not in SIDES:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    for bed in scene.beds:
        if bed.index == bed_index:
            return bed.gt_side_a if side == "A" else bed.gt_side_b
    raise ValueError(f"bed index {bed_index} not in scene")


# --------------------------------------------------------------------------
# serialization


def scene_to_dict(scene: SceneSpec) -> dict:
    import dataclasses as dc

    def fruit_d(f: FruitSpec) -> dict:
        return {"center": [float(v) for v in f.center],
                "radius": float(f.radius),
                "sides": f.sides,
                "occluder": None if f.occluder is None
                else [float(v) for v in f.occluder]}

    return {
        "format": "orchard-scene-v1",
        "rng_seed": scene.rng_seed,
        "config": dc.asdict(scene.config),
        "beds": [{
            "index": bed.index,
            "plant_type": bed.plant_type,
            "center": [float(v) for v in bed.center],
            "yaw": float(bed.yaw),
            "gt_total": bed.gt_total,
            "gt_side_a": bed.gt_side_a,
            "gt_side_b": bed.gt_side_b,
            "plants": [{
                "slot_u": float(p.slot_u),
                "fruits": [fruit_d(f) for f in p.fruits],
                "foliage": [[float(v) for v in blob] for blob in p.foliage],
            } for p in bed.plants],
        } for bed in scene.beds],
    }


def scene_from_dict(data: dict) -> SceneSpec:
    if data.get("format") != "orchard-scene-v1":
        raise ValueError("not an orchard scene file")
    config = _build(SceneConfig, data["config"], "scene.config")
    beds = []
    for bd in data["beds"]:
        plants = []
        for pd in bd["plants"]:
            fruits = [FruitSpec(center=tuple(f["center"]), radius=f["radius"],
                                sides=f["sides"],
                                occluder=None if f["occluder"] is None
                                else tuple(f["occluder"]))
                      for f in pd["fruits"]]
            plants.append(PlantSpec(slot_u=pd["slot_u"], fruits=fruits,
                                    foliage=[tuple(b) for b in pd["foliage"]]))
        beds.append(BedSpec(index=bd["index"], plant_type=bd["plant_type"],
                            center=tuple(bd["center"]), yaw=bd["yaw"],
                            plants=plants, gt_total=bd["gt_total"],
                            gt_side_a=bd["gt_side_a"], gt_side_b=bd["gt_side_b"]))
    return SceneSpec(rng_seed=data["rng_seed"], config=config, beds=beds)


def scene_to_json(scene: SceneSpec) -> str:
    return json.dumps(scene_to_dict(scene), indent=2)


def save_scene(scene: SceneSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scene_to_json(scene))
        fh.write("\n")


def load_scene(path) -> SceneSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return scene_from_dict(json.load(fh))


# --------------------------------------------------------------------------
# rendering

_RAY_CACHE: dict[tuple, np.ndarray] = {}


def _ray_grid(camera: CameraModel) -> np.ndarray:
    """Unit world-space ray directions for every pixel (cached per pose yaw)."""
    key = (camera.width, camera.height, camera.focal, camera.cx, camera.cy,
           round(camera.yaw, 12))
    cached = _RAY_CACHE.get(key)
    if cached is not None:
        return cached
    xs = (np.arange(camera.width) - camera.cx) / camera.focal
    ys = (np.arange(camera.height) - camera.cy) / camera.focal
    u, v = np.meshgrid(xs, ys)
    dirs = (u[..., None] * camera.right + v[..., None] * camera.down
            + camera.forward)
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    if len(_RAY_CACHE) > 8:
        _RAY_CACHE.clear()
    _RAY_CACHE[key] = dirs
    return dirs


# corner selection: which of lo/hi each of the 8 AABB corners takes per axis
_CORNER_SEL = np.array([[bool(i & 4), bool(i & 2), bool(i & 1)]
                        for i in range(8)])


def _project_boxes(camera: CameraModel, lo: np.ndarray, hi: np.ndarray,
                   pad: int = 2):
    """Conservative pixel bboxes for N world AABBs in one pass.

    Returns (boxes, valid, near): boxes rows are half-open
    (x0, x1, y0, y1); ``near`` is the distance from the camera to the
    AABB (a lower bound on any hit t inside it).  Boxes fully behind the
    camera are invalid; boxes straddling the camera plane cover the full
    frame.
    """
    n = len(lo)
    if n == 0:
        return (np.zeros((0, 4), dtype=np.int64), np.zeros(0, dtype=bool),
                np.zeros(0))
    origin = np.asarray(camera.position)
    corners = np.where(_CORNER_SEL[None, :, :], hi[:, None, :], lo[:, None, :])
    rel = corners - origin
    fwd = rel @ camera.forward                     # (N,8)
    behind = fwd < 1e-3
    all_behind = behind.all(axis=1)
    straddle = behind.any(axis=1) & ~all_behind
    safe = np.where(behind, 1.0, fwd)
    px = camera.cx + camera.focal * (rel @ camera.right) / safe
    py = camera.cy + camera.focal * (rel @ camera.down) / safe
    x0 = np.floor(px.min(axis=1)).astype(np.int64) - pad
    x1 = np.ceil(px.max(axis=1)).astype(np.int64) + pad + 1
    y0 = np.floor(py.min(axis=1)).astype(np.int64) - pad
    y1 = np.ceil(py.max(axis=1)).astype(np.int64) + pad + 1
    x0, x1 = np.clip(x0, 0, camera.width), np.clip(x1, 0, camera.width)
    y0, y1 = np.clip(y0, 0, camera.height), np.clip(y1, 0, camera.height)
    x0[straddle], x1[straddle] = 0, camera.width
    y0[straddle], y1[straddle] = 0, camera.height
    valid = ~all_behind & (x0 < x1) & (y0 < y1)
    gap = np.maximum(np.maximum(lo - origin, origin - hi), 0.0)
    near = np.sqrt(np.sum(gap * gap, axis=1))
    return np.stack([x0, x1, y0, y1], axis=1), valid, near


# beyond this distance a primitive is worth an occlusion pre-check before
# its per-pixel intersection math (background rows hide behind the bed)
_FAR_CHECK = 3.0


def _paint_kind(zbuf, cbuf, camera, dirs, origin, lo, hi, hit_t, colors):
    """Paint one primitive kind near-to-far with conservative culling.

    ``hit_t(i, sub_dirs)`` returns per-pixel hit distances for primitive
    ``i`` over a direction crop.  A far primitive whose bbox is already
    covered by strictly nearer content cannot win any pixel and is
    skipped without intersection math.
    """
    boxes, valid, near = _project_boxes(camera, lo, hi)
    for i in np.argsort(near, kind="stable"):
        if not valid[i]:
            continue
        x0, x1, y0, y1 = boxes[i]
        zview = zbuf[y0:y1, x0:x1]
        if near[i] > _FAR_CHECK and zview.max() <= near[i]:
            continue
        t = hit_t(int(i), dirs[y0:y1, x0:x1])
        closer = t < zview
        if np.any(closer):
            zview[closer] = t[closer]
            cbuf[y0:y1, x0:x1][closer] = colors[i]


def render_frame(scene: SceneSpec, camera: CameraModel,
                 bed_index: int | None = None, side: str | None = None) -> Frame:
    """Z-buffered flat-shaded render; depth is Euclidean ray distance."""
    prims = scene_primitives(scene)
    dirs = _ray_grid(camera)
    origin = np.asarray(camera.position, dtype=np.float64)
    zbuf = np.full((camera.height, camera.width), np.inf)
    cbuf = np.zeros((camera.height, camera.width), dtype=np.uint8)

    rect = prims.rect
    rect_lo = np.stack([rect[:, 1], rect[:, 0], rect[:, 3]], axis=1)
    rect_hi = np.stack([rect[:, 2], rect[:, 0], rect[:, 4]], axis=1)
    _paint_kind(zbuf, cbuf, camera, dirs, origin, rect_lo, rect_hi,
                lambda i, sub: _ray_rect_t(origin, sub, rect[i]),
                prims.rect_color)

    disc = prims.disc
    disc_r = disc[:, 3:4] * np.array([1.0, 0.0, 1.0])
    _paint_kind(zbuf, cbuf, camera, dirs, origin,
                disc[:, :3] - disc_r, disc[:, :3] + disc_r,
                lambda i, sub: _ray_disc_t(origin, sub, disc[i]),
                np.full(len(disc), _FOLIAGE))

    _paint_kind(zbuf, cbuf, camera, dirs, origin,
                prims.ell_c - prims.ell_s, prims.ell_c + prims.ell_s,
                lambda i, sub: _ray_ellipsoid_t(origin, sub, prims.ell_c[i],
                                                prims.ell_s[i]),
                np.full(len(prims.ell_c), _FOLIAGE))

    sph_r = prims.sphere_r[:, None]
    _paint_kind(zbuf, cbuf, camera, dirs, origin,
                prims.sphere_c - sph_r, prims.sphere_c + sph_r,
                lambda i, sub: _ray_sphere_t(origin, sub, prims.sphere_c[i],
                                             prims.sphere_r[i]),
                prims.sphere_color)

    rgb = prims.palette[cbuf]
    if scene.config.propellers_enabled:
        mask = _propeller_overlay(camera.height, camera.width,
                                  scene.config.propeller_radius_px)
        rgb[mask] = prims.palette[_PROP]
        zbuf[mask] = scene.config.propeller_depth
    return Frame(rgb=rgb, depth=zbuf, camera=camera,
                 bed_index=bed_index, side=side)


_PROP_CACHE: dict[tuple, np.ndarray] = {}


def _propeller_overlay(height: int, width: int, radius_px: int) -> np.ndarray:
    key = (height, width, radius_px)
    cached = _PROP_CACHE.get(key)
    if cached is not None:
        return cached
    yy, xx = np.mgrid[:height, :width]
    mask = np.zeros((height, width), dtype=bool)
    for cy, cx in ((0, 0), (0, width - 1), (height - 1, 0),
                   (height - 1, width - 1)):
        mask |= (yy - cy) ** 2 + (xx - cx) ** 2 <= radius_px ** 2
    _PROP_CACHE[key] = mask
    return mask


def capture_frame(scene: SceneSpec, bed_index: int, side: str,
                  width: int = 640, height: int = 480,
                  focal: float = 525.0) -> Frame:
    """Render the annotated inspection frame for one bed side."""
    pos, yaw = capture_pose(scene.layout, bed_index, side)
    camera = CameraModel.at(pos, yaw, width=width, height=height, focal=focal)
    return render_frame(scene, camera, bed_index=bed_index, side=side)
