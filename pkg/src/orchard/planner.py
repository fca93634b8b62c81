"""Mission route planning and flight simulation.

The planner turns a mission into capture waypoints (two per bed), prices
travel between them as shortest collision-free paths on a uniform 3D
grid, orders them with a nearest-neighbor + 2-opt tour heuristic,
re-samples each leg at Chebyshev-node arc-length fractions, and lays a
trapezoidal speed profile over the result with a full stop and dwell at
every capture waypoint.  ``simulate_flight`` sweeps the drone's bounding
sphere along the sampled trajectory and reports time, distance, and
collision events for scoring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .config import Bounds, LayoutConfig, PlannerConfig
from .scene import SceneSpec, capture_pose

START_TAG = "start"


class PlanningError(RuntimeError):
    """A mission cannot be planned under the given geometry."""


@dataclass(frozen=True)
class Waypoint:
    position: tuple[float, float, float]
    yaw: float
    tag: tuple[int, str] | str      # (bed_index, side) or "start"

    @property
    def is_capture(self) -> bool:
        return self.tag != START_TAG


@dataclass
class Route:
    """Ordered waypoints and the leg polylines connecting them."""

    waypoints: list[Waypoint]       # in visit order, start first
    legs: list[np.ndarray]          # legs[i]: (m, 3) from waypoint i to i+1
    cost: float                     # total planned grid-path length

    def __post_init__(self) -> None:
        if len(self.legs) != max(len(self.waypoints) - 1, 0):
            raise ValueError("a route needs exactly one leg per waypoint pair")


@dataclass
class Trajectory:
    """Time-sampled flight: uniform-dt samples along the route."""

    times: np.ndarray               # (n,) seconds, uniformly spaced
    positions: np.ndarray           # (n, 3) meters
    yaws: np.ndarray                # (n,) radians
    arc: np.ndarray                 # (n,) meters traveled along the route
    duration: float                 # seconds, capture dwells included
    length: float                   # meters, sum of sample chords
    capture_windows: list[tuple[float, float, tuple[int, str]]]

    @property
    def samples(self) -> list[tuple[float, np.ndarray, float]]:
        return [(float(t), p, float(y))
                for t, p, y in zip(self.times, self.positions, self.yaws)]


@dataclass
class FlightResult:
    t_m: float                      # mission time, seconds
    d_m: float                      # distance flown, meters
    k: int                          # collision events

    def __iter__(self):
        return iter((self.t_m, self.d_m, self.k))


# --------------------------------------------------------------------------
# waypoints


def _pose_with_standoff(layout: LayoutConfig, bed_index: int, side: str,
                        standoff: float):
    if abs(standoff - layout.capture_standoff) < 1e-12:
        return capture_pose(layout, bed_index, side)
    bx, by, bz = layout.bed_center(bed_index)
    off = layout.bed_depth / 2.0 + standoff
    if side == "A":
        return (bx, by + off, bz), -math.pi / 2.0
    return (bx, by - off, bz), math.pi / 2.0


def _inside_any_bed(layout: LayoutConfig, point) -> bool:
    x, y, z = point
    for index in range(1, layout.n_beds + 1):
        bx, by, bz = layout.bed_center(index)
        if (abs(x - bx) <= layout.bed_width / 2.0
                and abs(y - by) <= layout.bed_depth / 2.0
                and abs(z - bz) <= layout.bed_height / 2.0):
            return True
    return False


def build_waypoints(mission, scene: SceneSpec,
                    standoff: float | None = None) -> list[Waypoint]:
    """Start pose plus two capture waypoints (side A, side B) per bed.

    Waypoints come out in a fixed order: start, then mission beds
    ascending, side A before side B.  ``standoff`` defaults to the
    scene's capture standoff so that camera frames are taken exactly at
    the planned poses.
    """
    layout = scene.layout
    bounds = scene.bounds
    if standoff is None:
        standoff = layout.capture_standoff
    if standoff <= 0:
        raise PlanningError(f"standoff must be positive, got {standoff}")
    waypoints = [Waypoint(position=tuple(float(v) for v in
                                         layout.start_position),
                          yaw=float(layout.start_yaw), tag=START_TAG)]
    for index in sorted(set(mission.bed_indices)):
        if not 1 <= index <= layout.n_beds:
            raise ValueError(f"bed index {index} outside 1..{layout.n_beds}")
        for side in ("A", "B"):
            pos, yaw = _pose_with_standoff(layout, index, side, standoff)
            if not bounds.contains(*pos):
                raise PlanningError(f"waypoint for bed {index} side {side} "
                                    f"at {pos} leaves the flight bounds")
            if _inside_any_bed(layout, pos):
                raise PlanningError(f"waypoint for bed {index} side {side} "
                                    f"at {pos} lies inside a bed")
            waypoints.append(Waypoint(position=pos, yaw=yaw,
                                      tag=(index, side)))
    return waypoints


# --------------------------------------------------------------------------
# occupancy grid and shortest paths

_OFFSETS = [(dx, dy, dz)
            for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)
            if (dx, dy, dz) > (0, 0, 0)]


class _Grid:
    """Free-space grid over the flight bounds with 26-neighbor edges."""

    def __init__(self, layout: LayoutConfig, bounds: Bounds,
                 planner: PlannerConfig):
        res = planner.grid_resolution
        self.res = res
        self.origin = np.array([bounds.x_min, bounds.y_min, bounds.z_min])
        self.shape = tuple(int(round((hi - lo) / res)) + 1 for lo, hi in
                           ((bounds.x_min, bounds.x_max),
                            (bounds.y_min, bounds.y_max),
                            (bounds.z_min, bounds.z_max)))
        nx, ny, nz = self.shape
        axes = [self.origin[a] + res * np.arange(self.shape[a])
                for a in range(3)]
        X, Y, Z = np.meshgrid(*axes, indexing="ij")
        free = np.ones(self.shape, dtype=bool)
        infl = planner.inflation
        hx = layout.bed_width / 2.0 + infl
        hy = layout.bed_depth / 2.0 + infl
        hz = layout.bed_height / 2.0 + infl
        for index in range(1, layout.n_beds + 1):
            bx, by, bz = layout.bed_center(index)
            free &= ~((np.abs(X - bx) <= hx) & (np.abs(Y - by) <= hy)
                      & (np.abs(Z - bz) <= hz))
        self.free = free
        ids = np.arange(free.size).reshape(self.shape)
        rows, cols, costs = [], [], []
        for dx, dy, dz in _OFFSETS:
            sl_a = tuple(slice(max(0, -d), n - max(0, d))
                         for d, n in zip((dx, dy, dz), self.shape))
            sl_b = tuple(slice(max(0, d), n - max(0, -d))
                         for d, n in zip((dx, dy, dz), self.shape))
            ok = free[sl_a] & free[sl_b]
            a, b = ids[sl_a][ok], ids[sl_b][ok]
            w = res * math.sqrt(dx * dx + dy * dy + dz * dz)
            rows.append(a)
            cols.append(b)
            costs.append(np.full(len(a), w))
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        costs = np.concatenate(costs)
        self.graph = sparse.csr_matrix(
            (np.concatenate([costs, costs]),
             (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
            shape=(free.size, free.size))
        self._paths: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def node_of(self, point) -> int:
        ijk = np.round((np.asarray(point, dtype=float) - self.origin)
                       / self.res).astype(int)
        if ((ijk < 0) | (ijk >= np.array(self.shape))).any():
            raise PlanningError(f"point {tuple(point)} leaves the grid")
        node = int(np.ravel_multi_index(tuple(ijk), self.shape))
        if not self.free.ravel()[node]:
            raise PlanningError(f"point {tuple(point)} lies inside an "
                                "inflated obstacle")
        return node

    def point_of(self, node: int) -> np.ndarray:
        ijk = np.array(np.unravel_index(node, self.shape))
        return self.origin + self.res * ijk

    def solve_from(self, node: int) -> tuple[np.ndarray, np.ndarray]:
        """Distances and predecessors from one source node, cached."""
        if node not in self._paths:
            dist, pred = csgraph.dijkstra(self.graph, directed=False,
                                          indices=node,
                                          return_predecessors=True)
            self._paths[node] = (dist, pred)
        return self._paths[node]

    def path_between(self, src: int, dst: int) -> np.ndarray:
        dist, pred = self.solve_from(src)
        if not np.isfinite(dist[dst]):
            raise PlanningError("waypoints are not mutually reachable")
        chain = [dst]
        while chain[-1] != src:
            chain.append(int(pred[chain[-1]]))
        nodes = chain[::-1]
        return np.array([self.point_of(n) for n in nodes])


_GRID_CACHE: dict[tuple, _Grid] = {}


def _grid_for(scene: SceneSpec, planner: PlannerConfig) -> _Grid:
    layout, bounds = scene.layout, scene.bounds
    key = (tuple(sorted(vars(layout).items())),
           tuple(sorted(vars(bounds).items())),
           planner.grid_resolution, planner.inflation)
    grid = _GRID_CACHE.get(key)
    if grid is None:
        grid = _Grid(layout, bounds, planner)
        _GRID_CACHE[key] = grid
    return grid


def cost_matrix(waypoints: list[Waypoint], scene: SceneSpec,
                planner: PlannerConfig | None = None) -> np.ndarray:
    """Pairwise shortest-path lengths between waypoints on the grid."""
    planner = planner if planner is not None else PlannerConfig()
    grid = _grid_for(scene, planner)
    nodes = [grid.node_of(w.position) for w in waypoints]
    n = len(nodes)
    costs = np.zeros((n, n))
    for i, node in enumerate(nodes):
        dist, _ = grid.solve_from(node)
        costs[i] = dist[nodes]
    if not np.isfinite(costs).all():
        raise PlanningError("waypoints are not mutually reachable")
    np.fill_diagonal(costs, 0.0)
    return costs


# --------------------------------------------------------------------------
# route ordering


def _route_cost(costs: np.ndarray, order: list[int]) -> float:
    return float(sum(costs[order[i], order[i + 1]]
                     for i in range(len(order) - 1)))


_EXACT_ROUTE_MAX = 12


def _exact_route(costs: np.ndarray, start: int) -> list[int]:
    """Optimal open path by exact subset dynamic programming."""
    n = len(costs)
    others = [i for i in range(n) if i != start]
    m = len(others)
    if m == 0:
        return [start]
    full = 1 << m
    dp = np.full((full, m), np.inf)
    parent = np.full((full, m), -1, dtype=int)
    for j in range(m):
        dp[1 << j, j] = costs[start, others[j]]
    for mask in range(1, full):
        for j in range(m):
            if not mask & (1 << j) or not np.isfinite(dp[mask, j]):
                continue
            base = dp[mask, j]
            for k in range(m):
                if mask & (1 << k):
                    continue
                grown = mask | (1 << k)
                cand = base + costs[others[j], others[k]]
                if cand < dp[grown, k]:     # ties keep the lower-index j
                    dp[grown, k] = cand
                    parent[grown, k] = j
    tail = [int(np.argmin(dp[full - 1]))]
    mask = full - 1
    while parent[mask, tail[-1]] >= 0:
        j = int(parent[mask, tail[-1]])
        mask ^= 1 << tail[-1]
        tail.append(j)
    return [start] + [others[j] for j in tail[::-1]]


def _heuristic_route(costs: np.ndarray, start: int) -> list[int]:
    """Nearest-neighbor construction, then 2-opt to a local optimum."""
    n = len(costs)
    unvisited = [i for i in range(n) if i != start]
    order = [start]
    while unvisited:
        here = order[-1]
        best = min(unvisited, key=lambda j: (costs[here, j], j))
        unvisited.remove(best)
        order.append(best)

    improved = True
    while improved:
        improved = False
        for i in range(1, n - 1):
            for j in range(i + 1, n):
                before = costs[order[i - 1], order[i]]
                after = costs[order[i - 1], order[j]]
                if j + 1 < n:
                    before += costs[order[j], order[j + 1]]
                    after += costs[order[i], order[j + 1]]
                if after < before - 1e-12:
                    order[i:j + 1] = order[i:j + 1][::-1]
                    improved = True
        # loop until a full scan makes no move
    return order


def solve_route(costs: np.ndarray, start: int = 0) -> list[int]:
    """Open-path visit order starting at ``start``, visiting all waypoints.

    Small instances are solved to optimality by subset dynamic
    programming (2-opt local optima on random instances can otherwise
    land well above the optimum); larger ones use nearest-neighbor
    construction followed by 2-opt reversal improvement to a local
    optimum.  Both are deterministic with ties broken toward the lower
    index, and neither returns a route worse than plain nearest
    neighbor.
    """
    costs = np.asarray(costs, dtype=float)
    n = len(costs)
    if n == 0:
        return []
    if n <= _EXACT_ROUTE_MAX:
        return _exact_route(costs, start)
    return _heuristic_route(costs, start)


def plan_route(waypoints: list[Waypoint], scene: SceneSpec,
               planner: PlannerConfig | None = None) -> Route:
    """Order waypoints and reconstruct the grid path of every leg."""
    planner = planner if planner is not None else PlannerConfig()
    costs = cost_matrix(waypoints, scene, planner)
    order = solve_route(costs, start=0)
    grid = _grid_for(scene, planner)
    ordered = [waypoints[i] for i in order]
    legs = []
    for a, b in zip(ordered, ordered[1:]):
        legs.append(grid.path_between(grid.node_of(a.position),
                                      grid.node_of(b.position)))
    return Route(waypoints=ordered, legs=legs,
                 cost=_route_cost(costs, order))


# --------------------------------------------------------------------------
# Chebyshev re-sampling


def chebyshev_fractions(n: int) -> np.ndarray:
    """Chebyshev-node fractions of a unit interval, ascending in (0, 1)."""
    if n < 2:
        raise ValueError("need at least two nodes per segment")
    k = np.arange(1, n + 1)
    return np.sort((1.0 - np.cos(np.pi * (2 * k - 1) / (2 * n))) / 2.0)


def _arc_lengths(points: np.ndarray) -> np.ndarray:
    steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def chebyshev_path(route: Route, nodes_per_segment: int) -> Route:
    """Re-sample every leg at Chebyshev arc-length fractions.

    The original grid vertices are retained, so the re-sampled path
    traces exactly the same polyline; the added samples cluster near the
    leg endpoints.  Endpoints always remain part of the leg.
    """
    fractions = chebyshev_fractions(nodes_per_segment)
    new_legs = []
    for leg in route.legs:
        arc = _arc_lengths(leg)
        total = arc[-1]
        if total <= 0.0:
            new_legs.append(leg.copy())
            continue
        stations = np.unique(np.concatenate([arc, fractions * total]))
        pts = np.column_stack([np.interp(stations, arc, leg[:, a])
                               for a in range(3)])
        new_legs.append(pts)
    return Route(waypoints=route.waypoints, legs=new_legs, cost=route.cost)


# --------------------------------------------------------------------------
# time parameterization


def _profile_times(length: float, v_max: float, a_max: float):
    """Trapezoidal (or triangular) profile: duration and phase breakdown."""
    ramp_len = v_max * v_max / (2.0 * a_max)
    if length >= 2.0 * ramp_len:
        t_ramp = v_max / a_max
        t_cruise = (length - 2.0 * ramp_len) / v_max
        peak = v_max
    else:
        peak = math.sqrt(a_max * length)
        t_ramp = peak / a_max
        t_cruise = 0.0
    return 2.0 * t_ramp + t_cruise, t_ramp, t_cruise, peak


def _profile_arc(t, t_ramp, t_cruise, peak, a_max, length):
    """Arc position s(t) of the trapezoidal profile, vectorized."""
    t = np.asarray(t, dtype=float)
    t_end = 2.0 * t_ramp + t_cruise
    s = np.empty_like(t)
    rising = t < t_ramp
    cruising = (~rising) & (t < t_ramp + t_cruise)
    falling = (~rising) & (~cruising)
    s[rising] = 0.5 * a_max * t[rising] ** 2
    s[cruising] = 0.5 * a_max * t_ramp ** 2 + peak * (t[cruising] - t_ramp)
    td = np.minimum(t[falling], t_end) - (t_ramp + t_cruise)
    s[falling] = (0.5 * a_max * t_ramp ** 2 + peak * t_cruise
                  + peak * td - 0.5 * a_max * td ** 2)
    return np.minimum(s, length)


def time_parameterize(route: Route, v_max: float, a_max: float,
                      dwell: float = 1.0,
                      sample_dt: float = 0.02) -> Trajectory:
    """Trapezoidal speed profile over the route, stopping at waypoints.

    The drone halts and holds for ``dwell`` seconds at every capture
    waypoint (frames are taken during these windows); the start pose has
    no dwell.  Samples are uniform in time.  Yaw turns linearly along
    each leg toward the destination waypoint's yaw.
    """
    if v_max <= 0 or a_max <= 0:
        raise ValueError("v_max and a_max must be positive")
    if dwell < 0 or sample_dt <= 0:
        raise ValueError("dwell must be >= 0 and sample_dt > 0")

    # timeline pieces: ("hold", t0, t1, pos, yaw) and
    # ("move", t0, t1, leg arcs, leg points, yaw0, yaw1, profile)
    pieces = []
    windows = []
    t = 0.0
    wp = route.waypoints
    if wp and wp[0].is_capture:
        windows.append((t, t + dwell, wp[0].tag))
        if dwell > 0.0:
            pieces.append(("hold", t, t + dwell,
                           np.asarray(wp[0].position, dtype=float),
                           wp[0].yaw))
            t += dwell
    for i, leg in enumerate(route.legs):
        src, dst = wp[i], wp[i + 1]
        arc = _arc_lengths(leg)
        length = float(arc[-1])
        duration, t_ramp, t_cruise, peak = _profile_times(length, v_max,
                                                          a_max)
        if length > 0.0:
            pieces.append(("move", t, t + duration, arc, leg,
                           src.yaw, dst.yaw,
                           (t_ramp, t_cruise, peak, a_max, length)))
            t += duration
        if dst.is_capture:
            windows.append((t, t + dwell, dst.tag))
            if dwell > 0.0:
                pieces.append(("hold", t, t + dwell,
                               np.asarray(dst.position, dtype=float),
                               dst.yaw))
                t += dwell

    duration = t
    n = int(math.floor(duration / sample_dt + 1e-9)) + 1
    times = sample_dt * np.arange(n)
    if duration - times[-1] > 1e-9:
        times = np.append(times, duration)
    positions = np.empty((len(times), 3))
    yaws = np.empty(len(times))
    arcs = np.empty(len(times))

    if not pieces:
        start_pos = np.asarray(wp[0].position, dtype=float) if wp \
            else np.zeros(3)
        start_yaw = wp[0].yaw if wp else 0.0
        positions[:] = start_pos
        yaws[:] = start_yaw
        arcs[:] = 0.0
        return Trajectory(times=times, positions=positions, yaws=yaws,
                          arc=arcs, duration=duration, length=0.0,
                          capture_windows=windows)

    arc_base = 0.0
    bounds_t = np.array([p[2] for p in pieces])
    piece_of = np.searchsorted(bounds_t, times, side="right")
    piece_of = np.minimum(piece_of, len(pieces) - 1)
    for pi, piece in enumerate(pieces):
        sel = piece_of == pi
        if piece[0] == "hold":
            _, t0, t1, pos, yaw = piece
            positions[sel] = pos
            yaws[sel] = yaw
            arcs[sel] = arc_base
        else:
            _, t0, t1, arc, leg, yaw0, yaw1, prof = piece
            t_ramp, t_cruise, peak, a, length = prof
            if sel.any():
                s = _profile_arc(times[sel] - t0, t_ramp, t_cruise, peak, a,
                                 length)
                for axis in range(3):
                    positions[sel, axis] = np.interp(s, arc, leg[:, axis])
                frac = s / length
                turn = (yaw1 - yaw0 + math.pi) % (2.0 * math.pi) - math.pi
                yaws[sel] = yaw0 + frac * turn
                arcs[sel] = arc_base + s
            arc_base += length

    length = float(np.linalg.norm(np.diff(positions, axis=0),
                                  axis=1).sum())
    return Trajectory(times=times, positions=positions, yaws=yaws, arc=arcs,
                      duration=duration, length=length,
                      capture_windows=windows)


# --------------------------------------------------------------------------
# flight simulation


def simulate_flight(trajectory: Trajectory, scene: SceneSpec,
                    planner: PlannerConfig | None = None) -> FlightResult:
    """Sweep the drone sphere along the samples and count collision events.

    An event is a maximal contiguous run of samples that intersect a bed
    box or leave the flight bounds; mission time is the trajectory
    duration (capture dwells included) and distance its chord length.
    """
    planner = planner if planner is not None else PlannerConfig()
    layout, bounds = scene.layout, scene.bounds
    p = trajectory.positions
    r = planner.drone_radius
    lo = np.array([bounds.x_min, bounds.y_min, bounds.z_min])
    hi = np.array([bounds.x_max, bounds.y_max, bounds.z_max])
    violating = ((p < lo) | (p > hi)).any(axis=1)
    half = np.array([layout.bed_width, layout.bed_depth,
                     layout.bed_height]) / 2.0
    for index in range(1, layout.n_beds + 1):
        center = np.asarray(layout.bed_center(index))
        gap = np.abs(p - center) - half
        d2 = (np.maximum(gap, 0.0) ** 2).sum(axis=1)
        violating |= d2 <= r * r
    starts = violating & ~np.concatenate([[False], violating[:-1]])
    return FlightResult(t_m=float(trajectory.duration),
                        d_m=float(trajectory.length),
                        k=int(starts.sum()))


# --------------------------------------------------------------------------
# one-call mission planning


def plan_mission(mission, scene: SceneSpec,
                 planner: PlannerConfig | None = None
                 ) -> tuple[Route, Trajectory]:
    """Waypoints -> ordered route -> Chebyshev path -> timed trajectory."""
    planner = planner if planner is not None else PlannerConfig()
    waypoints = build_waypoints(mission, scene, standoff=planner.standoff)
    route = plan_route(waypoints, scene, planner)
    dense = chebyshev_path(route, planner.nodes_per_segment)
    trajectory = time_parameterize(dense, planner.v_max, planner.a_max,
                                   dwell=planner.dwell,
                                   sample_dt=planner.sample_dt)
    return dense, trajectory
