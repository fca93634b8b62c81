"""
Planning a two-sided inspection flight
======================================

A mission names the beds to inspect; each bed needs a photograph from
both aisles, so the planner works on 2·beds + 1 waypoints (start plus
one capture pose per side).  Pairwise travel costs come from shortest
paths over a voxel grid in which the beds — inflated by the drone
radius plus a clearance margin — are obstacles.  A route solver orders
the captures, each grid leg is resampled at Chebyshev stations so
samples cluster near the endpoints, and a trapezoidal velocity profile
turns the geometry into a time-stamped trajectory with a dwell at
every capture.  Finally the flight is simulated against the scene to
confirm it stays inside the arena and clear of every bed.
"""

import pathlib

import numpy as np

from orchard.config import AppConfig
from orchard.harness import parse_mission
from orchard.planner import (build_waypoints, chebyshev_fractions,
                             cost_matrix, plan_mission, simulate_flight,
                             solve_route)
from orchard.scene import generate_scene

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

scene = generate_scene(seed=11)
config = AppConfig()
mission = parse_mission("Tomato 2 3 8 14 25")

# ----------------------------------------------------------- waypoints
waypoints = build_waypoints(mission, scene)
print(f"{len(waypoints)} waypoints for mission '{mission}':")
for w in waypoints[:4]:
    tag = "start" if w.tag == "start" else f"bed {w.tag[0]} side {w.tag[1]}"
    print(f"  {tag:15s} at ({w.position[0]:5.2f}, {w.position[1]:5.2f}, "
          f"{w.position[2]:4.2f}) yaw {w.yaw:+.3f}")
print("  ...")

# -------------------------------------------------------- travel costs
# grid shortest paths, not straight lines: crossing a bed row forces a
# detour around the inflated obstacle, and the matrix shows it
costs = cost_matrix(waypoints, scene, config.planner)
same_aisle = (1, 3)     # side A of beds 2 and 3: an unobstructed hop
across = (1, 2)         # sides A and B of bed 2: the bed is in the way
for label, (i, j) in (("same-aisle hop", same_aisle),
                      ("crossing to the other aisle", across)):
    chord = np.linalg.norm(np.asarray(waypoints[i].position)
                           - np.asarray(waypoints[j].position))
    print(f"{label}: {costs[i, j]:.2f} m (straight line {chord:.2f} m)")

order = solve_route(costs, start=0)
print("visit order:", " -> ".join(
    "start" if waypoints[i].tag == "start"
    else f"{waypoints[i].tag[0]}{waypoints[i].tag[1]}" for i in order))

# ----------------------------------------------- chebyshev resampling
u = chebyshev_fractions(config.planner.nodes_per_segment)
print(f"chebyshev stations (n={len(u)}): first gap {u[1] - u[0]:.4f}, "
      f"middle gap {np.diff(u).max():.4f} — samples bunch near endpoints")

# -------------------------------------------------- timed trajectory
route, trajectory = plan_mission(mission, scene, config.planner)
print(f"planned length {route.cost:.2f} m, duration {trajectory.duration:.2f} s "
      f"including a {config.planner.dwell:.1f} s dwell at each capture")

speeds = (np.linalg.norm(np.diff(trajectory.positions, axis=0), axis=1)
          / np.diff(trajectory.times))
print(f"peak sampled speed {speeds.max():.3f} m/s "
      f"(limit {config.planner.v_max} m/s)")

result = simulate_flight(trajectory, scene, config.planner)
print(f"simulated flight: {result.t_m:.2f} s over {result.d_m:.2f} m, "
      f"{result.k} collisions")

path = OUT / "trajectory.csv"
with open(path, "w", encoding="utf-8") as fh:
    fh.write("t,x,y,z,yaw\n")
    for t, position, yaw in trajectory.samples:
        fh.write(f"{t:.6f},{position[0]:.6f},{position[1]:.6f},"
                 f"{position[2]:.6f},{yaw:.6f}\n")
print(f"wrote {len(trajectory.times)} samples to {path}")
