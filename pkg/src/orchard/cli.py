"""Command-line interface.

Subcommands cover the whole pipeline: scene generation, rendering,
detection, route planning, single missions, batch evaluation, and score
arithmetic.  A config file can be given with ``--config`` (or the
``ORCHARD_CONFIG`` environment variable); individual flags override it.
Exit status is 0 on success and 2 on parse, config, or planning errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import imgio
from .config import AppConfig, ConfigError, config_from_dict, load_config
from .detector import analyze_frame, annotate
from .fusion import merge_bed_sides
from .harness import (MissionParseError, batch_reports, best_k_mean,
                      parse_mission, run_mission, summarize,
                      write_histogram_csvs, write_reports_csv)
from .planner import PlanningError, plan_mission, simulate_flight
from .scene import (CameraModel, capture_pose, generate_scene, load_scene,
                    render_frame, save_scene)
from .scorer import ScoreInputs, compute_score


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orchard",
        description="Closed-loop fruit-counting drone simulator.")
    parser.add_argument("--config", metavar="PATH",
                        help="JSON config file (default: $ORCHARD_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scene", help="generate a random scene")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output", required=True, metavar="scene.json")

    p = sub.add_parser("render", help="render an RGB frame from a pose")
    p.add_argument("--scene", required=True, metavar="scene.json")
    p.add_argument("--pose", required=True, metavar='"x y z yaw"')
    p.add_argument("-o", "--output", required=True, metavar="out.ppm")
    p.add_argument("--depth", metavar="out.pfm",
                   help="also write the depth image")

    p = sub.add_parser("detect", help="detect and count fruits per bed")
    p.add_argument("--scene", required=True, metavar="scene.json")
    p.add_argument("--mission", required=True, metavar='"Tomato 2 3"')
    p.add_argument("--detector-config", metavar="PATH",
                   help="JSON with color profile and detector thresholds")
    p.add_argument("--dump-annotated", metavar="DIR",
                   help="write annotated capture frames as PPM files")

    p = sub.add_parser("plan", help="plan a mission trajectory")
    p.add_argument("--scene", required=True, metavar="scene.json")
    p.add_argument("--mission", required=True, metavar='"Tomato 2 3"')
    p.add_argument("-o", "--output", required=True, metavar="traj.csv")

    p = sub.add_parser("run", help="fly one mission and score it")
    p.add_argument("--scene", required=True, metavar="scene.json")
    p.add_argument("--mission", required=True, metavar='"Tomato 2 3"')

    p = sub.add_parser("batch", help="evaluate a batch of random missions")
    p.add_argument("-n", type=int, default=500, metavar="N")
    p.add_argument("--seed", type=int, default=0, metavar="S")
    p.add_argument("-o", "--output", metavar="report.csv",
                   help="mission CSV; histogram CSVs written alongside")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--best-k", type=int, metavar="K",
                   help="also report the mean of the best K mission scores")
    p.add_argument("--quiet", action="store_true",
                   help="suppress per-mission progress")

    p = sub.add_parser("score", help="evaluate the scoring formula")
    p.add_argument("--cr", type=int, required=True, help="reported count")
    p.add_argument("--ct", type=int, required=True, help="true count")
    p.add_argument("--t", type=float, required=True, help="mission seconds")
    p.add_argument("--d", type=float, required=True, help="mission meters")
    p.add_argument("--k", type=int, required=True, help="collision count")
    p.add_argument("--t-base", type=float, default=None)
    p.add_argument("--d-base", type=float, default=None)
    return parser


def _parse_pose(text: str):
    parts = text.split()
    if len(parts) != 4:
        raise ValueError(f'pose must be "x y z yaw", got {text!r}')
    return tuple(float(v) for v in parts)


def _apply_detector_config(config: AppConfig, path: str) -> AppConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    unknown = set(data) - {"profile", "detector"}
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    merged = config.to_dict()
    merged.update(data)
    return config_from_dict(merged)


def _cmd_gen_scene(args, config: AppConfig) -> int:
    scene = generate_scene(args.seed, config.scene)
    save_scene(scene, args.output)
    total = sum(bed.gt_total for bed in scene.beds)
    print(f"wrote {args.output}: seed {args.seed}, "
          f"{len(scene.beds)} beds, {total} fruits")
    return 0


def _cmd_render(args, config: AppConfig) -> int:
    scene = load_scene(args.scene)
    x, y, z, yaw = _parse_pose(args.pose)
    camera = CameraModel.at((x, y, z), yaw,
                            width=config.camera.width,
                            height=config.camera.height,
                            focal=config.camera.focal)
    frame = render_frame(scene, camera)
    imgio.write_ppm(args.output, frame.rgb)
    print(f"wrote {args.output}")
    if args.depth:
        imgio.write_pfm(args.depth, frame.depth)
        print(f"wrote {args.depth}")
    return 0


def _cmd_detect(args, config: AppConfig) -> int:
    scene = load_scene(args.scene)
    if args.detector_config:
        config = _apply_detector_config(config, args.detector_config)
    mission = parse_mission(args.mission)
    dump_dir = None
    if args.dump_annotated:
        dump_dir = Path(args.dump_annotated)
        dump_dir.mkdir(parents=True, exist_ok=True)

    total = 0
    for bed_index in mission.bed_indices:
        sides = {}
        for side in ("A", "B"):
            pos, yaw = capture_pose(scene.layout, bed_index, side)
            camera = CameraModel.at(pos, yaw,
                                    width=config.camera.width,
                                    height=config.camera.height,
                                    focal=config.camera.focal)
            frame = render_frame(scene, camera,
                                 bed_index=bed_index, side=side)
            obs = analyze_frame(frame, mission.plant_type,
                                config.profile, config.detector)[0]
            sides[side] = obs
            if dump_dir is not None:
                image = annotate(frame.rgb, obs.detections)
                imgio.write_ppm(dump_dir / f"bed{bed_index:02d}_{side}.ppm",
                                image)
        merged = merge_bed_sides(sides["A"], sides["B"],
                                 match_radius=config.planner.match_radius)
        total += merged.count
        note = " (bed not found)" if merged.partially_observed else ""
        print(f"bed {bed_index:2d}: side A {sides['A'].count:2d}  "
              f"side B {sides['B'].count:2d}  fused {merged.count:2d}{note}")
    print(f"total {mission.plant_type} count: {total}")
    return 0


def _cmd_plan(args, config: AppConfig) -> int:
    scene = load_scene(args.scene)
    mission = parse_mission(args.mission)
    route, trajectory = plan_mission(mission, scene, config.planner)
    result = simulate_flight(trajectory, scene, config.planner)
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("t", "x", "y", "z", "yaw"))
        for t, position, yaw in trajectory.samples:
            writer.writerow(("%.6f" % t, "%.6f" % position[0],
                             "%.6f" % position[1], "%.6f" % position[2],
                             "%.6f" % yaw))
    order = " -> ".join(
        "start" if w.tag == "start" else f"{w.tag[0]}{w.tag[1]}"
        for w in route.waypoints)
    print(f"route: {order}")
    print(f"planned cost {route.cost:.2f} m; flight {result.d_m:.2f} m "
          f"in {result.t_m:.2f} s, {result.k} collisions")
    print(f"wrote {args.output}: {len(trajectory.times)} samples")
    return 0


def _cmd_run(args, config: AppConfig) -> int:
    scene = load_scene(args.scene)
    mission = parse_mission(args.mission)
    report = run_mission(scene, mission, config)
    if report.failure is not None:
        print(f"planning failed: {report.failure}", file=sys.stderr)
        return 2
    for bc in report.bed_counts:
        note = " (bed not found)" if bc.partially_observed else ""
        print(f"bed {bc.bed_index:2d}: {bc.count}{note}")
    print(f"reported {report.reported_count}, truth {report.true_count}; "
          f"t_m {report.t_m:.2f} s, d_m {report.d_m:.2f} m, k {report.k}")
    s = report.score
    print(f"score: p_f {s.p_f:.2f}  p_t {s.p_t:.2f}  p_d {s.p_d:.2f}  "
          f"p_c {s.p_c:.2f}  total {s.p:.2f}")
    return 0


def _cmd_batch(args, config: AppConfig) -> int:
    if args.n < 1:
        raise ValueError("need at least one mission")
    progress = None
    if not args.quiet:
        def progress(done, total):
            print(f"\rmission {done}/{total}", end="", file=sys.stderr,
                  flush=True)
    reports = batch_reports(args.n, args.seed, config,
                            workers=args.workers, progress=progress)
    if progress is not None:
        print(file=sys.stderr)
    summary = summarize(reports)
    if args.output:
        write_reports_csv(reports, args.output)
        paths = write_histogram_csvs(summary, args.output)
        print(f"wrote {args.output} and "
              f"{', '.join(str(p) for p in paths.values())}")
    print(f"missions: {summary.n_missions}")
    print(f"mean scores: p_f {summary.mean_p_f:.2f}  "
          f"p_t {summary.mean_p_t:.2f}  p_d {summary.mean_p_d:.2f}  "
          f"p_c {summary.mean_p_c:.2f}  total {summary.mean_p:.2f}")
    print(f"missions with missing beds: {summary.n_missing_beds} "
          f"({summary.percentage(summary.n_missing_beds):.2f} %)")
    print(f"missions with collisions: {summary.n_collisions} "
          f"({summary.percentage(summary.n_collisions):.2f} %)")
    print(f"missions with counting errors: {summary.n_counting_errors} "
          f"({summary.percentage(summary.n_counting_errors):.2f} %)")
    print(f"failed missions: {summary.n_failures} "
          f"({summary.percentage(summary.n_failures):.2f} %)")
    if args.best_k is not None:
        print(f"best-{args.best_k} mean score: "
              f"{best_k_mean(reports, args.best_k):.2f}")
    return 0


def _cmd_score(args, config: AppConfig) -> int:
    t_base = args.t_base if args.t_base is not None else config.scoring.t_base
    d_base = args.d_base if args.d_base is not None else config.scoring.d_base
    report = compute_score(ScoreInputs(c_r=args.cr, c_t=args.ct, t_m=args.t,
                                       d_m=args.d, k=args.k,
                                       t_b=t_base, d_b=d_base))
    print(f"p_f {report.p_f:.4f}")
    print(f"p_t {report.p_t:.4f}")
    print(f"p_d {report.p_d:.4f}")
    print(f"p_c {report.p_c:.4f}")
    print(f"p   {report.p:.4f}")
    return 0


_COMMANDS = {
    "gen-scene": _cmd_gen_scene,
    "render": _cmd_render,
    "detect": _cmd_detect,
    "plan": _cmd_plan,
    "run": _cmd_run,
    "batch": _cmd_batch,
    "score": _cmd_score,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        return _COMMANDS[args.command](args, config)
    except (MissionParseError, PlanningError, ConfigError, ValueError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
