"""Mission scheduling, end-to-end execution, and batch evaluation.

A mission is a plant type plus a strictly ascending list of bed indices
("Tomato 2 3 8 14 25").  ``run_mission`` closes the loop for one
mission: plan the two-sided inspection route, fly it, capture and
analyze a frame at every dwell, fuse the two sides of each bed, and
score the reported total against ground truth.  ``run_batch`` repeats
this over freshly generated scenes with seeded random missions and
aggregates scores, error sources, and mission-parameter histograms; the
whole batch is a deterministic function of (n, master_seed, config)
regardless of how many workers execute it.
"""

from __future__ import annotations

import csv
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import PLANT_TYPES, AppConfig
from .detector import analyze_frame
from .fusion import BedCount, merge_bed_sides
from .planner import PlanningError, plan_mission, simulate_flight
from .scene import CameraModel, SceneSpec, generate_scene, ground_truth_count, render_frame
from .scorer import ScoreInputs, ScoreReport, compute_score

N_BEDS = 27


class MissionParseError(ValueError):
    """Raised when mission text cannot be parsed."""


@dataclass(frozen=True)
class Mission:
    """One counting assignment: a plant type and the beds to inspect."""

    plant_type: str                  # lowercase, one of PLANT_TYPES
    bed_indices: tuple[int, ...]     # strictly ascending, values in 1..27

    def __post_init__(self) -> None:
        if self.plant_type not in PLANT_TYPES:
            raise ValueError(f"unknown plant type {self.plant_type!r}")
        object.__setattr__(self, "bed_indices", tuple(self.bed_indices))
        if not self.bed_indices:
            raise ValueError("a mission needs at least one bed")
        previous = 0
        for index in self.bed_indices:
            if not previous < index <= N_BEDS:
                raise ValueError("bed indices must be strictly ascending "
                                 f"within 1..{N_BEDS}, got {self.bed_indices}")
            previous = index

    def __str__(self) -> str:
        return format_mission(self)


def parse_mission(text: str) -> Mission:
    """Parse mission text like ``"Tomato 2 3 8 14 25"``.

    The plant name is case-insensitive; bed indices must be strictly
    ascending integers in 1..27 and at least one must be given.  Errors
    name the offending token position (1-based).
    """
    tokens = text.split()
    if not tokens:
        raise MissionParseError("empty mission text")
    plant = tokens[0].lower()
    if plant not in PLANT_TYPES:
        raise MissionParseError(
            f"unknown plant {tokens[0]!r} at position 1; "
            f"expected one of {', '.join(PLANT_TYPES)}")
    if len(tokens) == 1:
        raise MissionParseError("missing bed indices after the plant name")
    indices = []
    previous = 0
    for position, token in enumerate(tokens[1:], start=2):
        try:
            index = int(token)
        except ValueError:
            raise MissionParseError(
                f"bad bed index {token!r} at position {position}") from None
        if not 1 <= index <= N_BEDS:
            raise MissionParseError(
                f"bed index {index} at position {position} "
                f"outside 1..{N_BEDS}")
        if index <= previous:
            raise MissionParseError(
                f"bed index {index} at position {position} "
                "is not strictly ascending")
        previous = index
        indices.append(index)
    return Mission(plant_type=plant, bed_indices=tuple(indices))


def format_mission(mission: Mission) -> str:
    """Render a mission back to its text form (round-trips exactly)."""
    return " ".join([mission.plant_type.capitalize(),
                     *map(str, mission.bed_indices)])


def random_mission(seed: int) -> Mission:
    """Deterministic random mission for a seed.

    The plant type is uniform over the three types and the bed set is
    uniform over all nonempty subsets of 1..27 (the empty draw is
    rejected and redrawn).
    """
    rng = random.Random(seed)
    plant = PLANT_TYPES[rng.randrange(len(PLANT_TYPES))]
    bits = 0
    while bits == 0:
        bits = rng.getrandbits(N_BEDS)
    indices = tuple(i + 1 for i in range(N_BEDS) if bits >> i & 1)
    return Mission(plant_type=plant, bed_indices=indices)


# --------------------------------------------------------------------------
# single-mission execution


@dataclass
class MissionReport:
    """Everything observed and scored while flying one mission."""

    mission: Mission
    reported_count: int
    true_count: int
    bed_counts: list[BedCount]
    t_m: float
    d_m: float
    k: int
    score: ScoreReport
    missing_beds: bool
    counting_error: bool
    collisions: bool
    failure: str | None = None       # planning diagnostic, None when flown
    scene_seed: int | None = None    # batch bookkeeping
    mission_seed: int | None = None

    def __post_init__(self) -> None:
        if self.counting_error != (self.reported_count != self.true_count):
            raise ValueError("counting_error flag contradicts the counts")
        if self.collisions != (self.k > 0):
            raise ValueError("collisions flag contradicts k")


def _zero_score() -> ScoreReport:
    return ScoreReport(p_f=0.0, p_t=0.0, p_d=0.0, p_c=0.0, p=0.0)


def run_mission(scene: SceneSpec, mission: Mission,
                config: AppConfig | None = None) -> MissionReport:
    """Fly one mission end to end and score it.

    Planning failures do not raise: they come back as a report with zero
    score, no observations, and the diagnostic in ``failure``.
    """
    config = config if config is not None else AppConfig()
    true_count = ground_truth_count(scene, mission)
    try:
        route, trajectory = plan_mission(mission, scene, config.planner)
    except PlanningError as exc:
        return MissionReport(
            mission=mission, reported_count=0, true_count=true_count,
            bed_counts=[], t_m=0.0, d_m=0.0, k=0, score=_zero_score(),
            missing_beds=True, counting_error=0 != true_count,
            collisions=False, failure=str(exc))

    t_m, d_m, k = simulate_flight(trajectory, scene, config.planner)

    pose_of = {w.tag: w for w in route.waypoints}
    observations = {}
    for _, _, tag in trajectory.capture_windows:
        waypoint = pose_of[tag]
        camera = CameraModel.at(waypoint.position, waypoint.yaw,
                                width=config.camera.width,
                                height=config.camera.height,
                                focal=config.camera.focal)
        bed_index, side = tag
        frame = render_frame(scene, camera, bed_index=bed_index, side=side)
        obs = analyze_frame(frame, mission.plant_type,
                            config.profile, config.detector)
        observations[tag] = obs[0]

    bed_counts = []
    for bed_index in mission.bed_indices:
        merged = merge_bed_sides(observations[(bed_index, "A")],
                                 observations[(bed_index, "B")],
                                 match_radius=config.planner.match_radius)
        bed_counts.append(merged)

    reported = sum(bc.count for bc in bed_counts)
    score = compute_score(ScoreInputs(
        c_r=reported, c_t=true_count, t_m=t_m, d_m=d_m, k=k,
        t_b=config.scoring.t_base, d_b=config.scoring.d_base))
    return MissionReport(
        mission=mission, reported_count=reported, true_count=true_count,
        bed_counts=bed_counts, t_m=t_m, d_m=d_m, k=k, score=score,
        missing_beds=any(bc.partially_observed for bc in bed_counts),
        counting_error=reported != true_count, collisions=k > 0)


# --------------------------------------------------------------------------
# batch evaluation


@dataclass(frozen=True)
class BatchSummary:
    """Aggregates over one batch of missions."""

    n_missions: int
    mean_p_f: float
    mean_p_t: float
    mean_p_d: float
    mean_p_c: float
    mean_p: float
    n_missing_beds: int
    n_collisions: int
    n_counting_errors: int
    n_failures: int
    n_clean: int                      # missions with no flag at all
    bed_histogram: tuple[int, ...]    # visits of each bed index 1..27
    length_histogram: tuple[int, ...]  # missions with L beds, L = 1..27
    plant_histogram: tuple[int, ...]  # per PLANT_TYPES order

    def __post_init__(self) -> None:
        n = self.n_missions
        if sum(self.length_histogram) != n or sum(self.plant_histogram) != n:
            raise ValueError("histogram totals must match the mission count")
        visits = sum(count * (length + 1)
                     for length, count in enumerate(self.length_histogram))
        if sum(self.bed_histogram) != visits:
            raise ValueError("bed-visit histogram inconsistent with lengths")
        decomposed = (self.mean_p_f + self.mean_p_t + self.mean_p_d
                      - self.mean_p_c)
        if n and abs(self.mean_p - decomposed) > 1e-9:
            raise ValueError("mean total must decompose into component means")

    def percentage(self, count: int) -> float:
        return 100.0 * count / self.n_missions if self.n_missions else 0.0


def summarize(reports: list[MissionReport]) -> BatchSummary:
    """Reduce mission reports to a BatchSummary."""
    n = len(reports)
    beds = [0] * N_BEDS
    lengths = [0] * N_BEDS
    plants = [0] * len(PLANT_TYPES)
    for report in reports:
        for index in report.mission.bed_indices:
            beds[index - 1] += 1
        lengths[len(report.mission.bed_indices) - 1] += 1
        plants[PLANT_TYPES.index(report.mission.plant_type)] += 1

    def mean(values):
        return sum(values) / n if n else 0.0

    return BatchSummary(
        n_missions=n,
        mean_p_f=mean([r.score.p_f for r in reports]),
        mean_p_t=mean([r.score.p_t for r in reports]),
        mean_p_d=mean([r.score.p_d for r in reports]),
        mean_p_c=mean([r.score.p_c for r in reports]),
        mean_p=mean([r.score.p for r in reports]),
        n_missing_beds=sum(r.missing_beds for r in reports),
        n_collisions=sum(r.collisions for r in reports),
        n_counting_errors=sum(r.counting_error for r in reports),
        n_failures=sum(r.failure is not None for r in reports),
        n_clean=sum(not (r.missing_beds or r.counting_error or r.collisions
                         or r.failure is not None) for r in reports),
        bed_histogram=tuple(beds),
        length_histogram=tuple(lengths),
        plant_histogram=tuple(plants))


def _mission_job(job) -> MissionReport:
    scene_seed, mission_seed, config = job
    scene = generate_scene(scene_seed, config.scene)
    mission = random_mission(mission_seed)
    report = run_mission(scene, mission, config)
    report.scene_seed = scene_seed
    report.mission_seed = mission_seed
    return report


def batch_reports(n: int, master_seed: int,
                  config: AppConfig | None = None, *,
                  workers: int = 1, progress=None) -> list[MissionReport]:
    """Run n seeded missions (fresh scene each) and return their reports.

    Per-mission seeds are drawn up front from ``master_seed``, so the
    result is identical no matter how many workers execute the missions.
    """
    if n < 1:
        raise ValueError("need at least one mission")
    config = config if config is not None else AppConfig()
    rng = random.Random(master_seed)
    jobs = [(rng.getrandbits(32), rng.getrandbits(32), config)
            for _ in range(n)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            iterator = pool.map(_mission_job, jobs)
            reports = []
            for i, report in enumerate(iterator):
                reports.append(report)
                if progress is not None:
                    progress(i + 1, n)
    else:
        reports = []
        for i, job in enumerate(jobs):
            reports.append(_mission_job(job))
            if progress is not None:
                progress(i + 1, n)
    return reports


def run_batch(n: int, master_seed: int, config: AppConfig | None = None, *,
              workers: int = 1, report_path=None,
              progress=None) -> BatchSummary:
    """Run a batch and optionally write the mission and histogram CSVs."""
    reports = batch_reports(n, master_seed, config,
                            workers=workers, progress=progress)
    summary = summarize(reports)
    if report_path is not None:
        write_reports_csv(reports, report_path)
        write_histogram_csvs(summary, report_path)
    return summary


# --------------------------------------------------------------------------
# CSV reporting

REPORT_COLUMNS = ("scene_seed", "mission_seed", "mission", "n_beds",
                  "c_r", "c_t", "t_m", "d_m", "k",
                  "p_f", "p_t", "p_d", "p_c", "p",
                  "missing_beds", "counting_error", "collisions", "failure")


def _report_row(report: MissionReport) -> list:
    def fmt(value: float) -> str:
        return "%.6f" % value

    return [
        "" if report.scene_seed is None else report.scene_seed,
        "" if report.mission_seed is None else report.mission_seed,
        format_mission(report.mission),
        len(report.mission.bed_indices),
        report.reported_count,
        report.true_count,
        fmt(report.t_m),
        fmt(report.d_m),
        report.k,
        fmt(report.score.p_f),
        fmt(report.score.p_t),
        fmt(report.score.p_d),
        fmt(report.score.p_c),
        fmt(report.score.p),
        int(report.missing_beds),
        int(report.counting_error),
        int(report.collisions),
        report.failure or "",
    ]


def write_reports_csv(reports: list[MissionReport], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for report in reports:
            writer.writerow(_report_row(report))


def histogram_paths(report_path) -> dict[str, Path]:
    base = Path(report_path)
    return {kind: base.with_name(f"{base.stem}_{kind}{base.suffix or '.csv'}")
            for kind in ("beds", "lengths", "plants")}


def write_histogram_csvs(summary: BatchSummary, report_path) -> dict[str, Path]:
    """Write the three mission-parameter histograms next to the report."""
    paths = histogram_paths(report_path)
    with open(paths["beds"], "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("bed_index", "missions"))
        for index, count in enumerate(summary.bed_histogram, start=1):
            writer.writerow((index, count))
    with open(paths["lengths"], "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("n_beds", "missions"))
        for length, count in enumerate(summary.length_histogram, start=1):
            writer.writerow((length, count))
    with open(paths["plants"], "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("plant_type", "missions"))
        for plant, count in zip(PLANT_TYPES, summary.plant_histogram):
            writer.writerow((plant, count))
    return paths


def best_k_mean(reports: list[MissionReport], k: int) -> float:
    """Mean total score over the k highest-scoring missions."""
    if not 1 <= k <= len(reports):
        raise ValueError("k must be between 1 and the number of reports")
    top = sorted((r.score.p for r in reports), reverse=True)[:k]
    return sum(top) / k
