"""Pareto-front extraction and reward/metric aggregation.

Both objectives are minimized: total HPWL (mm) and hotspot temperature
(degC).  A point dominates another when it is no worse on both axes and
strictly better on at least one; fronts keep the non-dominated set sorted
by wirelength.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class ParetoPoint:
    wl: float
    temp: float
    method: str = ""
    seed: int = 0
    tag: str = ""


@dataclass
class MethodPoints:
    method: str
    cloud: list[ParetoPoint] = field(default_factory=list)
    front: list[ParetoPoint] = field(default_factory=list)


def dominates(p: ParetoPoint, q: ParetoPoint) -> bool:
    return (p.wl <= q.wl and p.temp <= q.temp) and (p.wl < q.wl or p.temp < q.temp)


def non_dominated(points) -> list[ParetoPoint]:
    """Non-dominated subset sorted by wl ascending.  Coordinate duplicates
    keep the first point in input order."""
    points = list(points)
    seen_coords = set()
    kept = []
    for i, p in enumerate(points):
        if any(dominates(q, p) for q in points):
            continue
        if (p.wl, p.temp) in seen_coords:
            continue
        seen_coords.add((p.wl, p.temp))
        kept.append(p)
    kept.sort(key=lambda p: (p.wl, p.temp))
    return kept


def hypervolume_2d(front, ref_point: tuple[float, float]) -> float:
    """Area of the union of rectangles [p.wl, ref.wl] x [p.temp, ref.temp]
    via a single wl-ascending sweep."""
    ref_wl, ref_temp = ref_point
    points = list(front)
    for p in points:
        if p.wl > ref_wl or p.temp > ref_temp:
            raise ValueError(f"point ({p.wl}, {p.temp}) lies outside the reference box "
                             f"({ref_wl}, {ref_temp})")
    area = 0.0
    prev_temp = ref_temp
    for p in sorted(points, key=lambda p: (p.wl, p.temp)):
        if p.temp < prev_temp:
            area += (ref_wl - p.wl) * (prev_temp - p.temp)
            prev_temp = p.temp
    return area


def reference_point(clouds, margin: float = 1.05) -> tuple[float, float]:
    """Component-wise max over all pooled points, widened symmetrically so
    every method's cloud fits in the reference box."""
    points = [p for cloud in clouds for p in cloud]
    if not points:
        raise ValueError("no points")
    return (margin * max(p.wl for p in points), margin * max(p.temp for p in points))


@dataclass(frozen=True)
class CumulativeReward:
    raw: dict[str, float]
    normalized: dict[str, float]
    raw_total: float
    normalized_total: float


def cumulative_reward(trace) -> CumulativeReward:
    """Episode reward sums split by agent tag.

    Raw rewards are the negated metric deltas of each agent's own
    objective at its own steps (they telescope to the episode's total
    metric growth); normalized rewards are the [0, 1] training signals.
    """
    raw: dict[str, float] = {}
    normalized: dict[str, float] = {}
    for rec in trace:
        if rec.agent == "thermal":
            raw_r = -rec.temp_delta
            norm_r = rec.thermal_reward
        else:
            raw_r = -rec.wl_delta
            norm_r = rec.wire_reward
        raw[rec.agent] = raw.get(rec.agent, 0.0) + raw_r
        normalized[rec.agent] = normalized.get(rec.agent, 0.0) + norm_r
    return CumulativeReward(raw=raw, normalized=normalized,
                            raw_total=sum(raw.values()),
                            normalized_total=sum(normalized.values()))


POINTS_FILE = "points.csv"
POINTS_COLUMNS = ("method", "seed", "tag", "wl_mm", "temp_c")


def read_points_csv(path) -> list[ParetoPoint]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(ParetoPoint(wl=float(row["wl_mm"]), temp=float(row["temp_c"]),
                                   method=row["method"], seed=int(row["seed"]),
                                   tag=row["tag"]))
    return out


def find_points_files(run_dir) -> list[Path]:
    return sorted(Path(run_dir).rglob(POINTS_FILE))


def assemble_front(run_dirs) -> dict[str, MethodPoints]:
    """Pool every evaluated layout across the given run directories and
    extract each method's non-dominated front."""
    by_method: dict[str, MethodPoints] = {}
    for run_dir in run_dirs:
        files = find_points_files(run_dir)
        if not files:
            raise FileNotFoundError(f"no {POINTS_FILE} under {run_dir}")
        for f in files:
            for p in read_points_csv(f):
                by_method.setdefault(p.method, MethodPoints(p.method)).cloud.append(p)
    for mp in by_method.values():
        mp.front = non_dominated(mp.cloud)
    return by_method
