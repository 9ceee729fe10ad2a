"""Run-directory persistence: manifests, layouts, traces and metric tables.

Every command writes a self-describing run directory: a manifest with the
resolved parameters and input digests, a snapshot of the benchmark, and
delimited-text tables for all metrics.  Replaying the manifest's command
on the same machine reproduces the metric rows exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .model import BenchmarkConfig, Orientation, save_benchmark

MANIFEST_VERSION = 1
LAYOUT_VERSION = 1

TRACE_COLUMNS = ("step_index", "chiplet_id", "agent", "action", "row", "col", "orientation",
                 "reward", "wl_after", "temp_after", "wl_delta", "temp_delta",
                 "wire_reward", "thermal_reward")


def sha256_of(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    method: str
    benchmark_name: str
    benchmark_digest: str
    params: dict
    seeds: list[int]
    status: str = "incomplete"
    tool_version: str = __version__
    format_version: int = MANIFEST_VERSION
    started_utc: str = field(default_factory=utc_now)
    finished_utc: str = ""
    artifacts: dict = field(default_factory=dict)

    def write(self, run_dir) -> Path:
        path = Path(run_dir) / "manifest.json"
        path.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, run_dir) -> "RunManifest":
        data = json.loads((Path(run_dir) / "manifest.json").read_text())
        if data.get("format_version") != MANIFEST_VERSION:
            raise ValueError(f"unsupported manifest version {data.get('format_version')}")
        return cls(**data)


def start_run(run_dir, method: str, config: BenchmarkConfig, params: dict,
              seeds: list[int]) -> RunManifest:
    """Create the run directory, snapshot the benchmark, write an
    'incomplete' manifest (finalized by finish_run)."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    snap = save_benchmark(config, run_dir / "benchmark.yaml")
    manifest = RunManifest(method=method, benchmark_name=config.name,
                           benchmark_digest=sha256_of(snap), params=params, seeds=seeds)
    manifest.artifacts["benchmark"] = "benchmark.yaml"
    manifest.write(run_dir)
    return manifest


def finish_run(run_dir, manifest: RunManifest, status: str = "complete") -> None:
    manifest.status = status
    manifest.finished_utc = utc_now()
    manifest.write(run_dir)


def write_csv(path, columns, rows) -> Path:
    """Delimited text with a header row; floats formatted with repr-exact
    precision so replays diff clean."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".12g")
    if isinstance(v, bool):
        return int(v)
    return v


def read_csv_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_points_csv(path, rows) -> Path:
    """rows: iterables of (method, seed, tag, wl_mm, temp_c)."""
    return write_csv(path, ("method", "seed", "tag", "wl_mm", "temp_c"), rows)


def write_trace_csv(path, trace) -> Path:
    rows = [[getattr(rec, col) for col in TRACE_COLUMNS] for rec in trace]
    return write_csv(path, TRACE_COLUMNS, rows)


def write_layout_json(path, layout: dict, benchmark_name: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = [
        {"chiplet": cid, "row": int(row), "col": int(col),
         "orientation": orientation.value if isinstance(orientation, Orientation) else str(orientation)}
        for cid, (row, col, orientation) in sorted(layout.items())
    ]
    path.write_text(json.dumps({"format_version": LAYOUT_VERSION,
                                "benchmark": benchmark_name,
                                "records": records}, indent=2) + "\n")
    return path


def read_layout_json(path) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("format_version") != LAYOUT_VERSION:
        raise ValueError(f"unsupported layout version {data.get('format_version')}")
    return {rec["chiplet"]: (int(rec["row"]), int(rec["col"]),
                             Orientation(rec["orientation"]))
            for rec in data["records"]}


def write_dict_rows_csv(path, rows: list[dict]) -> Path:
    """CSV from homogeneous dict rows, column order taken from the first row."""
    if not rows:
        return write_csv(path, (), [])
    columns = list(rows[0].keys())
    return write_csv(path, columns, [[row.get(c) for c in columns] for row in rows])
