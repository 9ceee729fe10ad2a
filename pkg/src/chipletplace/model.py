"""Domain types and benchmark configuration.

A benchmark bundles the chiplets to place, the netlist connecting them,
the interposer canvas/grid geometry and the thermal parameters.  Configs
are loaded from YAML documents (see ``docs`` section of the README for
the schema) and are immutable once constructed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import yaml

FORMAT_VERSION = 1

DEFAULT_GRID_N = 64
DEFAULT_TDP_THRESHOLD = 80.0
# canvas side defaults to this multiple of sqrt(total chiplet area)
DEFAULT_CANVAS_FACTOR = 1.35
DEFAULT_SPACING = 0

DEFAULT_AMBIENT_C = 45.0
# Fallback conductances for configs that carry no thermal section.  The
# ratio keeps the lateral interaction length at a few cells on a 64-cell
# grid; the absolute scale was fixed once by `chipletplace calibrate-thermal`
# against the shipped multi-gpu preset (see that preset's thermal block).
DEFAULT_CONDUCTANCE_RATIO = 25.0
DEFAULT_VERTICAL_CONDUCTANCE = 0.01
DEFAULT_LATERAL_CONDUCTANCE = DEFAULT_VERTICAL_CONDUCTANCE * DEFAULT_CONDUCTANCE_RATIO

_PRESET_DIR = Path(__file__).parent / "presets"


class ConfigError(ValueError):
    """Benchmark document fails validation; carries the offending field path."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class Orientation(Enum):
    R0 = "R0"
    R90 = "R90"


@dataclass(frozen=True)
class Chiplet:
    """One die instance: physical footprint in mm plus its power budget."""

    id: str
    width: float
    height: float
    tdp: float
    rotatable: bool = True

    def __post_init__(self):
        if not self.id:
            raise ConfigError("chiplet id must be non-empty")
        if not (math.isfinite(self.width) and self.width > 0):
            raise ConfigError("width must be finite and > 0", f"chiplet[{self.id}].width")
        if not (math.isfinite(self.height) and self.height > 0):
            raise ConfigError("height must be finite and > 0", f"chiplet[{self.id}].height")
        if not (math.isfinite(self.tdp) and self.tdp >= 0):
            raise ConfigError("tdp must be finite and >= 0", f"chiplet[{self.id}].tdp")

    @property
    def area(self) -> float:
        return self.width * self.height

    def dims(self, orientation: Orientation) -> tuple[float, float]:
        """(width, height) in mm for the given orientation."""
        if orientation is Orientation.R90:
            return self.height, self.width
        return self.width, self.height


@dataclass(frozen=True)
class Net:
    """Hyperedge over chiplet ids; HPWL uses the endpoints' geometric centers."""

    id: str
    endpoints: tuple[str, ...]
    weight: float = 1.0

    def __post_init__(self):
        if len(set(self.endpoints)) < 2:
            raise ConfigError("net needs at least two distinct endpoints", f"net[{self.id}].endpoints")
        if not (math.isfinite(self.weight) and self.weight >= 0):
            raise ConfigError("weight must be finite and >= 0", f"net[{self.id}].weight")


@dataclass(frozen=True)
class ThermalParams:
    """Lumped steady-state model: lateral cell-to-cell and vertical
    cell-to-ambient conductances, both in W/K."""

    ambient_temp: float = DEFAULT_AMBIENT_C
    lateral_conductance: float = DEFAULT_LATERAL_CONDUCTANCE
    vertical_conductance: float = DEFAULT_VERTICAL_CONDUCTANCE

    def __post_init__(self):
        if not math.isfinite(self.ambient_temp):
            raise ConfigError("ambient_temp must be finite", "thermal.ambient_temp")
        if not (math.isfinite(self.lateral_conductance) and self.lateral_conductance > 0):
            raise ConfigError("lateral_conductance must be > 0", "thermal.lateral_conductance")
        if not (math.isfinite(self.vertical_conductance) and self.vertical_conductance > 0):
            raise ConfigError("vertical_conductance must be > 0", "thermal.vertical_conductance")


@dataclass(frozen=True)
class BenchmarkConfig:
    name: str
    canvas_width: float
    canvas_height: float
    grid_n: int
    chiplets: tuple[Chiplet, ...]
    nets: tuple[Net, ...]
    tdp_threshold: float = DEFAULT_TDP_THRESHOLD
    thermal: ThermalParams = field(default_factory=ThermalParams)
    spacing: int = DEFAULT_SPACING

    def __post_init__(self):
        if self.grid_n < 2:
            raise ConfigError("grid_n must be >= 2", "grid_n")
        if not (self.canvas_width > 0 and self.canvas_height > 0):
            raise ConfigError("canvas dimensions must be positive", "canvas")
        if self.spacing < 0:
            raise ConfigError("spacing must be >= 0", "spacing")
        ids = [c.id for c in self.chiplets]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise ConfigError(f"duplicate chiplet id {dup!r}", "chiplets")
        net_ids = [n.id for n in self.nets]
        if len(set(net_ids)) != len(net_ids):
            dup = next(i for i in net_ids if net_ids.count(i) > 1)
            raise ConfigError(f"duplicate net id {dup!r}", "nets")
        known = set(ids)
        for net in self.nets:
            for ep in net.endpoints:
                if ep not in known:
                    raise ConfigError(f"unknown endpoint {ep!r}", f"net[{net.id}].endpoints")
        for c in self.chiplets:
            self._check_fits(c, Orientation.R0)
            if c.rotatable:
                self._check_fits(c, Orientation.R90)

    def _check_fits(self, chiplet: Chiplet, orientation: Orientation):
        w, h = chiplet.dims(orientation)
        if math.ceil(w / self.cell_width) > self.grid_n or math.ceil(h / self.cell_height) > self.grid_n:
            raise ConfigError(
                f"chiplet larger than canvas in orientation {orientation.value}",
                f"chiplet[{chiplet.id}]",
            )

    @property
    def cell_width(self) -> float:
        return self.canvas_width / self.grid_n

    @property
    def cell_height(self) -> float:
        return self.canvas_height / self.grid_n

    @property
    def chiplet_count(self) -> int:
        return len(self.chiplets)

    def chiplet(self, chiplet_id: str) -> Chiplet:
        for c in self.chiplets:
            if c.id == chiplet_id:
                return c
        raise KeyError(chiplet_id)

    def nets_of(self, chiplet_id: str) -> tuple[Net, ...]:
        return tuple(n for n in self.nets if chiplet_id in n.endpoints)

    @property
    def max_net_degree(self) -> int:
        return max((len(n.endpoints) for n in self.nets), default=0)

    @property
    def max_net_weight(self) -> float:
        return max((n.weight for n in self.nets), default=0.0)


def placement_order(config: BenchmarkConfig) -> list[str]:
    """Chiplet ids in placement sequence: TDP descending, ties broken by
    area descending, then id.  Deterministic so the step index alone
    identifies which chiplet is being placed."""
    return [c.id for c in sorted(config.chiplets, key=lambda c: (-c.tdp, -c.area, c.id))]


def default_canvas_side(chiplets) -> float:
    total = sum(c.area for c in chiplets)
    return DEFAULT_CANVAS_FACTOR * math.sqrt(total)


def _expand_chiplets(entries) -> list[Chiplet]:
    out = []
    for i, entry in enumerate(entries):
        path = f"chiplets[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError("expected a mapping", path)
        try:
            name = str(entry["name"])
            width = float(entry["width"])
            height = float(entry["height"])
            tdp = float(entry["tdp"])
        except KeyError as e:
            raise ConfigError(f"missing field {e.args[0]!r}", path) from None
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e), path) from None
        count = int(entry.get("count", 1))
        if count < 1:
            raise ConfigError("count must be >= 1", f"{path}.count")
        rotatable = bool(entry.get("rotatable", True))
        names = [name] if count == 1 else [f"{name}_{k}" for k in range(count)]
        for inst in names:
            out.append(Chiplet(id=inst, width=width, height=height, tdp=tdp, rotatable=rotatable))
    return out


def _parse_nets(entries) -> list[Net]:
    out = []
    for i, entry in enumerate(entries or []):
        path = f"nets[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError("expected a mapping", path)
        net_id = str(entry.get("id", f"net{i}"))
        eps = entry.get("endpoints")
        if not isinstance(eps, list):
            raise ConfigError("endpoints must be a list", f"{path}.endpoints")
        names = []
        for ep in eps:
            # schema reserves a per-endpoint pin-offset form {id:, pin_offset: [dx,dy]};
            # the offset is accepted but not used by the center-to-center cost model
            if isinstance(ep, dict):
                if "id" not in ep:
                    raise ConfigError("endpoint mapping needs an 'id'", f"{path}.endpoints")
                names.append(str(ep["id"]))
            else:
                names.append(str(ep))
        weight = float(entry.get("weight", 1.0))
        out.append(Net(id=net_id, endpoints=tuple(names), weight=weight))
    return out


def benchmark_from_dict(data: dict, name: str = "") -> BenchmarkConfig:
    if not isinstance(data, dict):
        raise ConfigError("document root must be a mapping")
    version = data.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported format_version {version}", "format_version")
    chiplets = _expand_chiplets(data.get("chiplets") or [])
    if not chiplets:
        raise ConfigError("at least one chiplet required", "chiplets")
    nets = _parse_nets(data.get("nets"))

    side = default_canvas_side(chiplets)
    canvas_width = float(data.get("canvas_width", side))
    canvas_height = float(data.get("canvas_height", side))
    grid_n = int(data.get("grid_n", DEFAULT_GRID_N))

    thermal_data = data.get("thermal") or {}
    thermal = ThermalParams(
        ambient_temp=float(thermal_data.get("ambient_temp", DEFAULT_AMBIENT_C)),
        lateral_conductance=float(thermal_data.get("lateral_conductance", DEFAULT_LATERAL_CONDUCTANCE)),
        vertical_conductance=float(thermal_data.get("vertical_conductance", DEFAULT_VERTICAL_CONDUCTANCE)),
    )

    return BenchmarkConfig(
        name=str(data.get("name", name or "benchmark")),
        canvas_width=canvas_width,
        canvas_height=canvas_height,
        grid_n=grid_n,
        chiplets=tuple(chiplets),
        nets=tuple(nets),
        tdp_threshold=float(data.get("tdp_threshold", DEFAULT_TDP_THRESHOLD)),
        thermal=thermal,
        spacing=int(data.get("spacing", DEFAULT_SPACING)),
    )


def benchmark_to_dict(config: BenchmarkConfig) -> dict:
    """Emit a fully-resolved document; loading it reproduces the config."""
    return {
        "format_version": FORMAT_VERSION,
        "name": config.name,
        "canvas_width": config.canvas_width,
        "canvas_height": config.canvas_height,
        "grid_n": config.grid_n,
        "tdp_threshold": config.tdp_threshold,
        "spacing": config.spacing,
        "thermal": {
            "ambient_temp": config.thermal.ambient_temp,
            "lateral_conductance": config.thermal.lateral_conductance,
            "vertical_conductance": config.thermal.vertical_conductance,
        },
        "chiplets": [
            {
                "name": c.id,
                "width": c.width,
                "height": c.height,
                "tdp": c.tdp,
                "rotatable": c.rotatable,
            }
            for c in config.chiplets
        ],
        "nets": [
            {"id": n.id, "endpoints": list(n.endpoints), "weight": n.weight}
            for n in config.nets
        ],
    }


def load_benchmark(path) -> BenchmarkConfig:
    """Load and validate a benchmark YAML file.

    Preset names ("multi-gpu", "cpu-dram") are accepted in place of paths.
    """
    p = resolve_benchmark_path(path)
    try:
        data = yaml.safe_load(p.read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML: {e}") from e
    return benchmark_from_dict(data, name=p.stem.replace("_", "-"))


def save_benchmark(config: BenchmarkConfig, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(yaml.safe_dump(benchmark_to_dict(config), sort_keys=False))
    return p


def list_presets() -> list[str]:
    return sorted(f.stem.replace("_", "-") for f in _PRESET_DIR.glob("*.yaml"))


def preset_path(name: str) -> Path:
    p = _PRESET_DIR / f"{name.replace('-', '_')}.yaml"
    if not p.exists():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return p


def resolve_benchmark_path(path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    if p.suffix == "" and (_PRESET_DIR / f"{p.name.replace('-', '_')}.yaml").exists():
        return preset_path(p.name)
    raise ConfigError(f"benchmark file not found: {path}")
