"""Comparison methods: simulated annealing, random search and the
single-agent weighted-sum RL baseline.

All baselines emit layouts under the exact same legality rules as the
placement environment (non-overlap on the cell grid plus the configured
clearance), so every point they contribute to a Pareto cloud is buildable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import grid, thermal, wirelength
from .agents import TrainConfig, Trainer, TrainResult
from .model import BenchmarkConfig, Orientation, placement_order

Layout = dict[str, tuple[int, int, Orientation]]


class LayoutConstructionError(RuntimeError):
    """Could not build an initial legal layout within the retry budget."""


@dataclass
class SAConfig:
    initial_temp: float | None = None  # None: calibrated for ~80% initial acceptance
    cooling: float = 0.95
    moves_per_temp: int = 200
    min_temp: float | None = None  # None: initial_temp * 1e-3
    w_wl: float = 0.5
    w_temp: float = 0.5
    wl_norm: float | None = None  # None: canvas half-perimeter * net count
    temp_norm: float = 50.0  # degC of hotspot rise
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.cooling < 1.0:
            raise ValueError("cooling must be in (0, 1)")
        if self.w_wl < 0 or self.w_temp < 0 or (self.w_wl == 0 and self.w_temp == 0):
            raise ValueError("cost weights must be >= 0 and not both zero")


@dataclass(frozen=True)
class SATraceRow:
    iteration: int
    temperature: float
    move: str
    accepted: bool
    cost: float
    wl: float
    temp: float
    best_cost: float


@dataclass
class SAResult:
    best_layout: Layout
    best_wl: float
    best_temp: float
    best_cost: float
    trace: list[SATraceRow] = field(default_factory=list)


@dataclass
class RandomSearchResult:
    points: list[tuple[float, float]]  # (wl, temp) per sampled layout
    layouts: list[Layout]
    best_wl_index: int
    best_temp_index: int


def hpwl_of_layout(config: BenchmarkConfig, layout: Layout) -> float:
    """HPWL straight from a complete layout dict (no PlacementState needed)."""
    centers = {}
    for cid, (row, col, orientation) in layout.items():
        w, h = config.chiplet(cid).dims(orientation)
        centers[cid] = (col * config.cell_width + w / 2.0, row * config.cell_height + h / 2.0)
    total = 0.0
    for net in config.nets:
        pts = [centers[ep] for ep in set(net.endpoints) if ep in centers]
        if len(pts) >= 2:
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            total += net.weight * ((max(xs) - min(xs)) + (max(ys) - min(ys)))
    return total


def layout_metrics(config: BenchmarkConfig, layout: Layout,
                   solver: thermal.SteadyStateSolver | None = None) -> tuple[float, float]:
    state = grid.state_from_layout(config, layout)
    wl = wirelength.hpwl(state, config).total_hpwl
    return wl, thermal.hotspot(state, config, solver)


def random_layout(config: BenchmarkConfig, rng: np.random.Generator,
                  max_tries: int = 100) -> Layout:
    """Chiplets placed in placement order, each at a uniformly random
    feasible (cell, orientation)."""
    for _ in range(max_tries):
        state = grid.empty_state(config)
        layout: Layout = {}
        ok = True
        for cid in placement_order(config):
            chiplet = config.chiplet(cid)
            feas_r0 = grid.feasible_origins(state, chiplet, Orientation.R0, config)
            choices = [(r, c, Orientation.R0) for r, c in zip(*np.nonzero(feas_r0))]
            if chiplet.rotatable:
                feas_r90 = grid.feasible_origins(state, chiplet, Orientation.R90, config)
                choices += [(r, c, Orientation.R90) for r, c in zip(*np.nonzero(feas_r90))]
            if not choices:
                ok = False
                break
            row, col, orientation = choices[rng.integers(len(choices))]
            row, col = int(row), int(col)
            state = grid.apply_placement(state, chiplet, row, col, orientation, config)
            layout[cid] = (row, col, orientation)
        if ok:
            return layout
    raise LayoutConstructionError(f"no legal layout found in {max_tries} attempts")


def random_search(config: BenchmarkConfig, budget: int, seed: int = 0) -> RandomSearchResult:
    """``budget`` independent random legal layouts; stands in for the
    black-box-optimization comparison, which has no published setup."""
    rng = np.random.default_rng(seed)
    solver = thermal.SteadyStateSolver(config.thermal, config.grid_n)
    points, layouts = [], []
    for _ in range(budget):
        layout = random_layout(config, rng)
        wl, temp = layout_metrics(config, layout, solver)
        points.append((wl, temp))
        layouts.append(layout)
    best_wl = min(range(len(points)), key=lambda i: points[i][0])
    best_temp = min(range(len(points)), key=lambda i: points[i][1])
    return RandomSearchResult(points=points, layouts=layouts,
                              best_wl_index=best_wl, best_temp_index=best_temp)


def metropolis_accept(delta: float, temperature: float, rng: np.random.Generator) -> bool:
    """Accept worse moves with probability exp(-delta/T); equal or better
    cost always accepted."""
    if delta <= 0.0:
        return True
    if temperature <= 0.0:
        return False
    return rng.random() < math.exp(-delta / temperature)


class _SAState:
    """Mutable layout + occupancy for cheap move trials."""

    def __init__(self, config: BenchmarkConfig, layout: Layout):
        self.config = config
        self.layout = dict(layout)
        self.occ = np.zeros((config.grid_n, config.grid_n), dtype=bool)
        for cid, pos in self.layout.items():
            self._paint(cid, pos, True)

    def _span(self, cid: str, orientation: Orientation) -> tuple[int, int]:
        return grid.cells_of(self.config.chiplet(cid), orientation, self.config)

    def _paint(self, cid: str, pos, value: bool):
        row, col, orientation = pos
        sr, sc = self._span(cid, orientation)
        self.occ[row: row + sr, col: col + sc] = value

    def fits(self, cid: str, row: int, col: int, orientation: Orientation) -> bool:
        n = self.config.grid_n
        try:
            sr, sc = self._span(cid, orientation)
        except ValueError:
            return False
        if row < 0 or col < 0 or row + sr > n or col + sc > n:
            return False
        region = self.occ[row: row + sr, col: col + sc]
        if self.config.spacing > 0:
            s = self.config.spacing
            region = self.occ[max(0, row - s): row + sr + s, max(0, col - s): col + sc + s]
        return not region.any()

    def move_and_check(self, cid: str, row: int, col: int, orientation: Orientation) -> bool:
        """Try to move one chiplet; returns False (state unchanged) if the
        target is illegal."""
        old = self.layout[cid]
        self._paint(cid, old, False)
        if self.fits(cid, row, col, orientation):
            self.layout[cid] = (row, col, orientation)
            self._paint(cid, (row, col, orientation), True)
            return True
        self._paint(cid, old, True)
        return False

    def swap_and_check(self, cid_a: str, cid_b: str) -> bool:
        old_a, old_b = self.layout[cid_a], self.layout[cid_b]
        self._paint(cid_a, old_a, False)
        self._paint(cid_b, old_b, False)
        pos_a = (old_b[0], old_b[1], old_a[2])
        pos_b = (old_a[0], old_a[1], old_b[2])
        if self.fits(cid_a, *pos_a):
            self._paint(cid_a, pos_a, True)
            if self.fits(cid_b, *pos_b):
                self._paint(cid_b, pos_b, True)
                self.layout[cid_a] = pos_a
                self.layout[cid_b] = pos_b
                return True
            self._paint(cid_a, pos_a, False)
        self._paint(cid_a, old_a, True)
        self._paint(cid_b, old_b, True)
        return False


def sa_search(config: BenchmarkConfig, sa: SAConfig) -> SAResult:
    """Metropolis-accept local search over complete legal layouts.

    Moves: translate one chiplet to a random cell, swap two chiplets'
    origins, rotate one chiplet in place.  Cost is the weighted sum of
    normalized HPWL and normalized hotspot rise; the hotspot solve is
    skipped entirely while w_temp == 0.
    """
    rng = np.random.default_rng(sa.seed)
    solver = thermal.SteadyStateSolver(config.thermal, config.grid_n)
    wl_norm = sa.wl_norm if sa.wl_norm is not None else (
        (config.canvas_width + config.canvas_height) * max(len(config.nets), 1))
    ambient = config.thermal.ambient_temp
    ids = [c.id for c in config.chiplets]
    rotatable = [c.id for c in config.chiplets if c.rotatable]

    def cost_of(layout: Layout) -> tuple[float, float, float]:
        wl = hpwl_of_layout(config, layout)
        if sa.w_temp == 0.0:
            temp = float("nan")
            cost = sa.w_wl * wl / wl_norm
        else:
            state = grid.state_from_layout(config, layout)
            temp = thermal.hotspot(state, config, solver)
            cost = sa.w_wl * wl / wl_norm + sa.w_temp * (temp - ambient) / sa.temp_norm
        return cost, wl, temp

    work = _SAState(config, random_layout(config, rng))
    cost, wl, temp = cost_of(work.layout)
    best = SAResult(best_layout=dict(work.layout), best_wl=wl, best_temp=temp, best_cost=cost)

    def propose() -> tuple[str, bool]:
        """Mutate ``work`` in place; returns (move name, changed)."""
        n = config.grid_n
        kinds = ["translate", "swap"] + (["rotate"] if rotatable else [])
        kind = kinds[rng.integers(len(kinds))]
        if kind == "translate":
            cid = ids[rng.integers(len(ids))]
            row, col = int(rng.integers(n)), int(rng.integers(n))
            return kind, work.move_and_check(cid, row, col, work.layout[cid][2])
        if kind == "swap":
            if len(ids) < 2:
                return kind, False
            i, j = rng.choice(len(ids), size=2, replace=False)
            return kind, work.swap_and_check(ids[int(i)], ids[int(j)])
        cid = rotatable[rng.integers(len(rotatable))]
        row, col, orientation = work.layout[cid]
        flipped = Orientation.R90 if orientation is Orientation.R0 else Orientation.R0
        return kind, work.move_and_check(cid, row, col, flipped)

    # probe moves set the starting temperature for ~80% initial acceptance;
    # each probe is undone, so the search still starts from the initial layout
    if sa.initial_temp is None:
        deltas = []
        for _ in range(100):
            snapshot = dict(work.layout)
            _, changed = propose()
            if changed:
                new_cost, _, _ = cost_of(work.layout)
                deltas.append(abs(new_cost - cost))
                work = _SAState(config, snapshot)
        positive = [d for d in deltas if d > 0]
        mean_delta = float(np.mean(positive)) if positive else 1.0
        t0 = mean_delta / math.log(1.0 / 0.8)
    else:
        t0 = sa.initial_temp
    t_min = sa.min_temp if sa.min_temp is not None else t0 * 1e-3

    trace: list[SATraceRow] = []
    iteration = 0
    temperature = t0
    while temperature > t_min:
        for _ in range(sa.moves_per_temp):
            iteration += 1
            snapshot = dict(work.layout)
            kind, changed = propose()
            if not changed:
                trace.append(SATraceRow(iteration, temperature, kind, False, cost, wl, temp,
                                        best.best_cost))
                continue
            new_cost, new_wl, new_temp = cost_of(work.layout)
            if metropolis_accept(new_cost - cost, temperature, rng):
                cost, wl, temp = new_cost, new_wl, new_temp
                if cost < best.best_cost:
                    best.best_cost = cost
                    best.best_wl = wl
                    best.best_temp = temp
                    best.best_layout = dict(work.layout)
                accepted = True
            else:
                work = _SAState(config, snapshot)
                accepted = False
            trace.append(SATraceRow(iteration, temperature, kind, accepted, cost, wl, temp,
                                    best.best_cost))
        temperature *= sa.cooling
    if sa.w_temp == 0.0:
        # report the temperature of the winning layout even when it was not
        # part of the search objective
        _, best.best_temp = layout_metrics(config, best.best_layout, solver)
    best.trace = trace
    return best


def single_agent_rl(config: BenchmarkConfig, tc: TrainConfig, out_dir=None,
                    weights: tuple[float, float] = (0.7, 0.3)) -> TrainResult:
    """One agent sees every mask channel; reward is the weighted sum of the
    normalized wirelength and thermal rewards, both computed every step."""
    return Trainer(config, tc, mode="combined", combined_weights=weights,
                   out_dir=out_dir).train()
