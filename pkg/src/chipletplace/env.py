"""Sequential placement MDP.

One chiplet is placed per step, in TDP-descending order.  A threshold
router sends each chiplet to the thermal agent (high TDP) or the
wirelength agent (low TDP); because the order is TDP-descending, thermal
steps form a prefix of every episode and wire steps the suffix.

Actions index the doubled grid: the first grid_n^2 indices place the
chiplet unrotated at that cell, the second grid_n^2 place it rotated by
90 degrees.  Rewards are the negated per-step metric deltas, affinely
squashed into [0, 1]; the raw deltas are kept on every step record so
episode telescoping identities stay checkable.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import grid, thermal, wirelength
from .grid import MaskedActionError, PlacementState
from .model import BenchmarkConfig, Chiplet, Orientation, placement_order

DEFAULT_TEMP_SCALE_C = 25.0
DEFAULT_COMBINED_WEIGHTS = (0.7, 0.3)  # (wire, thermal)

SHARED_CHANNELS = ("view", "position", "rotation_position")
AGENT_CHANNELS = {
    "thermal": SHARED_CHANNELS + ("thermal",),
    "wire": SHARED_CHANNELS + ("wire_r0", "wire_r90"),
    "combined": SHARED_CHANNELS + ("thermal", "wire_r0", "wire_r90"),
}


class AgentKind(str, Enum):
    THERMAL = "thermal"
    WIRE = "wire"


def route(chiplet: Chiplet, threshold: float) -> AgentKind:
    """Threshold router; TDP exactly at the threshold goes to the thermal
    agent (conservative for heat)."""
    return AgentKind.THERMAL if chiplet.tdp >= threshold else AgentKind.WIRE


def default_wire_scale(config: BenchmarkConfig) -> float:
    """Reward scale for one step's HPWL growth: canvas half-perimeter times
    the worst net degree and weight."""
    half_perimeter = config.canvas_width + config.canvas_height
    scale = half_perimeter * config.max_net_degree * config.max_net_weight
    return scale if scale > 0 else half_perimeter


@dataclass(frozen=True)
class Observation:
    mask_stack: np.ndarray  # (channels, grid_n, grid_n) float32, all in [-1, 1]
    action_mask: np.ndarray  # (2 * grid_n^2,) bool
    step_index: int
    active_agent: AgentKind
    chiplet_id: str


@dataclass(frozen=True)
class StepResult:
    reward: float
    raw_wl_delta: float
    raw_temp_delta: float
    wire_reward: float  # normalized, regardless of routing
    thermal_reward: float
    wl_after: float
    temp_after: float
    done: bool
    obs: Observation | None


@dataclass(frozen=True)
class StepRecord:
    step_index: int
    chiplet_id: str
    agent: str
    action: int
    row: int
    col: int
    orientation: str
    reward: float
    wl_after: float
    temp_after: float
    wl_delta: float
    temp_delta: float
    wire_reward: float
    thermal_reward: float


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


class PlacementEnv:
    """Placement episode driver.

    ``observation_mode`` selects the channel stack: "routed" gives each
    step the active agent's channels, "combined" always stacks all five
    mask kinds (wire mask doubled for the rotated half of the action
    space) for the single-agent baseline.
    """

    def __init__(self, config: BenchmarkConfig, observation_mode: str = "routed",
                 wire_scale: float | None = None, temp_scale: float = DEFAULT_TEMP_SCALE_C,
                 combined_weights: tuple[float, float] = DEFAULT_COMBINED_WEIGHTS):
        if observation_mode not in ("routed", "combined"):
            raise ValueError(f"unknown observation mode {observation_mode!r}")
        self.config = config
        self.observation_mode = observation_mode
        self.wire_scale = wire_scale if wire_scale is not None else default_wire_scale(config)
        self.temp_scale = temp_scale
        self.combined_weights = combined_weights
        self.order = placement_order(config)
        self.solver = thermal.SteadyStateSolver(config.thermal, config.grid_n)
        self._state: PlacementState | None = None
        self._wl = 0.0
        self._temp = config.thermal.ambient_temp
        self._field: thermal.ThermalField | None = None
        self._pending: tuple[Chiplet, np.ndarray, np.ndarray] | None = None
        self._trace: list[StepRecord] = []

    @property
    def n_steps(self) -> int:
        return len(self.order)

    @property
    def state(self) -> PlacementState:
        if self._state is None:
            raise RuntimeError("reset() has not been called")
        return self._state

    @property
    def trace(self) -> tuple[StepRecord, ...]:
        return tuple(self._trace)

    @property
    def done(self) -> bool:
        return self._state is not None and self._state.cursor >= self.n_steps

    def channel_names(self, agent: AgentKind) -> tuple[str, ...]:
        if self.observation_mode == "combined":
            return AGENT_CHANNELS["combined"]
        return AGENT_CHANNELS[agent.value]

    def agent_at(self, step_index: int) -> AgentKind:
        return route(self.config.chiplet(self.order[step_index]), self.config.tdp_threshold)

    def reset(self, seed: int | None = None) -> Observation:
        """Start a fresh episode.  The environment itself is deterministic;
        ``seed`` is recorded for provenance only."""
        del seed
        self._state = grid.empty_state(self.config)
        self._wl = 0.0
        self._temp = self.config.thermal.ambient_temp
        self._field = None
        self.solver.reset()
        self._trace = []
        return self._observe()

    def decode_action(self, action: int) -> tuple[int, int, Orientation]:
        n = self.config.grid_n
        if not 0 <= action < 2 * n * n:
            raise MaskedActionError(f"action index {action} out of range")
        orientation = Orientation.R0 if action < n * n else Orientation.R90
        cell = action % (n * n)
        return cell // n, cell % n, orientation

    def encode_action(self, row: int, col: int, orientation: Orientation) -> int:
        n = self.config.grid_n
        base = 0 if orientation is Orientation.R0 else n * n
        return base + row * n + col

    def step(self, action: int) -> StepResult:
        if self._state is None:
            raise RuntimeError("reset() has not been called")
        if self.done:
            raise RuntimeError("episode is complete")
        chiplet, feas_r0, feas_r90 = self._pending
        row, col, orientation = self.decode_action(action)
        feas = feas_r0 if orientation is Orientation.R0 else feas_r90
        if not feas[row, col]:
            raise MaskedActionError(
                f"masked action violation: {chiplet.id} at ({row}, {col}) {orientation.value}")
        agent = route(chiplet, self.config.tdp_threshold)
        k = self._state.cursor

        self._state = grid.apply_placement(self._state, chiplet, row, col, orientation, self.config)
        wl_after = wirelength.hpwl(self._state, self.config).total_hpwl
        self._field = self.solver.solve(thermal.power_map(self._state, self.config))
        temp_after = self._field.hotspot

        wl_delta = wl_after - self._wl
        temp_delta = temp_after - self._temp
        self._wl, self._temp = wl_after, temp_after

        wire_reward = _clamp01(1.0 - wl_delta / self.wire_scale)
        thermal_reward = _clamp01(1.0 - temp_delta / self.temp_scale)
        if self.observation_mode == "combined":
            w_wire, w_thermal = self.combined_weights
            reward = w_wire * wire_reward + w_thermal * thermal_reward
        else:
            reward = thermal_reward if agent is AgentKind.THERMAL else wire_reward

        self._trace.append(StepRecord(
            step_index=k, chiplet_id=chiplet.id, agent=agent.value, action=action,
            row=row, col=col, orientation=orientation.value, reward=reward,
            wl_after=wl_after, temp_after=temp_after, wl_delta=wl_delta,
            temp_delta=temp_delta, wire_reward=wire_reward, thermal_reward=thermal_reward))

        done = self._state.cursor >= self.n_steps
        obs = None if done else self._observe()
        return StepResult(reward=reward, raw_wl_delta=wl_delta, raw_temp_delta=temp_delta,
                          wire_reward=wire_reward, thermal_reward=thermal_reward,
                          wl_after=wl_after, temp_after=temp_after, done=done, obs=obs)

    def _observe(self) -> Observation:
        state = self._state
        k = state.cursor
        chiplet = self.config.chiplet(self.order[k])
        agent = route(chiplet, self.config.tdp_threshold)

        feas_r0 = grid.feasible_origins(state, chiplet, Orientation.R0, self.config)
        if chiplet.rotatable:
            feas_r90 = grid.feasible_origins(state, chiplet, Orientation.R90, self.config)
        else:
            feas_r90 = np.zeros_like(feas_r0)
        self._pending = (chiplet, feas_r0, feas_r90)

        channels = [grid.view_mask(state),
                    np.where(feas_r0, 1.0, -1.0),
                    np.where(feas_r90, 1.0, -1.0)]
        names = self.channel_names(agent)
        if "thermal" in names:
            if self._field is None:
                channels.append(np.full((self.config.grid_n, self.config.grid_n), -1.0))
            else:
                channels.append(thermal.normalize_field(self._field.temps))
        if "wire_r0" in names:
            channels.append(wirelength.wire_mask(state, chiplet, Orientation.R0,
                                                 self.config, feasible=feas_r0))
            channels.append(wirelength.wire_mask(state, chiplet, Orientation.R90,
                                                 self.config, feasible=feas_r90))

        stack = np.stack(channels).astype(np.float32)
        action_mask = np.concatenate([feas_r0.ravel(), feas_r90.ravel()])
        return Observation(mask_stack=stack, action_mask=action_mask, step_index=k,
                           active_agent=agent, chiplet_id=chiplet.id)


def episode_metrics(state: PlacementState, config: BenchmarkConfig,
                    solver: thermal.SteadyStateSolver | None = None) -> tuple[float, float]:
    """(total HPWL mm, hotspot degC) of a completed layout."""
    if state.cursor < len(config.chiplets):
        raise ValueError("episode incomplete: not all chiplets placed")
    wl = wirelength.hpwl(state, config).total_hpwl
    return wl, thermal.hotspot(state, config, solver)
