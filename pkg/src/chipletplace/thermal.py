"""Steady-state interposer thermal model.

Each grid cell exchanges heat laterally with its 4-neighbors (conductance
g_lat per edge, adiabatic canvas border) and vertically with ambient
through the heat-sink path (g_vert per cell):

    sum_j g_lat * (T_i - T_j) + g_vert * (T_i - T_amb) = P_i

In terms of the rise u = T - T_amb this is (g_lat * L + g_vert * I) u = P
with L the grid Laplacian: a symmetric positive-definite 5-point system,
solved by conjugate gradient to a 1e-8 relative infinity-norm residual.
A solver instance may warm-start from its previous field, which only
matters for speed, never for the returned values beyond the residual
tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import PlacementState
from .model import BenchmarkConfig, ThermalParams

RESIDUAL_TOL = 1e-8


class ConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"thermal solve did not reach residual {RESIDUAL_TOL:g} "
            f"after {iterations} iterations (final residual {residual:.3e})")


@dataclass(frozen=True)
class ThermalField:
    temps: np.ndarray  # grid_n x grid_n, degC
    hotspot: float
    hotspot_cell: tuple[int, int]


def power_map(state: PlacementState, config: BenchmarkConfig) -> np.ndarray:
    """TDP of each placed chiplet spread uniformly over its footprint cells."""
    p = np.zeros((config.grid_n, config.grid_n))
    for placed in state.placed:
        chiplet = config.chiplet(placed.chiplet_id)
        fp = placed.footprint
        p[fp.row: fp.row + fp.span_rows, fp.col: fp.col + fp.span_cols] += (
            chiplet.tdp / (fp.span_rows * fp.span_cols))
    return p


class SteadyStateSolver:
    """CG solver for the 5-point conduction system on a fixed grid.

    One instance per worker: the warm-start cache is not thread-safe.
    """

    def __init__(self, params: ThermalParams, grid_n: int, warm_start: bool = True,
                 residual_tol: float = RESIDUAL_TOL, max_iterations: int | None = None):
        self.params = params
        self.grid_n = grid_n
        self.warm_start = warm_start
        self.residual_tol = residual_tol
        self.max_iterations = max_iterations if max_iterations is not None else 40 * grid_n * grid_n
        deg = np.full((grid_n, grid_n), 4.0)
        deg[0, :] -= 1.0
        deg[-1, :] -= 1.0
        deg[:, 0] -= 1.0
        deg[:, -1] -= 1.0
        self._diag = params.vertical_conductance + params.lateral_conductance * deg
        self._last_rise: np.ndarray | None = None

    def reset(self):
        self._last_rise = None

    def _apply(self, u: np.ndarray) -> np.ndarray:
        """Matrix-vector product (g_lat * L + g_vert * I) u on the 2-D grid."""
        nbr = np.zeros_like(u)
        nbr[1:, :] += u[:-1, :]
        nbr[:-1, :] += u[1:, :]
        nbr[:, 1:] += u[:, :-1]
        nbr[:, :-1] += u[:, 1:]
        return self._diag * u - self.params.lateral_conductance * nbr

    def solve(self, power: np.ndarray) -> ThermalField:
        if power.shape != (self.grid_n, self.grid_n):
            raise ValueError(f"power map shape {power.shape} != grid {self.grid_n}")
        power = np.asarray(power, dtype=np.float64)
        # residual criterion is stated on the absolute-temperature system
        # A T = P + g_vert*T_amb, whose residual equals P - A_rise u
        b_norm = np.abs(power + self.params.vertical_conductance * self.params.ambient_temp).max()
        tol = self.residual_tol * b_norm

        if self.warm_start and self._last_rise is not None:
            u = self._last_rise.copy()
        else:
            u = np.zeros_like(power)
        r = power - self._apply(u)
        if np.abs(r).max() <= tol:
            return self._finish(u)
        d = r.copy()
        rs = float(np.vdot(r, r))
        for it in range(self.max_iterations):
            ad = self._apply(d)
            alpha = rs / float(np.vdot(d, ad))
            u += alpha * d
            r -= alpha * ad
            if np.abs(r).max() <= tol:
                return self._finish(u)
            rs_new = float(np.vdot(r, r))
            d = r + (rs_new / rs) * d
            rs = rs_new
        raise ConvergenceError(float(np.abs(r).max() / b_norm), self.max_iterations)

    def _finish(self, rise: np.ndarray) -> ThermalField:
        self._last_rise = rise.copy() if self.warm_start else None
        temps = rise + self.params.ambient_temp
        idx = int(np.argmax(temps))
        cell = (idx // self.grid_n, idx % self.grid_n)
        return ThermalField(temps=temps, hotspot=float(temps[cell]), hotspot_cell=cell)


def solve_steady_state(power: np.ndarray, params: ThermalParams) -> ThermalField:
    """One-shot solve with a fresh (cold-started) solver."""
    return SteadyStateSolver(params, power.shape[0], warm_start=False).solve(power)


def hotspot(state: PlacementState, config: BenchmarkConfig,
            solver: SteadyStateSolver | None = None) -> float:
    """Peak temperature of the current placement; ambient for an empty state."""
    if not state.placed:
        return config.thermal.ambient_temp
    if solver is None:
        return solve_steady_state(power_map(state, config), config.thermal).hotspot
    return solver.solve(power_map(state, config)).hotspot


def thermal_mask(state: PlacementState, config: BenchmarkConfig,
                 solver: SteadyStateSolver | None = None,
                 field: ThermalField | None = None) -> np.ndarray:
    """Current thermal field min-max normalized to [-1, 1]; a uniform field
    (e.g. the empty state) maps to all -1."""
    if field is None:
        if not state.placed:
            return np.full((config.grid_n, config.grid_n), -1.0)
        if solver is None:
            field = solve_steady_state(power_map(state, config), config.thermal)
        else:
            field = solver.solve(power_map(state, config))
    return normalize_field(field.temps)


def normalize_field(temps: np.ndarray) -> np.ndarray:
    lo, hi = float(temps.min()), float(temps.max())
    if hi - lo <= 0.0:
        return np.full(temps.shape, -1.0)
    return np.clip(2.0 * (temps - lo) / (hi - lo) - 1.0, -1.0, 1.0)
