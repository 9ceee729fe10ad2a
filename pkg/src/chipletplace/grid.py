"""Canvas discretization, occupancy and the shared placement masks.

The canvas is an N x N cell grid.  A placement state is immutable; placing
a chiplet returns a new state.  Masks are float grids over cells: binary
masks use exactly {-1.0, +1.0}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .model import BenchmarkConfig, Chiplet, Orientation

CellIndex = tuple[int, int]


class MaskedActionError(RuntimeError):
    """Placement at a cell the position mask forbids.  Mask-filtered action
    sampling makes this unreachable; raising it signals an agent bug."""


@dataclass(frozen=True)
class Footprint:
    row: int
    col: int
    span_rows: int
    span_cols: int

    def cells(self):
        return ((r, c)
                for r in range(self.row, self.row + self.span_rows)
                for c in range(self.col, self.col + self.span_cols))

    def intersects(self, other: "Footprint") -> bool:
        return not (self.row + self.span_rows <= other.row
                    or other.row + other.span_rows <= self.row
                    or self.col + self.span_cols <= other.col
                    or other.col + other.span_cols <= self.col)


@dataclass(frozen=True)
class PlacedChiplet:
    chiplet_id: str
    footprint: Footprint
    orientation: Orientation


@dataclass(frozen=True, eq=False)
class PlacementState:
    occupancy: np.ndarray  # grid_n x grid_n bool, read-only
    placed: tuple[PlacedChiplet, ...]
    cursor: int

    def __eq__(self, other):
        if not isinstance(other, PlacementState):
            return NotImplemented
        return (self.cursor == other.cursor and self.placed == other.placed
                and np.array_equal(self.occupancy, other.occupancy))


def empty_state(config: BenchmarkConfig) -> PlacementState:
    occ = np.zeros((config.grid_n, config.grid_n), dtype=bool)
    occ.flags.writeable = False
    return PlacementState(occupancy=occ, placed=(), cursor=0)


def cells_of(chiplet: Chiplet, orientation: Orientation, config: BenchmarkConfig) -> tuple[int, int]:
    """Footprint span in cells, ceiling-quantized so the footprint never
    under-covers the physical die."""
    w, h = chiplet.dims(orientation)
    span_cols = math.ceil(w / config.cell_width)
    span_rows = math.ceil(h / config.cell_height)
    if span_cols > config.grid_n or span_rows > config.grid_n:
        raise ValueError(f"chiplet larger than canvas: {chiplet.id} ({orientation.value})")
    return span_rows, span_cols


def _blocked(state: PlacementState, config: BenchmarkConfig) -> np.ndarray:
    """Cells a new footprint may not touch: occupied cells, dilated by the
    spacing clearance (Chebyshev)."""
    if config.spacing <= 0 or not state.occupancy.any():
        return state.occupancy
    size = 2 * config.spacing + 1
    return ndimage.binary_dilation(state.occupancy, structure=np.ones((size, size), dtype=bool))


def feasible_origins(state: PlacementState, chiplet: Chiplet, orientation: Orientation,
                     config: BenchmarkConfig) -> np.ndarray:
    """Boolean grid: True where the footprint with that top-left origin is
    fully in-bounds and collision-free."""
    n = config.grid_n
    span_rows, span_cols = cells_of(chiplet, orientation, config)
    blocked = _blocked(state, config).astype(np.int64)
    # windowed occupancy counts via an integral image
    s = np.zeros((n + 1, n + 1), dtype=np.int64)
    s[1:, 1:] = blocked.cumsum(axis=0).cumsum(axis=1)
    win = (s[span_rows:, span_cols:] - s[:-span_rows, span_cols:]
           - s[span_rows:, :-span_cols] + s[:-span_rows, :-span_cols])
    out = np.zeros((n, n), dtype=bool)
    out[: n - span_rows + 1, : n - span_cols + 1] = win == 0
    return out


def position_mask(state: PlacementState, chiplet: Chiplet, orientation: Orientation,
                  config: BenchmarkConfig) -> np.ndarray:
    """+1 at feasible origins, -1 elsewhere."""
    feas = feasible_origins(state, chiplet, orientation, config)
    return np.where(feas, 1.0, -1.0)


def rotation_position_mask(state: PlacementState, chiplet: Chiplet,
                           config: BenchmarkConfig) -> np.ndarray:
    """Position mask for the 90-degree-rotated footprint; all -1 when the
    chiplet may not rotate."""
    if not chiplet.rotatable:
        return np.full((config.grid_n, config.grid_n), -1.0)
    return position_mask(state, chiplet, Orientation.R90, config)


def view_mask(state: PlacementState) -> np.ndarray:
    """Occupied cells +1, free cells -1."""
    return np.where(state.occupancy, 1.0, -1.0)


def apply_placement(state: PlacementState, chiplet: Chiplet, row: int, col: int,
                    orientation: Orientation, config: BenchmarkConfig) -> PlacementState:
    """Place ``chiplet`` with its top-left footprint cell at (row, col).
    Returns a new state; the input state is not modified."""
    feas = feasible_origins(state, chiplet, orientation, config)
    if not (0 <= row < config.grid_n and 0 <= col < config.grid_n) or not feas[row, col]:
        raise MaskedActionError(
            f"masked action violation: {chiplet.id} at ({row}, {col}) {orientation.value}")
    span_rows, span_cols = cells_of(chiplet, orientation, config)
    occ = state.occupancy.copy()
    occ[row: row + span_rows, col: col + span_cols] = True
    occ.flags.writeable = False
    fp = Footprint(row=row, col=col, span_rows=span_rows, span_cols=span_cols)
    return PlacementState(
        occupancy=occ,
        placed=state.placed + (PlacedChiplet(chiplet.id, fp, orientation),),
        cursor=state.cursor + 1,
    )


def occupancy_of(placed, grid_n: int) -> np.ndarray:
    """Occupancy rebuilt from scratch from a list of PlacedChiplet."""
    occ = np.zeros((grid_n, grid_n), dtype=bool)
    for p in placed:
        fp = p.footprint
        occ[fp.row: fp.row + fp.span_rows, fp.col: fp.col + fp.span_cols] = True
    return occ


def state_from_layout(config: BenchmarkConfig,
                      placements: dict[str, tuple[int, int, Orientation]],
                      partial: bool = False) -> PlacementState:
    """Build a state from a {chiplet_id: (row, col, orientation)} assignment,
    validating legality along the way.  Unless ``partial``, every chiplet of
    the benchmark must be present."""
    from .model import placement_order

    unknown = set(placements) - {c.id for c in config.chiplets}
    if unknown:
        raise MaskedActionError(f"layout names unknown chiplets: {sorted(unknown)}")
    state = empty_state(config)
    for cid in placement_order(config):
        if cid not in placements:
            if partial:
                continue
            raise MaskedActionError(f"layout missing chiplet {cid!r}")
        row, col, orientation = placements[cid]
        state = apply_placement(state, config.chiplet(cid), row, col, orientation, config)
    return state


def layout_is_legal(config: BenchmarkConfig,
                    placements: dict[str, tuple[int, int, Orientation]]) -> bool:
    try:
        state_from_layout(config, placements)
    except MaskedActionError:
        return False
    return True
