"""HPWL accounting and the per-cell wirelength-delta mask.

Wirelength of a net is its weighted half-perimeter over the geometric
centers of its placed endpoints, in mm.  Nets with fewer than two placed
endpoints contribute zero.  The wire mask scores, for every candidate
origin cell, the exact HPWL growth caused by placing the next chiplet
there, then min-max normalizes the deltas to [-1, 1] over feasible cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import PlacementState, cells_of, feasible_origins
from .model import BenchmarkConfig, Chiplet, Orientation


@dataclass(frozen=True)
class WirelengthReport:
    total_hpwl: float
    per_net: dict[str, float]


def placed_center(placed, config: BenchmarkConfig) -> tuple[float, float]:
    """Geometric center (x, y) in mm of a placed chiplet.  The die sits
    flush with the top-left corner of its (ceiling-quantized) footprint."""
    chiplet = config.chiplet(placed.chiplet_id)
    w, h = chiplet.dims(placed.orientation)
    x = placed.footprint.col * config.cell_width + w / 2.0
    y = placed.footprint.row * config.cell_height + h / 2.0
    return x, y


def net_bounding_boxes(state: PlacementState, config: BenchmarkConfig):
    """Per net: (min_x, max_x, min_y, max_y, placed endpoint count)."""
    centers = {p.chiplet_id: placed_center(p, config) for p in state.placed}
    boxes = {}
    for net in config.nets:
        xs, ys = [], []
        for ep in set(net.endpoints):
            if ep in centers:
                x, y = centers[ep]
                xs.append(x)
                ys.append(y)
        if xs:
            boxes[net.id] = (min(xs), max(xs), min(ys), max(ys), len(xs))
    return boxes


def hpwl(state: PlacementState, config: BenchmarkConfig) -> WirelengthReport:
    boxes = net_bounding_boxes(state, config)
    per_net = {}
    for net in config.nets:
        box = boxes.get(net.id)
        if box is not None and box[4] >= 2:
            min_x, max_x, min_y, max_y, _ = box
            per_net[net.id] = net.weight * ((max_x - min_x) + (max_y - min_y))
        else:
            per_net[net.id] = 0.0
    return WirelengthReport(total_hpwl=float(sum(per_net.values())), per_net=per_net)


def wire_mask_raw(state: PlacementState, chiplet: Chiplet, orientation: Orientation,
                  config: BenchmarkConfig) -> np.ndarray:
    """Exact HPWL delta of placing ``chiplet`` at each origin cell.

    Only nets touching the chiplet can change, and each such net's
    half-perimeter grows by the per-axis distance from the candidate
    center to the net's current bounding box, so the whole grid separates
    into a row profile plus a column profile.  Origins whose footprint
    exceeds the canvas carry NaN.
    """
    n = config.grid_n
    span_rows, span_cols = cells_of(chiplet, orientation, config)
    w, h = chiplet.dims(orientation)
    boxes = net_bounding_boxes(state, config)

    cols = np.arange(n - span_cols + 1)
    rows = np.arange(n - span_rows + 1)
    cx = cols * config.cell_width + w / 2.0
    cy = rows * config.cell_height + h / 2.0

    col_cost = np.zeros_like(cx)
    row_cost = np.zeros_like(cy)
    for net in config.nets:
        if chiplet.id not in net.endpoints or net.id not in boxes:
            continue
        min_x, max_x, min_y, max_y, _ = boxes[net.id]
        col_cost += net.weight * (np.maximum(min_x - cx, 0.0) + np.maximum(cx - max_x, 0.0))
        row_cost += net.weight * (np.maximum(min_y - cy, 0.0) + np.maximum(cy - max_y, 0.0))

    raw = np.full((n, n), np.nan)
    raw[: len(rows), : len(cols)] = row_cost[:, None] + col_cost[None, :]
    return raw


def normalize_deltas(raw: np.ndarray, feasible: np.ndarray) -> np.ndarray:
    """Min-max map of raw deltas to [-1, 1] over feasible cells; degenerate
    spread maps feasible cells to 0.  Infeasible cells get the worst value +1."""
    out = np.full(raw.shape, 1.0)
    if not feasible.any():
        return out
    vals = raw[feasible]
    lo, hi = vals.min(), vals.max()
    if hi - lo <= 0.0:
        out[feasible] = 0.0
        return out
    out[feasible] = np.clip(2.0 * (vals - lo) / (hi - lo) - 1.0, -1.0, 1.0)
    return out


def wire_mask(state: PlacementState, chiplet: Chiplet, orientation: Orientation,
              config: BenchmarkConfig, feasible: np.ndarray | None = None) -> np.ndarray:
    """Normalized wire mask for one candidate orientation.  ``feasible`` may
    be passed in when the caller already computed the position mask."""
    if feasible is None:
        if orientation is Orientation.R90 and not chiplet.rotatable:
            feasible = np.zeros((config.grid_n, config.grid_n), dtype=bool)
        else:
            feasible = feasible_origins(state, chiplet, orientation, config)
    if not feasible.any():
        # nothing to score (also covers non-rotatable R90, whose spans may
        # not even fit the grid)
        return np.full((config.grid_n, config.grid_n), 1.0)
    raw = wire_mask_raw(state, chiplet, orientation, config)
    return normalize_deltas(raw, feasible)
