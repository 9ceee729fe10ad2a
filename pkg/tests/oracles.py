"""Independent brute-force oracles the fast implementations are checked
against.  Everything here trades speed for obviousness: nested loops and
dense linear algebra only."""

from __future__ import annotations

import numpy as np

from chipletplace.grid import PlacementState, cells_of
from chipletplace.model import BenchmarkConfig, Chiplet, Orientation, ThermalParams


def brute_feasible(state: PlacementState, chiplet: Chiplet, orientation: Orientation,
                   config: BenchmarkConfig) -> np.ndarray:
    """Per-origin legality by direct cell inspection."""
    n = config.grid_n
    try:
        sr, sc = cells_of(chiplet, orientation, config)
    except ValueError:
        return np.zeros((n, n), dtype=bool)
    occ = state.occupancy
    s = config.spacing
    out = np.zeros((n, n), dtype=bool)
    for r in range(n):
        for c in range(n):
            if r + sr > n or c + sc > n:
                continue
            ok = True
            for rr in range(max(0, r - s), min(n, r + sr + s)):
                for cc in range(max(0, c - s), min(n, c + sc + s)):
                    if occ[rr, cc]:
                        ok = False
                        break
                if not ok:
                    break
            out[r, c] = ok
    return out


def brute_hpwl(state: PlacementState, config: BenchmarkConfig) -> float:
    """Naive per-net min/max over placed endpoint centers."""
    centers = {}
    for p in state.placed:
        chiplet = config.chiplet(p.chiplet_id)
        w, h = chiplet.dims(p.orientation)
        centers[p.chiplet_id] = (p.footprint.col * config.cell_width + w / 2,
                                 p.footprint.row * config.cell_height + h / 2)
    total = 0.0
    for net in config.nets:
        pts = [centers[e] for e in set(net.endpoints) if e in centers]
        if len(pts) < 2:
            continue
        xs = sorted(p[0] for p in pts)
        ys = sorted(p[1] for p in pts)
        total += net.weight * ((xs[-1] - xs[0]) + (ys[-1] - ys[0]))
    return total


def dense_thermal_solve(power: np.ndarray, params: ThermalParams) -> np.ndarray:
    """Direct dense solve of the 5-point conduction system; returns the
    absolute temperature field."""
    n = power.shape[0]
    m = n * n
    a = np.zeros((m, m))
    for r in range(n):
        for c in range(n):
            i = r * n + c
            a[i, i] += params.vertical_conductance
            for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= rr < n and 0 <= cc < n:
                    j = rr * n + cc
                    a[i, i] += params.lateral_conductance
                    a[i, j] -= params.lateral_conductance
    u = np.linalg.solve(a, power.ravel())
    return u.reshape(n, n) + params.ambient_temp


def mc_hypervolume(points, ref, n_samples: int = 1_000_000, seed: int = 0) -> float:
    """Monte-Carlo estimate of the dominated area inside the reference box."""
    pts = np.array([(p.wl, p.temp) for p in points])
    ref_wl, ref_temp = ref
    lo_wl = pts[:, 0].min()
    lo_temp = pts[:, 1].min()
    rng = np.random.default_rng(seed)
    xs = rng.uniform(lo_wl, ref_wl, n_samples)
    ys = rng.uniform(lo_temp, ref_temp, n_samples)
    dominated = np.zeros(n_samples, dtype=bool)
    for wl, temp in pts:
        dominated |= (xs >= wl) & (ys >= temp)
    frac = dominated.mean()
    box = (ref_wl - lo_wl) * (ref_temp - lo_temp)
    return float(frac * box), float(box * np.sqrt(frac * (1 - frac) / n_samples))
