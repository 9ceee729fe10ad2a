import numpy as np
import pytest

from chipletplace.model import BenchmarkConfig, Chiplet, Net, Orientation, ThermalParams


def make_config(grid_n=4, canvas=None, chiplets=(), nets=(), spacing=0,
                tdp_threshold=80.0, thermal=None, name="test"):
    """Square canvas with 1 mm cells unless told otherwise."""
    side = float(canvas if canvas is not None else grid_n)
    return BenchmarkConfig(
        name=name, canvas_width=side, canvas_height=side, grid_n=grid_n,
        chiplets=tuple(chiplets), nets=tuple(nets), tdp_threshold=tdp_threshold,
        thermal=thermal or ThermalParams(), spacing=spacing)


def square(cid, size, tdp=10.0, rotatable=True):
    return Chiplet(id=cid, width=float(size), height=float(size), tdp=tdp, rotatable=rotatable)


def random_instance(rng, grid_n_max=8, max_chiplets=5, allow_spacing=True):
    """A small random benchmark plus a partially-filled state and the next
    chiplet to place: the raw material for mask-oracle checks."""
    from chipletplace import grid as g

    n = int(rng.integers(3, grid_n_max + 1))
    k = int(rng.integers(2, max_chiplets + 1))
    chiplets = []
    for i in range(k):
        w = float(rng.uniform(0.5, n / 2))
        h = float(rng.uniform(0.5, n / 2))
        chiplets.append(Chiplet(id=f"c{i}", width=w, height=h,
                                tdp=float(rng.uniform(0, 200)),
                                rotatable=bool(rng.integers(2))))
    nets = []
    if k >= 2 and rng.random() < 0.8:
        n_nets = int(rng.integers(1, 4))
        for j in range(n_nets):
            size = int(rng.integers(2, k + 1))
            members = rng.choice(k, size=size, replace=False)
            nets.append(Net(id=f"n{j}", endpoints=tuple(f"c{i}" for i in members),
                            weight=float(rng.uniform(0.5, 2.0))))
    spacing = int(rng.integers(0, 2)) if allow_spacing else 0
    config = make_config(grid_n=n, chiplets=chiplets, nets=nets, spacing=spacing)

    state = g.empty_state(config)
    order = list(rng.permutation(k))
    placed = 0
    for idx in order[:-1]:
        chiplet = chiplets[idx]
        orientation = Orientation.R90 if (chiplet.rotatable and rng.random() < 0.5) else Orientation.R0
        feas = g.feasible_origins(state, chiplet, orientation, config)
        cells = np.argwhere(feas)
        if len(cells) == 0:
            continue
        r, c = cells[rng.integers(len(cells))]
        state = g.apply_placement(state, chiplet, int(r), int(c), orientation, config)
        placed += 1
    next_chiplet = chiplets[order[-1]]
    return config, state, next_chiplet


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
