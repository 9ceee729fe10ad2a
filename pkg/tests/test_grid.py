import numpy as np
import pytest

from chipletplace import grid
from chipletplace.grid import (MaskedActionError, apply_placement, cells_of, empty_state,
                               feasible_origins, occupancy_of, position_mask,
                               rotation_position_mask, state_from_layout, view_mask)
from chipletplace.model import Chiplet, Orientation

from conftest import make_config, random_instance, square
from oracles import brute_feasible


class TestCellsOf:
    def test_ceiling_quantization(self):
        cfg = make_config(grid_n=8, canvas=12.0)  # 1.5 mm cells
        c = Chiplet(id="x", width=12.0, height=12.0, tdp=1.0)
        assert cells_of(c, Orientation.R0, cfg) == (8, 8)

    def test_fractional_rounds_up(self):
        cfg = make_config(grid_n=8, canvas=8.0)
        c = Chiplet(id="x", width=1.01, height=2.99, tdp=1.0)
        assert cells_of(c, Orientation.R0, cfg) == (3, 2)
        assert cells_of(c, Orientation.R90, cfg) == (2, 3)

    def test_square_spans_match_under_rotation(self):
        cfg = make_config(grid_n=8)
        c = square("x", 3)
        assert cells_of(c, Orientation.R0, cfg) == cells_of(c, Orientation.R90, cfg)

    def test_oversized_raises(self):
        cfg = make_config(grid_n=4, canvas=4.0)
        with pytest.raises(ValueError, match="larger than canvas"):
            cells_of(Chiplet(id="x", width=5.0, height=1.0, tdp=1.0), Orientation.R0, cfg)


class TestPositionMask:
    def test_worked_example_4x4(self):
        cfg = make_config(grid_n=4, chiplets=[square("a", 2, tdp=1), square("b", 2, tdp=1)])
        state = apply_placement(empty_state(cfg), cfg.chiplet("a"), 0, 0, Orientation.R0, cfg)
        mask = position_mask(state, cfg.chiplet("b"), Orientation.R0, cfg)
        feasible = {(r, c) for r, c in np.argwhere(mask > 0)}
        assert feasible == {(0, 2), (1, 2), (2, 0), (2, 1), (2, 2)}
        assert set(np.unique(mask)) <= {-1.0, 1.0}

    def test_empty_canvas_all_feasible_for_unit_chiplet(self):
        cfg = make_config(grid_n=5)
        mask = position_mask(empty_state(cfg), square("a", 1), Orientation.R0, cfg)
        assert (mask == 1.0).all()

    def test_full_canvas_all_infeasible(self):
        cfg = make_config(grid_n=4, chiplets=[square("a", 4, tdp=1)])
        state = apply_placement(empty_state(cfg), cfg.chiplet("a"), 0, 0, Orientation.R0, cfg)
        mask = position_mask(state, square("b", 1), Orientation.R0, cfg)
        assert (mask == -1.0).all()

    def test_matches_brute_force_on_random_instances(self, rng):
        for _ in range(300):
            cfg, state, nxt = random_instance(rng)
            for orientation in (Orientation.R0, Orientation.R90):
                fast = feasible_origins(state, nxt, orientation, cfg)
                assert np.array_equal(fast, brute_feasible(state, nxt, orientation, cfg))


class TestRotationPositionMask:
    def test_square_chiplet_same_as_position_mask(self, rng):
        cfg, state, _ = random_instance(rng, max_chiplets=3)
        sq = square("sq", 1.5)
        assert np.array_equal(rotation_position_mask(state, sq, cfg),
                              position_mask(state, sq, Orientation.R0, cfg))

    def test_non_rotatable_all_minus_one(self):
        cfg = make_config(grid_n=4)
        c = Chiplet(id="x", width=2, height=1, tdp=1, rotatable=False)
        assert (rotation_position_mask(empty_state(cfg), c, cfg) == -1.0).all()

    def test_two_by_one_on_2x2(self):
        cfg = make_config(grid_n=2)
        c = Chiplet(id="x", width=2, height=1, tdp=1)
        r0 = {(r, c_) for r, c_ in np.argwhere(
            position_mask(empty_state(cfg), c, Orientation.R0, cfg) > 0)}
        r90 = {(r, c_) for r, c_ in np.argwhere(
            rotation_position_mask(empty_state(cfg), c, cfg) > 0)}
        assert r0 == {(0, 0), (1, 0)}
        assert r90 == {(0, 0), (0, 1)}


class TestViewMask:
    def test_empty_all_minus_one(self):
        cfg = make_config(grid_n=4)
        assert (view_mask(empty_state(cfg)) == -1.0).all()

    def test_single_footprint(self):
        cfg = make_config(grid_n=4, chiplets=[square("a", 2, tdp=1)])
        state = apply_placement(empty_state(cfg), cfg.chiplet("a"), 0, 0, Orientation.R0, cfg)
        mask = view_mask(state)
        assert (mask == 1.0).sum() == 4
        assert mask[0, 0] == 1.0 and mask[3, 3] == -1.0

    def test_plus_count_equals_occupied_count(self, rng):
        for _ in range(50):
            cfg, state, _ = random_instance(rng)
            assert (view_mask(state) == 1.0).sum() == state.occupancy.sum()


class TestApplyPlacement:
    def test_adds_exactly_footprint_cells(self):
        cfg = make_config(grid_n=6, chiplets=[Chiplet(id="a", width=2, height=3, tdp=1)])
        state = apply_placement(empty_state(cfg), cfg.chiplet("a"), 1, 2, Orientation.R0, cfg)
        assert state.occupancy.sum() == 6
        assert state.cursor == 1
        assert state.placed[0].footprint.span_rows == 3
        assert state.placed[0].footprint.span_cols == 2

    def test_original_state_unchanged(self):
        cfg = make_config(grid_n=4, chiplets=[square("a", 2, tdp=1)])
        s0 = empty_state(cfg)
        apply_placement(s0, cfg.chiplet("a"), 0, 0, Orientation.R0, cfg)
        assert s0.occupancy.sum() == 0
        assert s0.placed == ()

    def test_overlap_raises(self):
        cfg = make_config(grid_n=4, chiplets=[square("a", 2, tdp=1), square("b", 2, tdp=1)])
        state = apply_placement(empty_state(cfg), cfg.chiplet("a"), 0, 0, Orientation.R0, cfg)
        with pytest.raises(MaskedActionError, match="masked action violation"):
            apply_placement(state, cfg.chiplet("b"), 1, 1, Orientation.R0, cfg)

    def test_out_of_bounds_raises(self):
        cfg = make_config(grid_n=4, chiplets=[square("a", 2, tdp=1)])
        with pytest.raises(MaskedActionError):
            apply_placement(empty_state(cfg), cfg.chiplet("a"), 3, 3, Orientation.R0, cfg)

    def test_full_episode_walk(self):
        cfg = make_config(grid_n=6, chiplets=[square("a", 2, tdp=30), square("b", 2, tdp=20),
                                              square("c", 2, tdp=10)])
        state = empty_state(cfg)
        for cid, origin in (("a", (0, 0)), ("b", (0, 2)), ("c", (2, 0))):
            state = apply_placement(state, cfg.chiplet(cid), *origin, Orientation.R0, cfg)
        assert state.cursor == 3
        assert state.occupancy.sum() == 12

    def test_incremental_occupancy_matches_rebuild(self, rng):
        for _ in range(50):
            cfg, state, _ = random_instance(rng)
            assert np.array_equal(state.occupancy, occupancy_of(state.placed, cfg.grid_n))

    def test_no_pairwise_overlap_in_reachable_states(self, rng):
        for _ in range(50):
            cfg, state, _ = random_instance(rng)
            for i, a in enumerate(state.placed):
                for b in state.placed[i + 1:]:
                    assert not a.footprint.intersects(b.footprint)


class TestSpacing:
    def test_clearance_blocks_abutment(self):
        cfg = make_config(grid_n=6, spacing=1,
                          chiplets=[square("a", 2, tdp=1), square("b", 2, tdp=1)])
        state = apply_placement(empty_state(cfg), cfg.chiplet("a"), 0, 0, Orientation.R0, cfg)
        feas = feasible_origins(state, cfg.chiplet("b"), Orientation.R0, cfg)
        assert not feas[0, 2]  # abutting
        assert feas[0, 3]  # one clear column between footprints


class TestLayoutHelpers:
    def test_state_from_layout_round_trip(self):
        cfg = make_config(grid_n=6, chiplets=[square("a", 2, tdp=30), square("b", 2, tdp=20)])
        layout = {"a": (0, 0, Orientation.R0), "b": (3, 3, Orientation.R0)}
        state = state_from_layout(cfg, layout)
        assert {p.chiplet_id for p in state.placed} == {"a", "b"}
        assert grid.layout_is_legal(cfg, layout)

    def test_illegal_layout_detected(self):
        cfg = make_config(grid_n=4, chiplets=[square("a", 2, tdp=30), square("b", 2, tdp=20)])
        assert not grid.layout_is_legal(cfg, {"a": (0, 0, Orientation.R0),
                                              "b": (1, 1, Orientation.R0)})
