import numpy as np
import pytest

from chipletplace.analysis import (CumulativeReward, MethodPoints, ParetoPoint, assemble_front,
                                   cumulative_reward, dominates, hypervolume_2d,
                                   non_dominated, read_points_csv, reference_point)
from chipletplace.env import StepRecord
from chipletplace.runio import write_points_csv

from oracles import mc_hypervolume


def pts(*coords, method="m"):
    return [ParetoPoint(wl=float(w), temp=float(t), method=method, tag=str(i))
            for i, (w, t) in enumerate(coords)]


class TestNonDominated:
    def test_worked_example(self):
        front = non_dominated(pts((1, 3), (2, 2), (3, 1), (3, 3)))
        assert [(p.wl, p.temp) for p in front] == [(1, 3), (2, 2), (3, 1)]

    def test_single_point(self):
        front = non_dominated(pts((5, 5)))
        assert [(p.wl, p.temp) for p in front] == [(5, 5)]

    def test_identical_points_keep_first(self):
        points = pts((2, 2), (2, 2), (2, 2))
        front = non_dominated(points)
        assert len(front) == 1
        assert front[0].tag == "0"

    def test_idempotent(self, rng):
        for _ in range(30):
            cloud = pts(*zip(rng.uniform(0, 10, 15), rng.uniform(40, 100, 15)))
            once = non_dominated(cloud)
            assert non_dominated(once) == once

    def test_temp_strictly_decreasing_along_front(self, rng):
        for _ in range(30):
            cloud = pts(*zip(rng.uniform(0, 10, 20), rng.uniform(40, 100, 20)))
            front = non_dominated(cloud)
            for a, b in zip(front, front[1:]):
                assert a.wl < b.wl
                assert a.temp > b.temp

    def test_no_mutual_domination(self, rng):
        cloud = pts(*zip(rng.uniform(0, 10, 25), rng.uniform(40, 100, 25)))
        front = non_dominated(cloud)
        for a in front:
            for b in front:
                if a is not b:
                    assert not dominates(a, b)


class TestHypervolume:
    def test_worked_example_exact(self):
        front = pts((1, 3), (2, 2), (3, 1))
        assert hypervolume_2d(front, (4, 4)) == pytest.approx(6.0, abs=1e-9)

    def test_empty_front_zero(self):
        assert hypervolume_2d([], (4, 4)) == 0.0

    def test_point_on_reference_zero(self):
        assert hypervolume_2d(pts((4, 4)), (4, 4)) == 0.0

    def test_point_outside_box_raises(self):
        with pytest.raises(ValueError, match="outside the reference box"):
            hypervolume_2d(pts((5, 1)), (4, 4))

    def test_worked_example_matches_monte_carlo(self):
        front = pts((1, 3), (2, 2), (3, 1))
        est, sigma = mc_hypervolume(front, (4, 4), n_samples=1_000_000, seed=1)
        assert abs(est - 6.0) < max(3 * sigma, 1e-2)

    def test_matches_monte_carlo_on_random_fronts(self, rng):
        for trial in range(50):
            k = int(rng.integers(1, 21))
            cloud = pts(*zip(rng.uniform(0, 10, k), rng.uniform(40, 100, k)))
            ref = (10.5, 101.0)
            front = non_dominated(cloud)
            hv = hypervolume_2d(front, ref)
            est, sigma = mc_hypervolume(front, ref, n_samples=200_000, seed=trial)
            assert abs(hv - est) < max(3 * sigma, 1e-3)

    def test_monotone_under_added_points(self, rng):
        cloud = pts(*zip(rng.uniform(0, 10, 10), rng.uniform(40, 100, 10)))
        ref = (11.0, 101.0)
        hv = hypervolume_2d(non_dominated(cloud), ref)
        extra = cloud + pts((0.5, 99.0))
        hv2 = hypervolume_2d(non_dominated(extra), ref)
        assert hv2 >= hv

    def test_dominated_points_do_not_change_area(self):
        front = pts((1, 3), (2, 2), (3, 1))
        with_dominated = pts((1, 3), (2, 2), (3, 1), (3, 3), (2.5, 2.5))
        assert hypervolume_2d(with_dominated, (4, 4)) == \
            pytest.approx(hypervolume_2d(front, (4, 4)), abs=1e-12)


def record(step, agent, wl_delta, temp_delta, wire_r, thermal_r):
    reward = thermal_r if agent == "thermal" else wire_r
    return StepRecord(step_index=step, chiplet_id=f"c{step}", agent=agent, action=0,
                      row=0, col=0, orientation="R0", reward=reward,
                      wl_after=0.0, temp_after=0.0, wl_delta=wl_delta,
                      temp_delta=temp_delta, wire_reward=wire_r, thermal_reward=thermal_r)


class TestCumulativeReward:
    def test_single_step(self):
        out = cumulative_reward([record(0, "wire", 3.0, 0.5, 0.9, 0.8)])
        assert out.raw["wire"] == pytest.approx(-3.0)
        assert out.normalized["wire"] == pytest.approx(0.9)
        assert out.raw_total == pytest.approx(-3.0)

    def test_three_step_hand_sum(self):
        trace = [record(0, "thermal", 1.0, 2.0, 0.9, 0.9),
                 record(1, "thermal", 0.5, 1.0, 0.8, 0.95),
                 record(2, "wire", 4.0, 0.1, 0.6, 0.99)]
        out = cumulative_reward(trace)
        assert out.raw["thermal"] == pytest.approx(-3.0)
        assert out.raw["wire"] == pytest.approx(-4.0)
        assert out.normalized["thermal"] == pytest.approx(1.85)
        assert out.normalized["wire"] == pytest.approx(0.6)
        assert out.raw_total == pytest.approx(-7.0)

    def test_wire_sum_telescopes(self):
        # construct deltas from a WL sequence: sum of wire raw rewards is
        # -(final - before first wire step)
        wl = [0.0, 10.0, 14.0, 21.0]
        trace = [record(k, "wire", wl[k + 1] - wl[k], 0.0, 1.0, 1.0) for k in range(3)]
        out = cumulative_reward(trace)
        assert out.raw["wire"] == pytest.approx(-(wl[-1] - wl[0]), abs=1e-12)


class TestAssembleFront:
    def test_single_run_single_point(self, tmp_path):
        d = tmp_path / "run1"
        d.mkdir()
        write_points_csv(d / "points.csv", [("sa", 0, "t0", 5.0, 90.0)])
        methods = assemble_front([d])
        assert set(methods) == {"sa"}
        assert len(methods["sa"].front) == 1

    def test_pools_across_directories_and_methods(self, tmp_path):
        d1 = tmp_path / "a"
        d2 = tmp_path / "b"
        d1.mkdir()
        (d2 / "eval").mkdir(parents=True)
        write_points_csv(d1 / "points.csv", [("sa", 0, "x", 5.0, 90.0),
                                             ("sa", 1, "y", 4.0, 95.0)])
        write_points_csv(d2 / "eval" / "points.csv", [("marl", 0, "u1_e0", 3.0, 91.0)])
        methods = assemble_front([d1, d2])
        assert set(methods) == {"sa", "marl"}
        assert len(methods["sa"].cloud) == 2

    def test_pooled_front_hypervolume_not_below_single_run(self, tmp_path, rng):
        rows1 = [("m", 0, str(i), float(w), float(t))
                 for i, (w, t) in enumerate(zip(rng.uniform(1, 9, 10), rng.uniform(50, 99, 10)))]
        rows2 = [("m", 1, str(i), float(w), float(t))
                 for i, (w, t) in enumerate(zip(rng.uniform(1, 9, 10), rng.uniform(50, 99, 10)))]
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        d1.mkdir(), d2.mkdir()
        write_points_csv(d1 / "points.csv", rows1)
        write_points_csv(d2 / "points.csv", rows2)
        ref = (10.0, 100.0)
        single = hypervolume_2d(assemble_front([d1])["m"].front, ref)
        pooled = hypervolume_2d(assemble_front([d1, d2])["m"].front, ref)
        assert pooled >= single

    def test_missing_points_file_raises(self, tmp_path):
        empty = tmp_path / "nothing"
        empty.mkdir()
        with pytest.raises(FileNotFoundError):
            assemble_front([empty])


def test_reference_point_margin():
    clouds = [pts((2, 50), (4, 80)), pts((8, 60))]
    ref = reference_point(clouds, margin=1.05)
    assert ref == (pytest.approx(8.4), pytest.approx(84.0))


def test_points_csv_round_trip(tmp_path):
    rows = [("sa", 3, "w0.5", 12.345678901, 91.234567), ("marl", 1, "u5_e0", 7.0, 88.0)]
    path = write_points_csv(tmp_path / "points.csv", rows)
    back = read_points_csv(path)
    assert back[0].wl == pytest.approx(12.345678901, abs=1e-9)
    assert back[0].method == "sa"
    assert back[1].seed == 1
