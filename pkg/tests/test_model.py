import math

import pytest

from chipletplace.model import (BenchmarkConfig, Chiplet, ConfigError, Net, Orientation,
                                ThermalParams, benchmark_from_dict, benchmark_to_dict,
                                default_canvas_side, load_benchmark, placement_order,
                                preset_path, save_benchmark)

from conftest import make_config, square


class TestChiplet:
    def test_valid(self):
        c = Chiplet(id="CPU", width=12.0, height=12.0, tdp=105.0)
        assert c.area == 144.0
        assert c.dims(Orientation.R0) == (12.0, 12.0)

    def test_r90_swaps_dims(self):
        c = Chiplet(id="HBM", width=7.75, height=11.87, tdp=20.0)
        assert c.dims(Orientation.R90) == (11.87, 7.75)

    @pytest.mark.parametrize("kw", [
        dict(width=0.0), dict(width=-1.0), dict(height=0.0),
        dict(tdp=-1.0), dict(width=math.inf), dict(tdp=math.nan),
    ])
    def test_rejects_bad_fields(self, kw):
        base = dict(id="x", width=1.0, height=1.0, tdp=1.0)
        with pytest.raises(ConfigError):
            Chiplet(**{**base, **kw})


class TestNet:
    def test_needs_two_distinct_endpoints(self):
        with pytest.raises(ConfigError):
            Net(id="n", endpoints=("a", "a"))

    def test_negative_weight_rejected(self):
        with pytest.raises(ConfigError):
            Net(id="n", endpoints=("a", "b"), weight=-0.5)


class TestBenchmarkConfig:
    def test_unknown_endpoint_named_in_error(self):
        with pytest.raises(ConfigError, match="unknown endpoint 'X'"):
            make_config(chiplets=[square("a", 1), square("b", 1)],
                        nets=[Net(id="n", endpoints=("a", "X"))])

    def test_oversized_chiplet_rejected(self):
        with pytest.raises(ConfigError, match="larger than canvas"):
            make_config(grid_n=4, canvas=4.0, chiplets=[square("big", 5)])

    def test_rotatable_chiplet_must_fit_rotated(self):
        # 1x6 fits a 4x8-cell... non-square canvas exercised via rectangle
        cfg = BenchmarkConfig(name="t", canvas_width=8.0, canvas_height=2.0, grid_n=4,
                              chiplets=(Chiplet(id="bar", width=7.0, height=1.0, tdp=1.0,
                                                rotatable=False),),
                              nets=())
        assert cfg.chiplet("bar").rotatable is False
        with pytest.raises(ConfigError):
            BenchmarkConfig(name="t", canvas_width=8.0, canvas_height=2.0, grid_n=4,
                            chiplets=(Chiplet(id="bar", width=7.0, height=1.0, tdp=1.0,
                                              rotatable=True),),
                            nets=())

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ConfigError, match="duplicate chiplet id"):
            make_config(chiplets=[square("a", 1), square("a", 1)])

    def test_grid_too_small(self):
        with pytest.raises(ConfigError):
            make_config(grid_n=1, chiplets=[square("a", 0.5)])


class TestPlacementOrder:
    def test_tdp_descending(self):
        cfg = make_config(grid_n=64, canvas=64.0, chiplets=[
            Chiplet(id="CPU", width=12, height=12, tdp=105),
            Chiplet(id="GPU", width=18.2, height=18.2, tdp=295),
            Chiplet(id="HBM", width=7.75, height=11.87, tdp=20),
        ])
        assert placement_order(cfg) == ["GPU", "CPU", "HBM"]

    def test_equal_tdp_falls_back_to_area_then_id(self):
        cfg = make_config(grid_n=8, chiplets=[
            Chiplet(id="b", width=1, height=1, tdp=5),
            Chiplet(id="a", width=1, height=1, tdp=5),
            Chiplet(id="c", width=2, height=2, tdp=5),
        ])
        assert placement_order(cfg) == ["c", "a", "b"]

    def test_singleton(self):
        cfg = make_config(chiplets=[square("only", 1)])
        assert placement_order(cfg) == ["only"]

    def test_is_permutation_with_nonincreasing_tdp(self, rng):
        for _ in range(50):
            k = int(rng.integers(1, 8))
            chiplets = [Chiplet(id=f"c{i}", width=1, height=1,
                                tdp=float(rng.choice([0, 10, 10, 80, 295])))
                        for i in range(k)]
            cfg = make_config(grid_n=8, chiplets=chiplets)
            order = placement_order(cfg)
            assert sorted(order) == sorted(c.id for c in chiplets)
            tdps = [cfg.chiplet(i).tdp for i in order]
            assert all(a >= b for a, b in zip(tdps, tdps[1:]))


class TestLoadBenchmark:
    def test_multi_gpu_preset_matches_published_table(self):
        cfg = load_benchmark(preset_path("multi-gpu"))
        cpu = cfg.chiplet("CPU")
        assert (cpu.width, cpu.height, cpu.tdp) == (12.0, 12.0, 105.0)
        gpu = cfg.chiplet("GPU_0")
        assert (gpu.width, gpu.height, gpu.tdp) == (18.2, 18.2, 295.0)
        hbm = cfg.chiplet("HBM_0")
        assert (hbm.width, hbm.height, hbm.tdp) == (7.75, 11.87, 20.0)
        assert cfg.tdp_threshold == 80.0
        assert sum(1 for c in cfg.chiplets if c.id.startswith("GPU")) == 4
        assert sum(1 for c in cfg.chiplets if c.id.startswith("HBM")) == 8

    def test_cpu_dram_preset_matches_published_table(self):
        cfg = load_benchmark(preset_path("cpu-dram"))
        cpu = cfg.chiplet("CPU_0")
        assert (cpu.width, cpu.height, cpu.tdp) == (8.25, 9.0, 150.0)
        dram = cfg.chiplet("DRAM_0")
        assert (dram.width, dram.height, dram.tdp) == (8.75, 8.75, 20.0)

    def test_unknown_net_endpoint_reported(self, tmp_path):
        doc = tmp_path / "bad.yaml"
        doc.write_text(
            "chiplets:\n"
            "  - {name: a, width: 1, height: 1, tdp: 1}\n"
            "  - {name: b, width: 1, height: 1, tdp: 1}\n"
            "nets:\n"
            "  - {id: n, endpoints: [a, X]}\n"
            "grid_n: 8\n")
        with pytest.raises(ConfigError, match="unknown endpoint"):
            load_benchmark(doc)

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            load_benchmark("/nonexistent/bench.yaml")

    def test_round_trip_identity(self, tmp_path):
        cfg = load_benchmark(preset_path("cpu-dram"))
        out = save_benchmark(cfg, tmp_path / "copy.yaml")
        assert load_benchmark(out) == cfg

    def test_round_trip_via_dict(self):
        cfg = load_benchmark(preset_path("multi-gpu"))
        assert benchmark_from_dict(benchmark_to_dict(cfg)) == cfg

    def test_count_expansion_and_default_canvas(self):
        cfg = benchmark_from_dict({
            "chiplets": [{"name": "x", "width": 2, "height": 2, "tdp": 5, "count": 3}],
            "grid_n": 16,
        })
        assert [c.id for c in cfg.chiplets] == ["x_0", "x_1", "x_2"]
        assert cfg.canvas_width == pytest.approx(default_canvas_side(cfg.chiplets))

    def test_pin_offset_endpoint_form_accepted(self):
        cfg = benchmark_from_dict({
            "chiplets": [{"name": "a", "width": 1, "height": 1, "tdp": 1},
                         {"name": "b", "width": 1, "height": 1, "tdp": 1}],
            "nets": [{"id": "n", "endpoints": [{"id": "a", "pin_offset": [0.1, 0.2]}, "b"]}],
            "grid_n": 8,
        })
        assert cfg.nets[0].endpoints == ("a", "b")


def test_thermal_params_validation():
    with pytest.raises(ConfigError):
        ThermalParams(lateral_conductance=0.0)
    with pytest.raises(ConfigError):
        ThermalParams(vertical_conductance=-1.0)
