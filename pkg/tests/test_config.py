import numpy as np
import pytest

from xdiff.config import (
    ConfigError,
    Constant,
    Cosine,
    CsvData,
    PolyBump,
    parse_config,
    preset,
    preset_with_overrides,
    render_config,
)
from xdiff.grid import make_grid
from xdiff.kernel import BoxKernel

MINIMAL = """
grid.L = 1.0
grid.N = 64
params.alpha = 1.0
params.mu = 0.5
params.beta = 0.75
params.beta_tilde = 0.5
params.K = 1.0
params.K_tilde = 0.5
params.kernel.kind = box
params.kernel.half_width = 0.05
rho0.kind = constant
rho0.c = 1.0
A0.kind = constant
A0.c = 1.0
run.t_end = 0.001
"""


class TestParse:
    def test_minimal_config(self):
        cfg = parse_config(MINIMAL)
        assert cfg.grid_N == 64
        assert cfg.params.kernel == BoxKernel(0.05)
        assert cfg.mode.kind == "original"
        assert cfg.ctrl.cfl_safety == 0.25
        assert cfg.record_every == 10
        assert cfg.snapshot_times == ()

    def test_comments_and_blank_lines_ignored(self):
        cfg = parse_config("# leading comment\n\n" + MINIMAL + "\n# trailing\n")
        assert cfg.t_end == 0.001

    def test_odd_grid_rejected_with_line_number(self):
        text = MINIMAL.replace("grid.N = 64", "grid.N = 15")
        with pytest.raises(ConfigError, match=r"line 3: grid.N must be even"):
            parse_config(text)

    def test_mu_out_of_range_rejected(self):
        text = MINIMAL.replace("params.mu = 0.5", "params.mu = 1.0")
        with pytest.raises(ConfigError, match=r"mu must satisfy 0 <= mu < 1"):
            parse_config(text)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match=r"unknown key 'params.gamma'"):
            parse_config(MINIMAL + "params.gamma = 2.0\n")

    def test_kind_specific_keys_fail_closed(self):
        # a poly_bump key together with kind = constant must be rejected
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config(MINIMAL + "rho0.amp = 3.0\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate key"):
            parse_config(MINIMAL + "grid.L = 2.0\n")

    def test_missing_required_key(self):
        text = MINIMAL.replace("run.t_end = 0.001", "")
        with pytest.raises(ConfigError, match="missing required key 'run.t_end'"):
            parse_config(text)

    def test_malformed_line(self):
        with pytest.raises(ConfigError, match="expected 'key = value'"):
            parse_config(MINIMAL + "this is not a config line\n")

    def test_bad_number_reports_line(self):
        text = MINIMAL.replace("run.t_end = 0.001", "run.t_end = soon")
        with pytest.raises(ConfigError, match="must be a number"):
            parse_config(text)

    def test_snapshot_times_validated_against_t_end(self):
        with pytest.raises(ConfigError, match="snapshot time"):
            parse_config(MINIMAL + "run.snapshot_times = 0.5\n")

    def test_record_every_must_be_positive(self):
        with pytest.raises(ConfigError, match="record_every"):
            parse_config(MINIMAL + "run.record_every = 0\n")

    def test_poly_bump_and_mode_sections(self):
        text = MINIMAL.replace(
            "rho0.kind = constant\nrho0.c = 1.0",
            "rho0.kind = poly_bump\nrho0.amp = -140.0\nrho0.a = -0.5\n"
            "rho0.b = 0.5\nrho0.p = 3\nrho0.q = 0\nrho0.r = 3",
        )
        text += "mode.kind = regularized\nmode.eps = 0.01\nmode.delta = 0.001\n"
        cfg = parse_config(text)
        assert cfg.rho0 == PolyBump(-140.0, -0.5, 0.5, 3, 0, 3)
        assert cfg.mode.eps == 0.01

    def test_cosine_initial_data(self):
        text = MINIMAL.replace(
            "rho0.kind = constant\nrho0.c = 1.0",
            "rho0.kind = cosine\nrho0.mean = 1.0\nrho0.amp = 0.1\nrho0.mode = 1",
        )
        cfg = parse_config(text)
        g = make_grid(1.0, 64)
        sampled = cfg.rho0.sample(g)
        assert sampled.values[g.index_of_zero()] == pytest.approx(1.1)

    def test_csv_initial_data_resolved_and_loaded(self, tmp_path):
        g = make_grid(1.0, 64)
        lines = ["x,value"] + [f"{float(x)!r},{1.0 + 0.1 * float(np.cos(np.pi * x))!r}" for x in g.x]
        (tmp_path / "rho.csv").write_text("\n".join(lines) + "\n")
        text = MINIMAL.replace(
            "rho0.kind = constant\nrho0.c = 1.0",
            "rho0.kind = csv\nrho0.path = rho.csv",
        )
        cfg = parse_config(text, base_dir=str(tmp_path))
        assert cfg.rho0.path == str(tmp_path / "rho.csv")
        sampled = cfg.rho0.sample(g)
        assert sampled.values[g.index_of_zero()] == pytest.approx(1.1)

    def test_csv_node_mismatch_rejected(self, tmp_path):
        (tmp_path / "rho.csv").write_text("x,value\n0.0,1.0\n")
        text = MINIMAL.replace(
            "rho0.kind = constant\nrho0.c = 1.0",
            "rho0.kind = csv\nrho0.path = rho.csv",
        )
        cfg = parse_config(text, base_dir=str(tmp_path))
        with pytest.raises(ValueError, match="does not match"):
            cfg.rho0.sample(make_grid(1.0, 64))


class TestInitialDataSpecs:
    def test_poly_bump_validation(self):
        with pytest.raises(ValueError):
            PolyBump(1.0, 0.5, -0.5, 3, 0, 3)
        with pytest.raises(ValueError):
            PolyBump(1.0, -0.5, 0.5, 3, -1, 3)

    def test_poly_bump_vanishes_outside_window(self):
        g = make_grid(1.0, 256)
        f = PolyBump(-140.0, -0.5, 0.5, 3, 0, 3).sample(g)
        outside = np.abs(g.x) > 0.5
        assert np.all(f.values[outside] == 0.0)
        assert np.all(f.values[~outside] >= 0.0)

    def test_cosine_mode_must_be_integer(self):
        with pytest.raises(ValueError):
            Cosine(1.0, 0.1, -2)


class TestPresets:
    def test_blowup_preset_center_values(self):
        cfg = preset("fig1-blowup")
        g = make_grid(cfg.grid_L, cfg.grid_N)
        rho0 = cfg.rho0.sample(g)
        assert rho0.values[g.index_of_zero()] == 0.0
        assert cfg.grid_N == 1024
        assert cfg.params.mu == 0.5

    def test_support_preset_center_value(self):
        cfg = preset("fig2-support")
        g = make_grid(cfg.grid_L, cfg.grid_N)
        rho0 = cfg.rho0.sample(g)
        assert rho0.values[g.index_of_zero()] == pytest.approx(2.1875, abs=1e-12)

    def test_support_preset_area_sits_inside_density(self):
        from xdiff.diagnostics import support

        cfg = preset("fig2-support")
        g = make_grid(cfg.grid_L, cfg.grid_N)
        a0 = support(cfg.A0.sample(g))
        r0 = support(cfg.rho0.sample(g))
        assert len(a0) == 1 and len(r0) == 1
        assert abs(a0[0][0] - (-0.3)) <= 2 * g.dx and abs(a0[0][1] - 0.3) <= 2 * g.dx
        assert r0[0][0] < a0[0][0] and a0[0][1] < r0[0][1]

    def test_unknown_preset_rejected(self):
        with pytest.raises(ValueError, match="unknown preset"):
            preset("fig3")


class TestRoundTrip:
    @pytest.mark.parametrize("name", ["fig1-blowup", "fig2-support"])
    def test_presets_round_trip_exactly(self, name):
        cfg = preset(name)
        assert parse_config(render_config(cfg)) == cfg

    def test_minimal_round_trips(self):
        cfg = parse_config(MINIMAL)
        assert parse_config(render_config(cfg)) == cfg

    def test_overrides_applied_through_config_format(self):
        cfg = preset_with_overrides(
            "fig2-support",
            {"run.t_end": "0.0001", "grid.N": "256", "run.snapshot_times": "0.0, 5e-5"},
        )
        assert cfg.t_end == 0.0001
        assert cfg.grid_N == 256
        assert cfg.snapshot_times == (0.0, 5e-5)

    def test_override_must_respect_validation(self):
        # shrinking t_end below the preset snapshots is caught
        with pytest.raises(ConfigError, match="snapshot time"):
            preset_with_overrides("fig2-support", {"run.t_end": "0.0001"})

    def test_override_of_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            preset_with_overrides("fig1-blowup", {"grid.M": "12"})
