import numpy as np
import pytest
import yaml
from hypothesis import given, settings, strategies as st

from spatialgame.scenario import (FieldSpec, ScenarioConfig, ScenarioError, evaluate,
                                  load_scenario, parse_scenario)


def raw_symmetric():
    return {
        "name": "t",
        "grid": {"n_points": 64},
        "environment": {"sigma": 0.5, "eta": 0.2, "theta": 0.4, "delta": 0.2, "v": 0.0},
        "players": [
            {"name": "a", "arc": [0, "pi"], "rho": 0.03, "gamma": 0.5, "w": 1.0, "A": 1.6},
            {"name": "b", "arc": ["pi", "2*pi"], "rho": 0.03, "gamma": 0.5, "w": 1.0, "A": 1.6},
        ],
    }


def issues_of(raw):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(raw, "mem.yaml")
    return info.value.issues


class TestLoad:
    def test_symmetric_file(self, scenario_dir):
        cfg = load_scenario(scenario_dir / "symmetric.yaml")
        assert cfg.sigma == 0.5 and len(cfg.players) == 2
        assert cfg.players[0].rho == cfg.players[1].rho
        scn = cfg.build()
        assert scn.grid.n_points == 512 and scn.constant_coefficients

    @pytest.mark.parametrize("name", ["symmetric", "size", "productivity", "decay", "disutility",
                                      "advection", "whole", "halves", "quarters"])
    def test_bundled_scenarios_build(self, scenario_dir, name):
        scn = load_scenario(scenario_dir / f"{name}.yaml").build()
        assert len(scn.players) >= 1

    def test_overlapping_arcs_name_both(self):
        raw = raw_symmetric()
        raw["players"][1]["arc"] = [3, 6]
        msgs = [m for loc, m in issues_of(raw) if loc == "players"]
        assert msgs and "players[1]" in msgs[0] and "players[2]" in msgs[0]

    def test_theta_one_rejected(self):
        raw = raw_symmetric()
        raw["environment"]["theta"] = 1.0
        assert any(loc == "environment.theta" for loc, _ in issues_of(raw))

    def test_all_problems_reported(self):
        raw = raw_symmetric()
        raw["environment"]["theta"] = 1.0
        raw["players"][0]["gamma"] = 1.0
        raw["players"][1]["A"] = 0.9
        raw["grid"]["bogus"] = 1
        raw["extra"] = {}
        locs = {loc for loc, _ in issues_of(raw)}
        assert {"environment.theta", "players[1].gamma", "players[2].A", "extra"} <= locs

    def test_missing_key_located(self):
        raw = raw_symmetric()
        del raw["players"][0]["rho"]
        raw["environment"]["sigma"] = -1
        locs = {loc for loc, _ in issues_of(raw)}
        assert "players[1].rho" in locs

    def test_discount_condition_named(self):
        raw = raw_symmetric()
        raw["environment"]["v"] = "1.0*sin(x)"
        raw["environment"]["delta"] = 0.1
        raw["run"] = {"steady_state": False}
        msgs = dict(issues_of(raw))
        assert "discount condition" in msgs["players[1].rho"]

    def test_steady_state_needs_decay(self):
        raw = raw_symmetric()
        raw["environment"]["delta"] = 0.0
        assert any("steady state" in m for _, m in issues_of(raw))
        raw["run"] = {"steady_state": False}
        parse_scenario(raw)

    def test_wrapping_arc(self):
        raw = raw_symmetric()
        raw["players"][0]["arc"] = ["3*pi/2", "5*pi/2"]
        raw["players"][1]["arc"] = ["pi/2", "3*pi/2"]
        scn = parse_scenario(raw).build()
        assert scn.partition.owner(scn.grid)[0] == 0 and scn.players[0].arc.length == pytest.approx(np.pi)

    def test_odd_grid(self):
        raw = raw_symmetric()
        raw["grid"]["n_points"] = 63
        assert any(loc == "grid.n_points" for loc, _ in issues_of(raw))

    def test_discontinuous_advection_rejected(self):
        raw = raw_symmetric()
        raw["environment"]["v"] = {"default": 0.0, "segments": [{"arc": [0, 1], "value": 0.1}]}
        assert any("jump" in m for _, m in issues_of(raw))

    def test_yaml_error_has_location(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("grid:\n  n_points: [1, 2\nenvironment: {}\n")
        with pytest.raises(ScenarioError) as info:
            load_scenario(path)
        assert info.value.issues[0][0].startswith("line ")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="cannot read"):
            load_scenario(tmp_path / "nope.yaml")

    def test_round_trip(self, scenario_dir):
        for name in ("decay", "advection", "size"):
            cfg = load_scenario(scenario_dir / f"{name}.yaml")
            again = parse_scenario(yaml.safe_load(yaml.safe_dump(cfg.to_raw())), cfg.source)
            assert again == cfg


class TestFields:
    def test_piecewise_sampling(self, scenario_dir):
        scn = load_scenario(scenario_dir / "decay.yaml").build()
        assert set(np.unique(scn.env.delta)) == {0.15, 0.25}

    def test_expression_field(self):
        raw = raw_symmetric()
        raw["environment"]["delta"] = "0.2 + 0.05*cos(x)"
        scn = parse_scenario(raw).build()
        np.testing.assert_allclose(scn.env.delta, 0.2 + 0.05 * np.cos(scn.grid.nodes))
        assert not scn.constant_coefficients

    def test_unknown_field_key(self):
        raw = raw_symmetric()
        raw["environment"]["delta"] = {"default": 0.2, "pieces": []}
        assert any(loc.startswith("environment.delta") for loc, _ in issues_of(raw))


class TestExpressions:
    def test_values(self):
        assert evaluate("2*pi") == pytest.approx(2 * np.pi)
        assert evaluate(3) == 3.0
        np.testing.assert_allclose(evaluate("sin(x)**2", np.array([0.0, np.pi / 2])), [0, 1])

    @pytest.mark.parametrize("expr", ["__import__('os')", "x.real", "open('f')", "[1]", "True",
                                      "sin(1, 2)", "1 if 1 else 2", "lambda: 1"])
    def test_rejects_unsafe(self, expr):
        with pytest.raises(ValueError):
            evaluate(expr, np.zeros(2)) if "x" in expr else evaluate(expr)

    def test_x_needs_grid(self):
        with pytest.raises(ValueError):
            evaluate("x + 1")

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
    def test_arithmetic_matches_python(self, a, b):
        assert evaluate(f"{a!r} + {b!r} * 2") == pytest.approx(a + b * 2)


class TestOverrides:
    def test_global_and_per_player(self, scenario_dir):
        cfg = load_scenario(scenario_dir / "symmetric.yaml")
        assert cfg.with_value("sigma", 1.6).sigma == 1.6
        two = cfg.with_value("w_2", 1.1)
        assert two.players[1].w == FieldSpec(1.1) and two.players[0].w == FieldSpec(1.0)
        assert all(p.rho == 0.04 for p in cfg.with_value("rho", 0.04).players)

    @pytest.mark.parametrize("name", ["kappa", "w_3", "w_x"])
    def test_unknown_parameter(self, scenario_dir, name):
        cfg = load_scenario(scenario_dir / "symmetric.yaml")
        with pytest.raises(KeyError):
            cfg.with_value(name, 1.0)

    def test_build_at_other_resolution(self, scenario_dir):
        cfg = load_scenario(scenario_dir / "symmetric.yaml")
        assert cfg.build(128).grid.n_points == 128
        with pytest.raises(ScenarioError):
            cfg.build(7)
