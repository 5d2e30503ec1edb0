import json

import numpy as np
import pytest

from degencontrol import StateField, build_grid, read_field_csv, write_field_csv
from degencontrol.cli import main
from degencontrol.errors import BadInsolationFile, NonpositiveOverlap, ScenarioError
from degencontrol.pipeline import (Scenario, bundled_scenario, load_scenario,
                                   parse_scenario_text, read_insolation,
                                   run_budyko_sellers_demo, run_convergence_study,
                                   run_pipeline, run_sweep, state_from_preset)

SMALL = dict(n_cells=200, dt=1e-3)


@pytest.fixture
def t1():
    return load_scenario(bundled_scenario("legendre_t1")).with_overrides(**SMALL)


@pytest.fixture
def c1():
    return load_scenario(bundled_scenario("legendre_c1_signchange")).with_overrides(**SMALL)


def write_cfg(path, **overrides):
    keys = dict(coefficient="legendre", initial_state="affine:1,0.5", target_state="const:1",
                epsilon=1e-2, mode="T1", n_cells=200, dt=1e-3, output_dir=str(path.parent / "o"))
    keys.update(overrides)
    path.write_text("# test scenario\n" + "".join(f"{k} = {v}\n" for k, v in keys.items()))
    return path


def test_parse_scenario_text():
    sc = parse_scenario_text("""
        # comment line
        coefficient = power:1.5   # trailing comment
        epsilon = 0.05
        mode = c1
        n_cells = 64
    """, source="demo.cfg")
    assert sc.coefficient == "power:1.5" and sc.mode == "C1"
    assert sc.epsilon == 0.05 and sc.n_cells == 64
    assert sc.lines["n_cells"] == 6


@pytest.mark.parametrize("text,fragment", [
    ("epsilon 0.1", ":1: expected 'key = value'"),
    ("\nfoo = 1", ":2: unknown key 'foo'"),
    ("n_cells = 10\nn_cells = 20", ":2: duplicate key"),
    ("n_cells = ten", "n_cells expects int"),
    ("epsilon = 0.1\ndt = -1", "x.cfg:2 (dt)"),
    ("mode = T3", "mode must be T1 or C1"),
])
def test_scenario_errors_carry_line_context(text, fragment):
    with pytest.raises(ScenarioError, match=None) as info:
        parse_scenario_text(text, source="x.cfg")
    assert fragment in str(info.value)


def test_state_presets(tmp_path):
    g = build_grid(50)
    x = g.centers
    np.testing.assert_allclose(state_from_preset("const:2.5", g).values, 2.5)
    np.testing.assert_allclose(state_from_preset("affine:0.3,1", g).values, 0.3 + x)
    bump = state_from_preset("bump:0.2,0.5", g).values
    assert bump.max() <= 1 and np.all(bump[np.abs(x - 0.2) >= 0.5] == 0)
    np.testing.assert_allclose(state_from_preset("legendre:2", g).values, 1.5 * x**2 - 0.5)
    write_field_csv(tmp_path / "v.csv", StateField(g, np.cos(x)))
    np.testing.assert_array_equal(state_from_preset("csv:v.csv", g, tmp_path).values, np.cos(x))
    for bad in ("cubic:1", "affine:1", "bump:0,-1", "csv:missing.csv"):
        with pytest.raises(ValueError):
            state_from_preset(bad, g, tmp_path)


def test_bundled_scenarios_load():
    t1 = load_scenario(bundled_scenario("legendre_t1"))
    assert (t1.n_cells, t1.dt, t1.epsilon, t1.mode) == (2000, 1e-4, 1e-2, "T1")
    c1 = load_scenario(bundled_scenario("legendre_c1_signchange"))
    assert c1.initial_state == "affine:0.3,1" and c1.mode == "C1"


def test_t1_pipeline(t1, tmp_path):
    report = run_pipeline(t1, out_dir=tmp_path, timestamp=False)
    assert report.passed and report.exit_code == 0
    assert report.checks["positivity"] is True
    assert all(report.checks.values())
    for name in ("report.json", "alpha_star.csv", "trace_spectral.csv", "trace_implicit.csv"):
        assert (tmp_path / name).exists()
    d = json.loads((tmp_path / "report.json").read_text())
    assert {"T", "beta", "lambda1", "lambda2", "overlap", "predicted_error"} <= set(d["plan"])
    assert "timestamp" not in d


def test_c1_pipeline_reports_positivity_not_applicable(c1):
    report = run_pipeline(c1, write=False, timestamp=False)
    assert report.passed
    assert report.checks["positivity"] is None
    assert report.diagnostics["negative_values_observed"]
    assert report.plan["overlap"] == pytest.approx(0.6, rel=1e-12)


def test_orthogonal_data_rejected(c1):
    with pytest.raises(NonpositiveOverlap):
        run_pipeline(c1.with_overrides(initial_state="affine:0,1"), write=False)


def test_reports_are_deterministic(t1, tmp_path):
    a = run_pipeline(t1, out_dir=tmp_path / "a", timestamp=False, seed=7).to_json()
    b = run_pipeline(t1, out_dir=tmp_path / "b", timestamp=False, seed=7).to_json()
    assert a == b
    assert (tmp_path / "a" / "trace_implicit.csv").read_bytes() == \
        (tmp_path / "b" / "trace_implicit.csv").read_bytes()


def test_alpha_star_csv_round_trip(t1, tmp_path):
    from degencontrol.pipeline import solve
    sol = solve(t1)
    write_field_csv(tmp_path / "a.csv", sol.plan.alpha_star)
    back = read_field_csv(tmp_path / "a.csv")
    np.testing.assert_array_equal(back.values, sol.plan.alpha_star.values)


def test_budyko_sellers_demo_matches_t1(tmp_path):
    sc = load_scenario(bundled_scenario("legendre_t1")).with_overrides(**SMALL)
    base = run_pipeline(sc, write=False, timestamp=False)
    demo = run_budyko_sellers_demo(scenario=sc, write=False, timestamp=False)
    assert demo.plan == base.plan and demo.steering_error == base.steering_error
    assert demo.metadata["x"] == "sine of latitude"
    sample = bundled_scenario("legendre_t1").parent / "insolation_sample.csv"
    meta = read_insolation(sample)
    assert meta["samples"] == 21 and meta["x_range"] == [-1.0, 1.0]
    bad = tmp_path / "bad.csv"
    bad.write_text("x,Q\n0.5,1\n0.1,2\n")
    with pytest.raises(BadInsolationFile):
        run_budyko_sellers_demo(bad, scenario=sc, write=False)
    bad.write_text("x,Q\n0.5\n")
    with pytest.raises(BadInsolationFile):
        read_insolation(bad)
    with pytest.raises(BadInsolationFile):
        read_insolation(tmp_path / "nope.csv")


def test_convergence_study_shapes(t1, tmp_path):
    one = run_convergence_study(t1, [100], [1e-2])
    assert len(one.rows) == 1 and one.orders["integrator_gap"] == []
    table = run_convergence_study(t1, [50, 100], [4e-2, 1e-2], lambda2_exact=2.0)
    assert len(table.orders["integrator_gap"]) == 1
    table.write_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0].startswith("n_cells,h,dt") and len(lines) == 3
    with pytest.raises(ValueError):
        run_convergence_study(t1, [100, 50], [1e-2])
    with pytest.raises(ValueError):
        run_convergence_study(t1, [50, 100, 200], [1e-2, 1e-3])


def test_sweep_is_worker_independent(t1):
    scenarios = [t1.with_overrides(initial_state=f"affine:1,{b}") for b in (0.1, 0.5, -0.7)]
    serial = [r.to_json() for r in run_sweep(scenarios, seed=3, workers=1)]
    pooled = [r.to_json() for r in run_sweep(scenarios, seed=3, workers=2)]
    assert serial == pooled


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        Scenario(n_cells=0)
    with pytest.raises(ScenarioError):
        Scenario(margin_constant=-1.0)


# ----------------------------------------------------------------------- CLI

def test_cli_verify_exit_codes(tmp_path, capsys):
    ok = write_cfg(tmp_path / "ok.cfg")
    assert main(["verify", str(ok), "--no-timestamp"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] and "timestamp" not in report
    coarse = write_cfg(tmp_path / "coarse.cfg", n_cells=100, dt=0.5, margin_constant=0.0)
    assert main(["verify", str(coarse), "--no-timestamp"]) == 1


def test_cli_reports_errors_with_line(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "perp.cfg", initial_state="affine:0,1", mode="C1")
    assert main(["verify", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "NonpositiveOverlap" in err and "perp.cfg:3 (initial_state)" in err
    bad = tmp_path / "bad.cfg"
    bad.write_text("epsilon = nope\n")
    assert main(["verify", str(bad)]) == 2
    assert "bad.cfg:1" in capsys.readouterr().err


def test_cli_determinism(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "s.cfg")
    outs = []
    for _ in range(2):
        main(["verify", str(cfg), "--no-timestamp", "--seed", "18446744073709551615"])
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    with pytest.raises(SystemExit):
        main(["verify", str(cfg), "--seed", "-1"])


def test_cli_artifact_commands(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "s.cfg")
    out = tmp_path / "art"
    assert main(["synthesize", str(cfg), "--out", str(out)]) == 0
    plan = json.loads(capsys.readouterr().out)
    assert set(plan) == {"epsilon", "T", "beta", "lambda1", "lambda2", "overlap",
                         "predicted_error", "alpha_star_csv_path"}
    assert read_field_csv(plan["alpha_star_csv_path"]).grid.n_cells == 200

    assert main(["evolve", str(cfg), "--out", str(out), "--method", "spectral"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert {"steering_error", "min_value", "b_norm", "gronwall_ok", "remainder_ok"} <= set(summary)
    header = (out / "trace_spectral.csv").read_text().splitlines()[0]
    assert header == "t,x,v"

    assert main(["spectrum", str(cfg), "--out", str(out), "--count", "5", "--modes", "3",
                 "--cells", "64"]) == 0
    rows = (out / "spectrum.csv").read_text().splitlines()
    assert rows[0] == "k,lambda_k" and len(rows) == 6
    assert float(rows[3].split(",")[1]) == pytest.approx(6.0, abs=1e-9)
    assert (out / "modes.csv").read_text().splitlines()[0] == "x,omega_1,omega_2,omega_3"


def test_cli_demo_and_converge(tmp_path, capsys):
    sample = bundled_scenario("legendre_t1").parent / "insolation_sample.csv"
    assert main(["demo-budyko-sellers", "--cells", "100", "--dt", "1e-2", "--out",
                 str(tmp_path / "demo"), "--insolation", str(sample), "--no-timestamp"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["metadata"]["insolation"]["samples"] == 21
    cfg = write_cfg(tmp_path / "s.cfg")
    assert main(["converge", str(cfg), "--cells-list", "50,100", "--dt-list", "4e-2,1e-2",
                 "--out", str(tmp_path / "conv")]) == 0
    assert (tmp_path / "conv" / "convergence.csv").exists()
