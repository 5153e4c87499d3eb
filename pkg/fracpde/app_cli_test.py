import json

import numpy as np
import pandas as pd
import pytest

from app_cli import (EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_OK, OUTPUT_ROOT_ENV, ScenarioConfig, bench,
                     build_parser, history, inspect_snapshot, main, run_scenario)
from errors import ConfigError
from snapshots import read_snapshot, write_snapshot
from spectral_core import Grid, ScalarField


def sqg_scenario(**overrides):
    """Small SQG scenario on a 16×16 grid"""
    data = {
        "scenario": {"name": "sqg-demo", "solver": "quasilinear", "preset": "sqg", "seed": 3,
                     "emit": ["csv", "snapshots", "heatmaps"]},
        "grid": {"dim": 2, "n_per_axis": 16},
        "stepper": {"t_end": 0.1, "dt": 0.02},
        "initial": {"kind": "cos-product"},
        "picard": {"tol_sup": 1e-10},
    }
    for section, values in overrides.items():
        data[section] = {**data.get(section, {}), **values}
    return data


def write_scenario(directory, data, name="scenario.json"):
    path = directory / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


@pytest.fixture
def scenario_path(tmp_path):
    return write_scenario(tmp_path, sqg_scenario())


def test_sqg_scenario_writes_artifacts(tmp_path, scenario_path):
    """Test a full solve: exit code, diagnostics, snapshots, heatmaps and manifest"""
    root = tmp_path / "out"

    assert run_scenario(scenario_path, root) == EXIT_OK
    directory = root / "sqg-demo"
    diagnostics = pd.read_csv(directory / "diagnostics.csv")
    assert list(diagnostics.columns) == ["time", "sup_norm", "l2_norm", "holder_half"]
    assert diagnostics["sup_norm"].is_monotonic_decreasing
    assert len(diagnostics) == 6
    assert (directory / "convergence.csv").exists()
    snapshot = read_snapshot(directory / "snapshots" / "u_0005.fpde")
    assert snapshot.grid == Grid(2, 16)
    assert (directory / "heatmaps" / "u_0000.ppm").exists()
    assert (directory / "fields" / "u_0000.csv").exists()
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["exit_code"] == 0
    assert manifest["seed"] == 3
    assert set(manifest["versions"]) >= {"numpy", "scipy", "pandas"}
    assert "u_0000.ppm" in manifest["heatmap_ranges"]


def test_runs_are_deterministic(tmp_path, scenario_path):
    """Test that two runs of the same scenario give bit-identical diagnostics"""
    assert run_scenario(scenario_path, tmp_path / "a") == EXIT_OK
    assert run_scenario(scenario_path, tmp_path / "b") == EXIT_OK

    first = (tmp_path / "a" / "sqg-demo" / "diagnostics.csv").read_bytes()
    second = (tmp_path / "b" / "sqg-demo" / "diagnostics.csv").read_bytes()
    assert first == second


def test_output_root_from_environment(tmp_path, scenario_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path / "env-root"))

    assert run_scenario(scenario_path) == EXIT_OK
    assert (tmp_path / "env-root" / "sqg-demo" / "diagnostics.csv").exists()


@pytest.mark.parametrize("data", [
    sqg_scenario(coefficients={"a0": 0.0}),
    sqg_scenario(scenario={"color": "red"}),
    sqg_scenario(grid={"n_per_axis": 12}),
    sqg_scenario(grid={"dim": 1}),
    sqg_scenario(scenario={"preset": "unknown"}),
    sqg_scenario(parameters={"rate": 1.0}),
    sqg_scenario(stepper={"scheme": "rk4"}),
])
def test_invalid_scenarios_exit_before_writing(tmp_path, data):
    """Test that configuration errors give exit code 2 and no output directory"""
    root = tmp_path / "out"

    assert run_scenario(write_scenario(tmp_path, data), root) == EXIT_CONFIG
    assert not root.exists()


def test_missing_and_malformed_files(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")

    assert run_scenario(tmp_path / "missing.json", tmp_path / "out") == EXIT_CONFIG
    assert run_scenario(bad, tmp_path / "out") == EXIT_CONFIG


def test_linear_semantic_checks():
    """Test the cross-field rules the schema cannot express"""
    base = {"scenario": {"name": "lin", "solver": "linear"}, "grid": {"dim": 2, "n_per_axis": 16}}
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({**base, "coefficients": {"b": [1.0]}})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({**base, "coefficients": {"a": 1.0, "a0": 2.0}})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({**base, "parameters": {"kappa": 1.0}})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({**base, "initial": {"kind": "snapshot"}})


def test_remark_class_requires_ellipticity():
    data = {"scenario": {"name": "rc", "solver": "fully-nonlinear", "preset": "remark-class"},
            "grid": {"dim": 1, "n_per_axis": 32}, "parameters": {"c_q": 0.5, "c_s": 0.5}}
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(data)


def test_config_defaults_and_hash():
    config = ScenarioConfig.from_dict({"scenario": {"name": "lin", "solver": "linear"},
                                       "grid": {"dim": 1, "n_per_axis": 32}})

    assert config.preset == "constant"
    assert config.output_dir == "lin"
    assert config.emit == ["csv", "snapshots"]
    assert config.seed == 0
    assert len(config.config_hash) == 64
    assert config.initial(config.grid()).values[0] == pytest.approx(1.0)


def test_linear_scenario_with_drift(tmp_path):
    data = {"scenario": {"name": "lin", "solver": "linear", "emit": ["csv"]},
            "grid": {"dim": 1, "n_per_axis": 32},
            "stepper": {"t_end": 0.2, "dt": 0.02},
            "coefficients": {"a": 1.0, "b": [0.5], "f": 0.0}}

    assert run_scenario(write_scenario(tmp_path, data), tmp_path / "out") == EXIT_OK
    assert not (tmp_path / "out" / "lin" / "snapshots").exists()
    assert len(list((tmp_path / "out" / "lin" / "fields").glob("*.csv"))) == 11


def test_fully_nonlinear_scenario_records_consistency(tmp_path):
    data = {"scenario": {"name": "reaction", "solver": "fully-nonlinear", "preset": "reaction"},
            "grid": {"dim": 1, "n_per_axis": 32},
            "stepper": {"t_end": 0.1, "dt": 0.01, "snapshot_stride": 5},
            "parameters": {"rate": 1.0}}

    assert run_scenario(write_scenario(tmp_path, data), tmp_path / "out") == EXIT_OK
    directory = tmp_path / "out" / "reaction"
    diagnostics = pd.read_csv(directory / "diagnostics.csv")
    assert "h_residual" in diagnostics.columns
    assert diagnostics["h_residual"].max() < 5e-2
    assert "pde_residual" in pd.read_csv(directory / "consistency.csv").columns


def test_non_convergence_exit_code(tmp_path):
    data = sqg_scenario(picard={"max_iters": 1})

    assert run_scenario(write_scenario(tmp_path, data), tmp_path / "out") == EXIT_DIVERGENCE
    manifest = json.loads((tmp_path / "out" / "sqg-demo" / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["exit_code"] == EXIT_DIVERGENCE
    assert manifest["messages"]


def test_snapshot_initial_data(tmp_path):
    """Test relative snapshot paths and the grid check"""
    grid = Grid(2, 16)
    write_snapshot(tmp_path / "phi.fpde", ScalarField.from_function(grid, lambda x, y: np.sin(x) * np.cos(y)))
    good = sqg_scenario(initial={"kind": "snapshot", "path": "phi.fpde"})
    wrong_grid = sqg_scenario(initial={"kind": "snapshot", "path": "phi.fpde"}, grid={"n_per_axis": 32})

    config = ScenarioConfig.from_file(write_scenario(tmp_path, good))
    assert np.array_equal(config.initial(grid).values, read_snapshot(tmp_path / "phi.fpde").values)
    assert run_scenario(write_scenario(tmp_path, wrong_grid, "wrong.json"), tmp_path / "out") == EXIT_CONFIG


def test_history_lists_runs(tmp_path, scenario_path, capsys):
    root = tmp_path / "out"
    assert history(root) == EXIT_OK
    assert "No hay ejecuciones registradas" in capsys.readouterr().out

    run_scenario(scenario_path, root)
    capsys.readouterr()
    assert history(root, limit=5) == EXIT_OK
    assert "sqg-demo" in capsys.readouterr().out


def test_inspect_snapshot(tmp_path, capsys):
    path = write_snapshot(tmp_path / "u.fpde", ScalarField.from_function(Grid(1, 32), np.cos))

    assert inspect_snapshot(path) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("dim=1 n_per_axis=32 period=6.28318")
    rows = dict(line.split("\t") for line in lines[1:])
    assert float(rows["sup"]) == pytest.approx(1.0)
    assert float(rows["lp_2"]) == pytest.approx(np.sqrt(np.pi))


def test_inspect_rejects_corrupt_file(tmp_path):
    path = tmp_path / "broken.fpde"
    path.write_bytes(b"NOPE")

    assert inspect_snapshot(path) == EXIT_CONFIG
    assert inspect_snapshot(tmp_path / "missing.fpde") == EXIT_CONFIG


def test_bench_with_empty_sizes():
    frame = bench(["multiplier"], [])

    assert frame.empty
    assert list(frame.columns) == ["kernel", "n", "dim", "repeats", "median_seconds"]


def test_bench_rows():
    frame = bench(["multiplier", "step"], [16], dim=1)

    assert frame["kernel"].tolist() == ["multiplier", "step"]
    assert (frame["median_seconds"] > 0).all()
    with pytest.raises(ValueError):
        bench(["multiplier"], [16], repeats=4)


def test_parser_defaults():
    args = build_parser().parse_args(["bench", "--sizes"])

    assert args.sizes == []
    assert args.kernel == "all"
    assert build_parser().parse_args(["verify"]).suite == "all"


def test_main_dispatch(tmp_path, capsys):
    assert main(["verify", "box-1d"]) == EXIT_OK
    assert "box-vanishes" in capsys.readouterr().out
    assert main(["verify", "no-such-suite"]) == EXIT_CONFIG
    assert main(["bench", "--kernel", "multiplier", "--sizes"]) == EXIT_OK
    assert main(["bench", "--sizes", "16", "--repeats", "2"]) == EXIT_CONFIG
    assert main(["history", "--output-root", str(tmp_path)]) == EXIT_OK


@pytest.fixture
def coefficient_files(tmp_path):
    """Elliptic a, drift b and forcing f on the 32-point grid, as FPDE files"""
    grid = Grid(1, 32)
    write_snapshot(tmp_path / "a.fpde", ScalarField.from_function(grid, lambda x: 1.5 + 0.4 * np.sin(x)))
    write_snapshot(tmp_path / "b.fpde", ScalarField.from_function(grid, lambda x: 0.3 * np.cos(x)))
    write_snapshot(tmp_path / "f.fpde", ScalarField.constant(grid, -0.2))
    write_snapshot(tmp_path / "wavy.fpde", ScalarField.from_function(grid, np.sin))
    write_snapshot(tmp_path / "fine.fpde", ScalarField.constant(Grid(1, 64), 1.0))
    return tmp_path


def snapshot_linear_scenario(**coefficients):
    return {"scenario": {"name": "lin-snap", "solver": "linear", "preset": "snapshot", "emit": ["csv"]},
            "grid": {"dim": 1, "n_per_axis": 32},
            "stepper": {"t_end": 0.2, "dt": 0.02},
            "coefficients": {"a_path": "a.fpde", "b_paths": ["b.fpde"], "f_path": "f.fpde", **coefficients}}


def test_snapshot_coefficients_drive_linear_solve(coefficient_files):
    """Test that a, b and f read from snapshots are used with a0 defaulting to min a"""
    path = write_scenario(coefficient_files, snapshot_linear_scenario())
    config = ScenarioConfig.from_file(path)
    coefficients = config.linear_coefficients(config.grid())
    a, b, f = coefficients.evaluate(0.0)

    assert coefficients.a0 == pytest.approx(1.1, rel=1e-3)
    assert np.array_equal(a, read_snapshot(coefficient_files / "a.fpde").values)
    assert b.shape == (1, 32)
    assert np.all(f == -0.2)
    assert run_scenario(path, coefficient_files / "out") == EXIT_OK
    assert (coefficient_files / "out" / "lin-snap" / "manifest.json").exists()


@pytest.mark.parametrize("coefficients", [
    {"a_path": "fine.fpde"},
    {"a_path": "wavy.fpde"},
    {"a0": 1.2},
    {"a1": 1.5},
    {"f_path": "missing.fpde"},
])
def test_rejected_snapshot_coefficients_leave_no_output(coefficient_files, coefficients):
    """Test grid mismatch, non-elliptic a, bounds violations and missing files exit 2 before writing"""
    root = coefficient_files / "out"
    path = write_scenario(coefficient_files, snapshot_linear_scenario(**coefficients))

    assert run_scenario(path, root) == EXIT_CONFIG
    assert not root.exists()


def test_snapshot_coefficient_keys_need_snapshot_preset():
    base = {"scenario": {"name": "lin", "solver": "linear"}, "grid": {"dim": 1, "n_per_axis": 32}}
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({**base, "coefficients": {"a_path": "a.fpde"}})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({**base, "scenario": {"name": "lin", "solver": "linear", "preset": "snapshot"}})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({**base, "scenario": {"name": "lin", "solver": "linear", "preset": "snapshot"},
                                  "coefficients": {"a_path": "a.fpde", "b_paths": ["b.fpde", "b.fpde"]}})


def test_value_error_during_solve_writes_no_manifest(tmp_path, scenario_path, monkeypatch, capsys):
    """Test that a configuration error raised by the solver leaves neither manifest nor history row"""
    import app_cli

    def failing_solve(config, phi):
        raise ValueError("dt incompatible")

    monkeypatch.setattr(app_cli, "solve_scenario", failing_solve)
    root = tmp_path / "out"

    assert run_scenario(scenario_path, root) == EXIT_CONFIG
    assert not (root / "sqg-demo").exists()
    assert history(root) == EXIT_OK
    assert "No hay ejecuciones registradas" in capsys.readouterr().out
