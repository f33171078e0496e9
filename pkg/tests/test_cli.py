import json
from dataclasses import replace

import pytest

import config
from cli.export import OutputWriter
from cli.run_config import RunConfig, apply_scale, nearest_even, validate, validate_file
from cli.runner import run
from errors import AcceptanceFailure, ConfigError, ModelError, TruncationError
from fock.histogram import CountHistogram
from main import main


def write_config(tmp_path, **values):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(values), encoding="utf-8")
    return str(path)


def test_config_round_trip(tmp_path):
    run_config = RunConfig(mode="trajectories", n1=120, n2=110, W=0.5, nu=5, seed=9)
    path = tmp_path / "saved.json"
    run_config.dump(path)
    assert RunConfig.load(path) == run_config


@pytest.mark.parametrize("data", [{"bogus": 1}, {"n1": "ten"}, {"n1": 10.5}, {"sigma": "wide"}, {"mode": 3},
                                  {"workers": True}, [1, 2]])
def test_malformed_config_is_rejected(data):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(data)


def test_integral_floats_are_accepted():
    run_config = RunConfig.from_dict({"n1": 100.0, "sigma": 1, "t": 0.2})
    assert run_config.n1 == 100 and isinstance(run_config.n1, int)
    assert run_config.sigma == 1.0 and isinstance(run_config.sigma, float)


def test_missing_and_broken_files(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "absent.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        RunConfig.load(broken)


def test_detecting_half_the_atoms_fails_validation():
    report = validate(RunConfig(mode="trajectories", n1=1000, n2=1000, nu=500))
    assert not report.ok
    assert any("UndepletedAssumptionViolated" in p for p in report.problems)


def test_large_outcoupled_fraction_fails_validation():
    report = validate(RunConfig(mode="coherent", n1=1000, n2=1000, mean_n0=200.0))
    assert any("UndepletedAssumptionViolated" in p for p in report.problems)


def test_interference_defaults_validate(tmp_path):
    path = write_config(tmp_path, mode="interference", n1=1000, n2=1000, nu=26, sigma=1.0,
                        initial_number_model="poissonian", mean1=1000, mean2=1000)
    report = validate_file(path)
    assert report.ok
    assert report.render() == "configuration OK"


def test_validation_reports_every_problem():
    report = validate(RunConfig(mode="interference", workers=0, phi_grid_size=7, sigma=-1.0, target_cosphi=2.0,
                                t=0.1, mean_n0=3.0))
    assert len(report.problems) >= 5
    assert all(line.startswith("- ") for line in report.render().splitlines())


def test_desk_scale_profile():
    coherent = apply_scale(RunConfig(mode="coherent"), "desk")
    assert (coherent.n1, coherent.n2) == (100, 100)
    assert coherent.mean_n0 == pytest.approx(config.DEFAULT_MEAN_N0 * 0.1)
    assert coherent.t is None
    assert apply_scale(RunConfig(mode="trajectories", nu=30), "desk").nu == 3
    assert apply_scale(RunConfig(mode="interference"), "desk").nu == 2


def test_full_scale_profile():
    full = apply_scale(RunConfig(mode="interference", n1=10, n2=10, nu=1), "full")
    assert (full.n1, full.n2, full.nu) == (1000, 1000, config.DEFAULT_NU_INTERFERENCE)
    assert full.initial_means == (1000.0, 1000.0)
    custom = RunConfig(n1=7)
    assert apply_scale(custom, "custom") is custom
    with pytest.raises(ConfigError):
        apply_scale(custom, "huge")


@pytest.mark.parametrize("value, expected", [(2.6, 2), (3.0, 4), (0.4, 2), (26.0, 26), (27.2, 28)])
def test_nearest_even(value, expected):
    assert nearest_even(value) == expected


def test_writer_headers_carry_provenance(out_dir):
    writer = OutputWriter(str(out_dir), {"seed": 5, "mode": "coherent"})
    histogram = CountHistogram.from_weights([0, 1, 2], [1.0, 2.0, 1.0], label="n0")
    path = writer.write_histogram("hist.csv", histogram)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# config: ")
    assert lines[1] == "# seed: 5"
    assert lines[2] == "# n0,probability"
    assert lines[3] == "0,0.25"
    assert writer.written == [path]


def test_writer_json_format(out_dir):
    writer = OutputWriter(str(out_dir), {"seed": 5}, output_format="json")
    path = writer.write_table("table.csv", ["a", "b"], [[1.0, 2.0], [3.0, 4.0]])
    assert path.suffix == ".json"
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["columns"] == {"a": [1.0, 3.0], "b": [2.0, 4.0]}
    assert payload["seed"] == 5
    with pytest.raises(ValueError):
        writer.write_table("bad.csv", ["a"], [[1.0, 2.0]])


def test_coherent_run_reports_mean_and_fano(out_dir):
    summary = run(RunConfig(mode="coherent", output_dir=str(out_dir)))
    assert summary.metrics["mean"] == pytest.approx(30.0, rel=1e-6)
    assert summary.metrics["fano"] > 10
    assert summary.metrics["phase_peaks_resolved"]
    assert summary.line.startswith("mode=coherent N1=1000 N2=1000 mean=30 ")
    assert (out_dir / config.N0_DISTRIBUTION_FILE).exists()
    assert (out_dir / config.PHASE_DISTRIBUTION_FILE).exists()


def test_trajectory_run_writes_records(out_dir):
    summary = run(RunConfig(mode="trajectories", n1=100, n2=100, nu=3, ensemble_size=6, seed=3,
                            output_dir=str(out_dir)))
    lines = (out_dir / config.TRAJECTORIES_FILE).read_text(encoding="utf-8").splitlines()
    header = json.loads(lines[0])
    assert header["seed"] == 3 and header["config"]["mode"] == "trajectories"
    records = [json.loads(line) for line in lines[1:]]
    indices = [r["index"] for r in records]
    assert indices == sorted(indices)
    assert all(len(r["taus"]) == 3 for r in records)
    assert summary.metrics["records"] == len(records)
    assert summary.metrics["records"] + summary.metrics["stalled"] == 6
    assert (out_dir / config.TAU_VS_COSPHI_FILE).exists()
    assert (out_dir / config.COSPHI_HISTORIES_FILE).exists()


def test_interference_run_with_fixed_numbers(out_dir):
    summary = run(RunConfig(mode="interference", n1=100, n2=100, nu=2, sigma=0.0, initial_number_model="fixed",
                            output_dir=str(out_dir)))
    assert summary.metrics["peak_spacing"] == 4
    report = json.loads((out_dir / config.FRINGE_REPORT_FILE).read_text(encoding="utf-8"))
    assert report["centered"]["peak_spacing"] == 4
    assert report["map_initial"] == list(range(config.MAP_DELTA_N_RANGE[0], config.MAP_DELTA_N_RANGE[1] + 1))
    header = (out_dir / config.INITIAL_FINAL_MAP_FILE).read_text(encoding="utf-8").splitlines()[2]
    assert header.startswith("# initial_delta_n,")


def test_runner_refuses_invalid_config(out_dir):
    with pytest.raises(ConfigError):
        run(RunConfig(mode="trajectories", nu=500, output_dir=str(out_dir)))


def test_model_errors_propagate(out_dir):
    with pytest.raises(TruncationError):
        run(RunConfig(mode="coherent", n0_max=31, output_dir=str(out_dir)))


def test_main_collapse_demo_is_deterministic(tmp_path, capsys):
    out = tmp_path / "demo"
    assert main(["--mode", "collapse-demo", "--out", str(out), "--seed", "4"]) == 0
    first = (out / config.COLLAPSE_DEMO_FILE).read_bytes()
    assert main(["--mode", "collapse-demo", "--out", str(out), "--seed", "4"]) == 0
    assert (out / config.COLLAPSE_DEMO_FILE).read_bytes() == first
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("mode=collapse-demo roots=2 resolved=True")
    assert lines[0] == lines[1]


def test_main_validate_exit_codes(tmp_path, capsys):
    good = write_config(tmp_path, mode="interference", nu=26, sigma=1.0, mean1=1000, mean2=1000)
    assert main(["validate", "--config", good]) == 0
    assert "configuration OK" in capsys.readouterr().out
    bad = write_config(tmp_path, mode="trajectories", nu=500)
    assert main(["validate", "--config", bad]) == ConfigError.exit_code
    assert "UndepletedAssumptionViolated" in capsys.readouterr().out


def test_main_maps_errors_to_exit_codes(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "missing.json")]) == 2
    assert "error category=config" in capsys.readouterr().err
    path = write_config(tmp_path, mode="coherent", n0_max=31, output_dir=str(tmp_path / "out"))
    assert main(["--config", path]) == ModelError.exit_code
    assert "error category=truncation" in capsys.readouterr().err


def test_command_line_overrides(tmp_path, capsys):
    path = write_config(tmp_path, mode="coherent", seed=1)
    assert main(["--config", path, "--desk-scale", "--out", str(tmp_path / "desk")]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("mode=coherent N1=100 N2=100 mean=3 ")
    provenance = (tmp_path / "desk" / config.N0_DISTRIBUTION_FILE).read_text(encoding="utf-8").splitlines()
    assert '"scale": "desk"' in provenance[0]


def test_exit_codes_are_distinct():
    assert (ConfigError.exit_code, ModelError.exit_code, AcceptanceFailure.exit_code) == (2, 3, 4)


@pytest.mark.slow
def test_oracle_check_passes(out_dir):
    summary = run(replace(RunConfig(mode="oracle-check"), output_dir=str(out_dir)))
    report = json.loads((out_dir / config.ORACLE_REPORT_FILE).read_text(encoding="utf-8"))
    assert all(check["passed"] for check in report["checks"])
    assert summary.metrics["checks"] == len(report["checks"])
