"""Experiment harness: seeding, configs, grid runs, output files, CLI."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from blindphase.admm import AdmmConfig
from blindphase.bench import (ConfigError, ExperimentConfig, make_noise,
                              preset_config, preset_noise_config, run_phase,
                              run_noise_sweep, run_single, trial_seed)
from blindphase.cli import main as cli_main
from blindphase.measure import gen_instance, load_instance


def _tiny_cfg(**overrides):
    base = dict(m_values=[16], kn_pairs=[(1, 1)], trials=2,
                solver=AdmmConfig(max_iter=400))
    base.update(overrides)
    return ExperimentConfig(**base)


# -- seeding and noise ---------------------------------------------------------

def test_trial_seed_is_stable_and_tagged():
    a = trial_seed(0, 64, 2, 2, 0)
    assert a == trial_seed(0, 64, 2, 2, 0)
    assert 0 <= a < 2**63
    others = {trial_seed(0, 64, 2, 2, 1), trial_seed(1, 64, 2, 2, 0),
              trial_seed(0, 64, 2, 2, 0, "init"),
              trial_seed(0, 64, 2, 2, 0, "noise")}
    assert a not in others and len(others) == 4


def test_make_noise_shapes():
    assert np.array_equal(make_noise(5, 0.0, "uniform", 1), np.zeros(5))
    assert np.array_equal(make_noise(4, 0.3, "constant", 1), np.full(4, 0.3))
    xi = make_noise(1000, 0.2, "uniform", 7)
    assert np.max(np.abs(xi)) <= 0.2
    assert np.max(np.abs(xi)) > 0.15  # draws actually span the range


def test_uniform_noise_scales_with_level():
    # the unit draw is shared across levels, so doubling eps doubles xi
    a = make_noise(64, 0.05, "uniform", 3)
    b = make_noise(64, 0.10, "uniform", 3)
    assert np.allclose(b, 2.0 * a, rtol=1e-15)


# -- configuration ----------------------------------------------------------------

def test_config_round_trip():
    cfg = _tiny_cfg(noise_levels=[0.0, 0.1], base_seed=5, threads=2)
    back = ExperimentConfig.from_dict(cfg.to_dict())
    assert back == cfg


def test_config_validation_errors():
    bad_cases = [
        dict(trials=0),
        dict(m_values=[]),
        dict(kn_pairs=[(0, 1)]),
        dict(kn_pairs=[(17, 1)]),          # k > m = 16
        dict(noise_shape="triangular"),
        dict(noise_levels=[-0.1]),
        dict(noise_levels=[1.5]),          # uniform level > 1 can cross y = 0
        dict(threads=0),
        dict(solver=AdmmConfig(rho=-1.0)),
    ]
    for kw in bad_cases:
        with pytest.raises(ConfigError):
            _tiny_cfg(**kw).validate()


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown config keys"):
        ExperimentConfig.from_dict({"m_values": [8], "typo_key": 1})
    with pytest.raises(ConfigError, match="unknown solver keys"):
        ExperimentConfig.from_dict({"solver": {"rho": 1.0, "nope": 2}})


def test_config_from_file_errors(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text("{broken")
    with pytest.raises(ConfigError, match="malformed"):
        ExperimentConfig.from_file(p)
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="object"):
        ExperimentConfig.from_file(p)


def test_presets_validate():
    for name in ("desk", "full"):
        preset_config(name).validate()
        preset_noise_config(name).validate()
    with pytest.raises(ConfigError):
        preset_config("huge")
    with pytest.raises(ConfigError):
        preset_noise_config("huge")


# -- phase portrait -----------------------------------------------------------------

def test_phase_grid_outputs_and_rerun_identity(tmp_path):
    out = tmp_path / "phase"
    cfg = _tiny_cfg(out_dir=str(out))
    cells = run_phase(cfg)
    assert len(cells) == 1
    assert cells[0].trials == 2
    assert cells[0].success_count == 2  # easy cell: k = n = 1, m = 16

    grid = (out / "phase.csv").read_text()
    assert grid.splitlines()[0] == ("m,k,n,trials,successes,mean_err,"
                                    "median_err,mean_iters,wall_ms")
    matrix = (out / "phase_grid.csv").read_text()
    assert matrix.splitlines()[0] == "m,2"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["format"] == "blindphase-manifest"
    assert manifest["kind"] == "phase"
    assert manifest["cells"][0]["trials"][0]["success"] is True
    assert manifest["cells"][0]["trials"][0]["wall_ms"] > 0
    assert (out / "phase.svg").read_text().startswith("<svg")

    # deterministic outputs are byte-identical across reruns
    before = {f: (out / f).read_bytes()
              for f in ("phase.csv", "phase_grid.csv", "phase.svg")}
    run_phase(cfg)
    for f, blob in before.items():
        assert (out / f).read_bytes() == blob, f"{f} changed across reruns"


def test_phase_thread_pool_matches_serial(tmp_path):
    cfg1 = _tiny_cfg(out_dir=str(tmp_path / "serial"))
    cfg2 = _tiny_cfg(out_dir=str(tmp_path / "pool"), threads=2)
    run_phase(cfg1)
    run_phase(cfg2)
    a = (tmp_path / "serial" / "phase.csv").read_bytes()
    b = (tmp_path / "pool" / "phase.csv").read_bytes()
    assert a == b


def test_phase_hopeless_cell_never_succeeds():
    # k = n = m leaves no dimension slack at all; recovery must fail
    cfg = ExperimentConfig(m_values=[8], kn_pairs=[(8, 8)], trials=2,
                           solver=AdmmConfig(max_iter=150))
    cells = run_phase(cfg)
    assert cells[0].success_count == 0


def test_phase_wall_time_column_respects_determinism(tmp_path):
    out = tmp_path / "timed"
    cfg = _tiny_cfg(out_dir=str(out), deterministic=False)
    run_phase(cfg)
    rows = (out / "phase.csv").read_text().splitlines()
    assert float(rows[1].split(",")[-1]) > 0.0


# -- noise sweep ---------------------------------------------------------------------

def test_noise_sweep_rows_and_bounds(tmp_path):
    out = tmp_path / "noise"
    cfg = _tiny_cfg(m_values=[24], kn_pairs=[(2, 2)],
                    noise_levels=[0.0, 0.05], out_dir=str(out))
    rows = run_noise_sweep(cfg)
    assert [r["eps"] for r in rows] == [0.0, 0.05]
    assert all(r["bound_violations"] == 0 for r in rows)
    assert rows[1]["mean_lifted_err"] >= rows[0]["mean_lifted_err"]
    header = (out / "noise.csv").read_text().splitlines()[0]
    assert header == "eps,trials,mean_lifted_err,max_lifted_err,bound_violations"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["kind"] == "noise"
    assert manifest["stability_constant"] == 44.0**2


def test_noise_sweep_rejects_bad_level_order():
    with pytest.raises(ConfigError, match="ascending"):
        run_noise_sweep(_tiny_cfg(noise_levels=[0.1, 0.0]))
    with pytest.raises(ConfigError, match="start at 0"):
        run_noise_sweep(_tiny_cfg(noise_levels=[0.01, 0.1]))


# -- single solve ----------------------------------------------------------------------

def test_run_single_writes_report(tmp_path):
    inst = gen_instance(16, 1, 1, "gaussian-rows", seed=0)
    report = run_single(inst, AdmmConfig(max_iter=400), out_dir=tmp_path)
    assert report.errors.success
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["errors"]["success"] is True
    summary = (tmp_path / "summary.txt").read_text()
    assert "m=16 k=1 n=1" in summary and "converged: True" in summary


def test_saved_instance_solves_identically(tmp_path):
    inst = gen_instance(16, 1, 1, "gaussian-rows", seed=1)
    path = tmp_path / "inst.json"
    from blindphase.measure import save_instance
    save_instance(inst, path)
    direct = run_single(inst, AdmmConfig(max_iter=400))
    loaded = run_single(load_instance(path), AdmmConfig(max_iter=400))
    assert direct.objective == loaded.objective
    assert np.array_equal(direct.h_hat, loaded.h_hat)


# -- command line -----------------------------------------------------------------------

def test_cli_gen_and_solve(tmp_path):
    inst_path = tmp_path / "inst.json"
    assert cli_main(["gen", "--m", "16", "--k", "1", "--n", "1",
                     "--seed", "3", "--out", str(inst_path)]) == 0
    assert inst_path.exists()
    out = tmp_path / "run"
    assert cli_main(["solve", "--instance", str(inst_path),
                     "--max-iter", "400", "--out", str(out)]) == 0
    assert (out / "report.json").exists()
    assert (out / "summary.txt").exists()


def test_cli_solve_generates_when_no_instance(tmp_path):
    out = tmp_path / "run"
    rc = cli_main(["solve", "--m", "16", "--k", "1", "--n", "1",
                   "--max-iter", "400", "--out", str(out)])
    assert rc == 0 and (out / "report.json").exists()


def test_cli_phase_and_noise_with_config(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "m_values": [16], "kn_pairs": [[1, 1]], "trials": 2,
        "noise_levels": [0.0, 0.05],
        "solver": {"max_iter": 400},
    }))
    out1 = tmp_path / "phase"
    assert cli_main(["phase", "--config", str(cfg_path),
                     "--out", str(out1)]) == 0
    assert (out1 / "phase.csv").exists()
    out2 = tmp_path / "noise"
    assert cli_main(["noise-sweep", "--config", str(cfg_path),
                     "--out", str(out2)]) == 0
    assert (out2 / "noise.csv").exists()


def test_cli_error_exit_codes(tmp_path, capsys):
    # invalid dims surface as exit 2, not a traceback
    assert cli_main(["gen", "--m", "4", "--k", "9", "--n", "1",
                     "--out", str(tmp_path / "x.json")]) == 2
    assert "error:" in capsys.readouterr().err
    bad_cfg = tmp_path / "bad.json"
    bad_cfg.write_text("{oops")
    assert cli_main(["phase", "--config", str(bad_cfg),
                     "--out", str(tmp_path / "o")]) == 2
    assert cli_main(["solve", "--m", "16", "--k", "1"]) == 2  # missing --n


def test_cli_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "blindphase.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "phase" in proc.stdout and "noise-sweep" in proc.stdout
