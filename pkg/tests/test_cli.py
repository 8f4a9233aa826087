import json

import numpy as np

from weylflow import bloch
from weylflow.cli import main
from weylflow._io import read_csv


def write_config(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def run_cli(args):
    return main([str(a) for a in args])


POLAR_BLOCH = {"pair": {"kind": "polar", "n": 2},
               "drift": {"kind": "bloch", "Gamma": 3.0, "gamma": 1.0}}


def test_bloch_csv_contains_branch_time_row(tmp_path):
    cfg = write_config(tmp_path, "cfg.json",
                       {"Gamma": 3.0, "T": 1.0, "dt": 1e-3})
    out = tmp_path / "out"
    assert run_cli(["bloch", "--config", cfg, "--out", out]) == 0
    header, data = read_csv(out / "bloch.csv")
    assert header == ["t", "a_star", "phi_star", "omega0", "omega_c"]
    t0 = bloch.BlochParams(3.0).t0
    row = data[np.isclose(data[:, 0], t0, atol=1e-15)]
    assert row.shape[0] == 1
    assert abs(row[0, 1] - (-0.25)) < 1e-9


def test_bloch_byte_determinism(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", {"Gamma": 3.0, "T": 0.5, "dt": 1e-2})
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert run_cli(["bloch", "--config", cfg, "--out", out1]) == 0
    assert run_cli(["bloch", "--config", cfg, "--out", out2]) == 0
    assert (out1 / "bloch.csv").read_bytes() == (out2 / "bloch.csv").read_bytes()


def test_majorize_json(tmp_path):
    cfg = write_config(tmp_path, "m.json",
                       {"pair": {"kind": "hermitian_evd", "n": 3},
                        "a": [1.0, 0.0, -1.0], "b": [0.5, 0.0, -0.5]})
    out = tmp_path / "out"
    assert run_cli(["majorize", "--config", cfg, "--out", out]) == 0
    data = json.loads((out / "majorize.json").read_text())
    assert data["majorizes"] is True
    assert data["lp_slack"] >= -1e-9
    cfg2 = write_config(tmp_path, "m2.json",
                        {"pair": {"kind": "hermitian_evd", "n": 2},
                         "a": [1.0, -1.0], "b": [2.0, -2.0]})
    assert run_cli(["majorize", "--config", cfg2, "--out", out]) == 0
    assert json.loads((out / "majorize.json").read_text())["majorizes"] is False


def test_simulate_full_t0_single_row(tmp_path):
    cfg = write_config(tmp_path, "f.json", {
        "pair": {"kind": "hermitian_evd", "n": 2},
        "drift": {"kind": "affine",
                  "matrix": list(np.ravel(-np.eye(3))),
                  "offset": [0.0, 0.0, 0.0]},
        "p0": [1.0, 0.3, -0.2], "T": 0.0, "dt": 0.01})
    out = tmp_path / "out"
    assert run_cli(["simulate-full", "--config", cfg, "--out", out]) == 0
    header, data = read_csv(out / "simulate-full.csv")
    assert data.shape == (1, 4)
    assert np.allclose(data[0, 1:], [1.0, 0.3, -0.2])


def test_simulate_reduced_project_lift_roundtrip(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path, "r.json", {
        **POLAR_BLOCH, "a0": [-0.8], "T": 1.0, "dt": 1e-3,
        "schedule": {"kind": "constant"}})
    assert run_cli(["simulate-reduced", "--config", cfg, "--out", out]) == 0
    header, data = read_csv(out / "simulate-reduced.csv")
    assert header[:2] == ["t", "x1"] and "ctrl1" in header
    # constant identity schedule: radial relaxation along the flat axis
    ref = 1.0 - (1.0 + 0.8) * np.exp(-data[:, 0])
    assert np.abs(data[:, 1] - ref).max() < 1e-8

    lift_cfg = write_config(tmp_path, "l.json", {
        **POLAR_BLOCH, "input": str(out / "simulate-reduced.csv")})
    assert run_cli(["lift", "--config", lift_cfg, "--out", out]) == 0
    summary = json.loads((out / "lift.json").read_text())
    assert summary["deviation"] < 1e-4
    assert summary["excised_measure"] == 0.0

    # project the lifted ambient path back to the chamber
    header, lift_rows = read_csv(out / "lift.csv")
    full_csv = out / "ambient.csv"
    d = 2
    with open(full_csv, "w") as fh:
        fh.write("t,x1,x2\n")
        for row in lift_rows:
            fh.write(",".join(format(v, ".17g") for v in row[:3]) + "\n")
    proj_cfg = write_config(tmp_path, "p.json", {
        "pair": {"kind": "polar", "n": 2}, "input": str(full_csv)})
    assert run_cli(["project", "--config", proj_cfg, "--out", out]) == 0
    _, proj = read_csv(out / "project.csv")
    assert np.abs(proj[:, 1] - np.abs(data[:, 1])).max() < 1e-9


def test_reach_artifacts(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path, "reach.json", {
        **POLAR_BLOCH, "a0": [-1.0], "T": 1.0, "dt": 5e-3,
        "n_traj": 8, "angle_grid": 256, "seed": 3})
    assert run_cli(["reach", "--config", cfg, "--out", out]) == 0
    _, pts = read_csv(out / "reach.csv")
    assert pts.shape == (8, 1)
    summary = json.loads((out / "reach.json").read_text())
    assert summary["min"][0] >= -1.0 - 1e-9
    assert summary["max"][0] <= 1.0 + 1e-9


def test_envelope_artifact(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path, "env.json", {"Gamma": 3.0, "n_grid": 101})
    assert run_cli(["envelope", "--config", cfg, "--out", out]) == 0
    _, data = read_csv(out / "envelope.csv")
    assert data.shape == (101, 3)
    i = np.argmin(np.abs(data[:, 0] + 1.0))
    assert abs(data[i, 1] - 25.0 / 8.0) < 1e-12


def test_simulate_dominating_artifacts(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path, "dom.json", {
        "pair": {"kind": "hermitian_evd", "n": 2},
        "drift": {"kind": "affine",
                  "matrix": list(np.ravel(-0.5 * np.eye(3))),
                  "offset": [0.0, 0.0, 0.0]},
        "a0": [0.5, -0.5], "b0": [1.0, -1.0], "T": 0.3, "dt": 5e-3,
        "schedule": {"kind": "random", "n_pieces": 2}, "seed": 9})
    assert run_cli(["simulate-dominating", "--config", cfg, "--out", out]) == 0
    summary = json.loads((out / "simulate-dominating.json").read_text())
    assert summary["ok"] is True and summary["min_slack"] >= -1e-6


def test_plot_flag_writes_figures(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path, "cfg.json", {"Gamma": 3.0, "T": 0.5, "dt": 1e-2})
    assert run_cli(["bloch", "--config", cfg, "--out", out, "--plot"]) == 0
    assert (out / "bloch.png").exists()
    env = write_config(tmp_path, "env.json", {"Gamma": 3.0, "n_grid": 51})
    assert run_cli(["envelope", "--config", env, "--out", out, "--plot"]) == 0
    assert (out / "envelope.png").exists()


def test_exit_code_2_on_bad_config(tmp_path):
    assert run_cli(["bloch", "--config", tmp_path / "missing.json"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli(["bloch", "--config", bad]) == 2
    incomplete = write_config(tmp_path, "inc.json", {"pair": {"kind": "polar", "n": 2}})
    assert run_cli(["simulate-reduced", "--config", incomplete]) == 2
    badpair = write_config(tmp_path, "bp.json",
                           {"pair": {"kind": "nope"}, "drift": {"kind": "bloch",
                            "Gamma": 3.0}, "a0": [0.1], "T": 1.0})
    assert run_cli(["simulate-reduced", "--config", badpair]) == 2


def test_exit_code_3_on_divergence(tmp_path):
    cfg = write_config(tmp_path, "div.json", {
        "pair": {"kind": "polar", "n": 2},
        "drift": {"kind": "affine", "matrix": [5.0, 0.0, 0.0, 5.0],
                  "offset": [0.0, 0.0]},
        "p0": [1.0, 0.0], "T": 10.0, "dt": 0.01})
    assert run_cli(["simulate-full", "--config", cfg,
                    "--out", tmp_path / "out"]) == 3


def test_seed_and_dt_overrides(tmp_path):
    out1, out2, out3 = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    cfg = write_config(tmp_path, "reach.json", {
        **POLAR_BLOCH, "a0": [0.0], "T": 0.2, "dt": 1e-2,
        "n_traj": 4, "angle_grid": 64, "seed": 1})
    run_cli(["reach", "--config", cfg, "--out", out1])
    run_cli(["reach", "--config", cfg, "--out", out2, "--seed", 2])
    run_cli(["reach", "--config", cfg, "--out", out3])
    b1 = (out1 / "reach.csv").read_bytes()
    assert b1 != (out2 / "reach.csv").read_bytes()
    assert b1 == (out3 / "reach.csv").read_bytes()
