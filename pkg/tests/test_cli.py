import csv
import json
import math

import numpy as np
import pytest

from kposim.cli import main

TWO_PI = 2 * math.pi

SET_A = {"chi_mhz": 3.0, "beta_mhz": 3.0, "kappa_mhz": 3.0}


def write_config(tmp_path, name="config.json", **overrides):
    cfg = dict(SET_A)
    cfg.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_alpha_command(tmp_path, capsys):
    cfg = write_config(tmp_path, output_dir=str(tmp_path / "out"))
    assert main(["alpha", "--config", str(cfg)]) == 0
    payload = json.loads((tmp_path / "out" / "alpha.json").read_text())
    assert payload["alpha_re"] == pytest.approx(1.38, abs=0.01)
    assert payload["alpha_im"] == pytest.approx(-0.18, abs=0.01)
    meta = json.loads((tmp_path / "out" / "alpha.meta.json").read_text())
    assert meta["tool"] == "kposim"
    assert meta["config"]["chi_mhz"] == 3.0
    assert "version" in meta


def test_alpha_set_b(tmp_path):
    cfg = write_config(tmp_path, beta_mhz=1.5, output_dir=str(tmp_path))
    assert main(["alpha", "--config", str(cfg)]) == 0
    payload = json.loads((tmp_path / "alpha.json").read_text())
    assert payload["alpha_re"] == pytest.approx(0.90, abs=0.01)
    assert payload["alpha_im"] == pytest.approx(-0.24, abs=0.01)


def test_alpha_lossless_phase(tmp_path):
    cfg = write_config(tmp_path, kappa_mhz=0.0, output_dir=str(tmp_path))
    assert main(["alpha", "--config", str(cfg)]) == 0
    payload = json.loads((tmp_path / "alpha.json").read_text())
    assert payload["arg"] == 0.0


def test_trajectory_csv_contract(tmp_path):
    out = tmp_path / "run"
    cfg = write_config(tmp_path, fock_dim=14, t_end_us=2.0, tau_us=1e-3,
                       ta_list_us=[0.1, 0.5], seed=42, output_dir=str(out))
    assert main(["trajectory", "--config", str(cfg)]) == 0
    header, rows = read_csv(out / "trajectory.csv")
    assert header == ["t_us", "f_plus", "f_minus", "dN",
                      "nbar_0.1", "nbar_0.5",
                      "est_sign_0.1", "est_sign_0.5",
                      "est_fid_0.1", "est_fid_0.5"]
    assert len(rows) == 2000  # t_end / tau
    assert float(rows[0][0]) == 0.0
    assert rows[50][4] == "nan"          # window not yet full
    assert float(rows[150][4]) == float(rows[150][4])  # parses as a number
    fp = np.array([float(r[1]) for r in rows])
    fm = np.array([float(r[2]) for r in rows])
    assert np.all((fp >= 0) & (fp <= 1) & (fm >= 0) & (fm <= 1))


def test_trajectory_rerun_is_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    base = dict(fock_dim=14, t_end_us=1.0, tau_us=1e-3, ta_list_us=[0.1], seed=9)
    cfg1 = write_config(tmp_path, name="c1.json", output_dir=str(out1), **base)
    cfg2 = write_config(tmp_path, name="c2.json", output_dir=str(out2), **base)
    assert main(["trajectory", "--config", str(cfg1)]) == 0
    assert main(["trajectory", "--config", str(cfg2)]) == 0
    assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()


def test_trajectory_seed_override_changes_data(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    base = dict(fock_dim=14, t_end_us=1.0, tau_us=1e-3, ta_list_us=[0.1], seed=9)
    cfg1 = write_config(tmp_path, name="c1.json", output_dir=str(out1), **base)
    cfg2 = write_config(tmp_path, name="c2.json", output_dir=str(out2), **base)
    assert main(["trajectory", "--config", str(cfg1)]) == 0
    assert main(["trajectory", "--config", str(cfg2), "--seed", "10"]) == 0
    assert (out1 / "trajectory.csv").read_bytes() != (out2 / "trajectory.csv").read_bytes()
    meta = json.loads((out2 / "trajectory.meta.json").read_text())
    assert meta["seed"] == 10


def test_trajectory_peak_fidelity_desk_scale(tmp_path):
    # desk-scale rerun of the success peak on one 50 us record
    out = tmp_path / "out"
    cfg = write_config(tmp_path, fock_dim=14, t_end_us=50.0, tau_us=1e-3,
                       ta_list_us=[0.1], seed=20260808, output_dir=str(out))
    assert main(["trajectory", "--config", str(cfg)]) == 0
    header, rows = read_csv(out / "trajectory.csv")
    col = header.index("est_fid_0.1")
    vals = np.array([float(r[col]) for r in rows])
    scored = vals[~np.isnan(vals)]
    assert scored.mean() > 0.97


def test_sweep_ta_command(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path, fock_dim=14, t_end_us=10.0, tau_us=1e-3,
                       ta_list_us=[0.02, 0.1], ensemble=2, seed=3,
                       me_t_end_us=12.0, output_dir=str(out))
    assert main(["sweep", "--config", str(cfg), "--axis", "ta"]) == 0
    header, rows = read_csv(out / "sweep_ta.csv")
    assert header == ["axis_value", "success_mean", "success_stderr",
                      "t_lower_analytic", "t_upper_analytic"]
    assert len(rows) == 2
    t_lower = float(rows[0][3])
    t_upper = float(rows[0][4])
    assert t_lower == pytest.approx(1.86e-2, rel=0.015)
    assert t_upper == pytest.approx(7.52e-1, rel=0.15)
    for r in rows:
        assert 0.0 <= float(r[1]) <= 1.0


def test_sweep_eta_command(tmp_path):
    # eta changes the physics, so each value is re-simulated; more detected
    # photons must help at a fixed short averaging time
    out = tmp_path / "out"
    cfg = write_config(tmp_path, fock_dim=14, t_end_us=8.0, tau_us=2e-4,
                       ta_list_us=[1.86e-2], ensemble=2, seed=5,
                       sweep_values=[1.0, 0.1], me_t_end_us=12.0,
                       output_dir=str(out))
    assert main(["sweep", "--config", str(cfg), "--axis", "eta"]) == 0
    header, rows = read_csv(out / "sweep_eta.csv")
    by_eta = {float(r[0]): float(r[1]) for r in rows}
    assert by_eta[1.0] > by_eta[0.1]
    # lower bound scales exactly as 1/eta
    tl = {float(r[0]): float(r[3]) for r in rows}
    assert tl[0.1] == pytest.approx(10 * tl[1.0], rel=1e-9)


def test_sweep_rejects_degenerate_ensemble(tmp_path):
    cfg = write_config(tmp_path, ensemble=0, output_dir=str(tmp_path))
    assert main(["sweep", "--config", str(cfg), "--axis", "ta"]) == 2


def test_fit_omega_command(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path, fock_dim=20, me_t_end_us=12.0, output_dir=str(out))
    assert main(["fit-omega", "--config", str(cfg)]) == 0
    payload = json.loads((out / "omega.json").read_text())
    assert payload["omega_over_2pi_khz"] == pytest.approx(20.0, rel=0.15)
    assert payload["t_upper_us"] == pytest.approx(0.752, rel=0.10)
    assert payload["e_t_i_us"] == pytest.approx(1.0 / payload["omega_rad_per_us"])
    assert payload["fit_rms"] < 0.05


def test_bounds_command(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path, fock_dim=20, me_t_end_us=12.0, k_target=0.95,
                       output_dir=str(out))
    assert main(["bounds", "--config", str(cfg)]) == 0
    payload = json.loads((out / "bounds.json").read_text())
    assert payload["t_lower_us"] == pytest.approx(1.86e-2, rel=0.015)
    assert payload["t_upper_us"] == pytest.approx(7.52e-1, rel=0.10)
    assert payload["e_t_i_us"] * payload["omega_rad_per_us"] == pytest.approx(1.0)


def test_exit_code_domain_error(tmp_path):
    # no real stationary amplitude: 4 beta^2 < kappa^2/4
    cfg = write_config(tmp_path, beta_mhz=0.1, kappa_mhz=3.0, output_dir=str(tmp_path))
    assert main(["alpha", "--config", str(cfg)]) == 2


def test_exit_code_unknown_key(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(dict(SET_A, bogus=1)))
    assert main(["alpha", "--config", str(path)]) == 2


def test_exit_code_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["alpha", "--config", str(path)]) == 2


def test_exit_code_missing_file(tmp_path):
    assert main(["alpha", "--config", str(tmp_path / "absent.json")]) == 3


def test_exit_code_fit_failure(tmp_path):
    # a horizon too short for ten fit samples must exit 4, not crash
    cfg = write_config(tmp_path, fock_dim=14, me_t_end_us=0.002, me_dt_us=None,
                       output_dir=str(tmp_path))
    assert main(["fit-omega", "--config", str(cfg)]) == 4


def test_unit_roundtrip_via_meta(tmp_path):
    cfg = write_config(tmp_path, output_dir=str(tmp_path))
    assert main(["alpha", "--config", str(cfg)]) == 0
    meta = json.loads((tmp_path / "alpha.meta.json").read_text())
    from kposim.cli import RunConfig
    rc = RunConfig(**{k: v for k, v in meta["config"].items()})
    assert rc.params().chi / TWO_PI == pytest.approx(3.0, rel=1e-12)
