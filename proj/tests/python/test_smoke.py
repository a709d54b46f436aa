import json
import math

import numpy as np
import pytest

import antiplane as ap


def test_ball_and_hexagon_sizes():
    assert ap.build_ball(2.0).num_sites == 12
    assert ap.build_ball(10.0).num_sites == 354
    assert ap.build_hexagon(5).num_sites == 75
    with pytest.raises(ValueError):
        ap.build_ball(1.0)


def test_potential_values():
    psi = ap.psi_cos(1.0)
    assert psi(0.5) == pytest.approx(1.0 / (2.0 * math.pi**2), rel=1e-14)
    assert ap.psi_lin(2.0)(0.25) == pytest.approx(0.0625)


def test_hat_y_has_one_core():
    w = ap.build_ball(12.0)
    y = ap.hat_y_on(w)
    assert ap.detect_cores(w, y) == [(0, -1, "down", 1)]
    assert ap.hat_y(0.0, 1.0) == pytest.approx(0.25)


def test_gradient_matches_differences():
    w = ap.build_ball(4.0)
    psi = ap.psi_cos(1.0)
    rng = np.random.default_rng(0)
    y = rng.uniform(-0.5, 0.5, w.num_sites)
    g = ap.gradient(w, psi, y)
    h = 1e-6
    e = np.zeros(w.num_sites)
    e[5] = h
    fd = (ap.energy(w, psi, y + e) - ap.energy(w, psi, y - e)) / (2 * h)
    assert fd == pytest.approx(g[5], rel=1e-6)


def test_homogeneous_eigenvalue_is_kappa():
    w = ap.build_ball(8.0)
    assert ap.min_eigenvalue(w, ap.psi_cos(2.0), np.zeros(w.num_sites)) == pytest.approx(2.0, rel=1e-7)


def test_core_corrector_and_equilibrium():
    core = ap.compute_core_corrector(24.0)
    assert 0.05 < core.lambda_d < 0.2
    assert core.decay_exponent < -1.0
    w = ap.build_ball(40.0)
    out = ap.equilibrate(w, [(0, -1, "down", 1)], core)
    assert out["residual_final"] < 1e-8
    assert out["lambda_min"] > 0.0
    assert out["cores"] == [(0, -1, "down", 1)]
    assert out["y"].shape == (w.num_sites,)


def test_manifest_aliases_round_trip():
    text = json.dumps({"psi": {"kind": "cos", "kappa": 1.5}, "domain": {"kind": "hexagon", "hexagon": 12}})
    canon = ap.parse_manifest(text)
    assert json.loads(canon)["potential"]["parameter"] == 1.5
    assert ap.parse_manifest(canon) == canon


def test_cli_exit_codes(tmp_path):
    code, _, err = ap.run_cli(["stab-check"])
    assert code == 1
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"domain": {"kind": "ball", "radius": 20.0}, "output": {"dir": str(tmp_path)}}))
    code, _, err = ap.run_cli(["stab-check", "--manifest", str(manifest)])
    assert code == 0, err
    assert (tmp_path / "report.json").exists()
