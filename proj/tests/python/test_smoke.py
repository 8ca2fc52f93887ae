import json
import math

import numpy as np
import pytest

import otlab


def small_config(**overrides):
    cfg = otlab.default_config()
    cfg["grid"]["points"] = 9
    cfg.update(overrides)
    return cfg


def test_version_and_k_ranges():
    assert otlab.__version__ == "0.1.0"
    k0, k1 = otlab.k_admissible_ranges(1.0, 1.0, 3)
    assert k0 == pytest.approx(4 - 2 * math.sqrt(3), abs=1e-12)
    assert k1 == pytest.approx(4 + 2 * math.sqrt(3), abs=1e-12)
    with pytest.raises(otlab.DomainError):
        otlab.k_admissible_ranges(1.0, 1.0, 2)


def test_diffusion_tensor_isotropic():
    K = otlab.diffusion_tensor(1.0, 1.0, k=1.0)
    assert K.shape == (3, 3)
    assert K[0, 0] == pytest.approx(1 / (3 * (2 - 1j)))
    assert abs(K[0, 1]) == 0.0


def test_gegenbauer_and_bracket():
    assert otlab.gegenbauer(2, 3, 0.5) == pytest.approx(1.5 * 0.25 - 0.5)
    assert otlab.gegenbauer(3, 4, 1.0) == pytest.approx(4.0)
    assert otlab.gradient_bracket_min(3, 3) > 0
    assert otlab.delta_h(0.5, 1) == pytest.approx(1 / 3)


def test_leading_term_matches_fundamental_solution_decay():
    z = np.array([0.0, 0.0, 0.0])
    a = otlab.leading_term(0, z, np.array([0.1, 0.0, 0.0]))
    b = otlab.leading_term(0, z, np.array([0.2, 0.0, 0.0]))
    assert abs(a / b) == pytest.approx(2.0)


def test_config_validation_pointer():
    cfg = small_config()
    del cfg["apriori"]["lambda"]
    with pytest.raises(otlab.ValidationError, match="/apriori/lambda"):
        otlab.Config(cfg)


def test_solve_and_dn():
    cfg = otlab.Config(small_config())
    assert len(cfg.fingerprint) == 16
    assert cfg.check()["admissible"]
    u = cfg.solve()
    assert u.shape == (9, 9, 9) and u.dtype == np.complex128
    # Dirichlet data exp(x+y) + i cos(z) on the boundary face x = 0.
    y = np.linspace(0, 1, 9)
    assert np.allclose(u[0, :, 0], np.exp(y) + 1j)
    L = cfg.dn()
    assert np.abs(L - L.T).max() < 1e-9 * np.abs(L).max()
    assert cfg.star_norm(np.zeros_like(L)) == 0.0
    other = otlab.Config(small_config(medium={"mu_a": "1.05", "mu_s": "1.1"}))
    delta = L - other.dn()
    assert cfg.star_norm(delta) == pytest.approx(cfg.star_norm(delta, dense=True), rel=1e-6)


def test_run_cli(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(small_config()))
    assert otlab.run_cli(["-c", str(path), "--out", str(tmp_path / "out"), "check"]) == 0
    report = json.loads((tmp_path / "out" / "check.json").read_text())
    assert report["admissibility"]["ok"]
    assert otlab.run_cli(["--bogus"]) == 2
