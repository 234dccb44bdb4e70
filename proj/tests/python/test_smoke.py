import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

import gradflow

CONFIGS = Path(os.environ.get("GRADFLOW_SOURCE_DIR", Path(__file__).resolve().parents[2])) / "configs"


def quadratic_config(**overrides):
    cfg = {
        "carrier": "euclidean",
        "functional": {"name": "quadratic", "A": [[1, 0], [0, 2]], "b": [0, 0]},
        "initial": {"type": "vector", "coords": [1, 1]},
        "tau": 0.1,
        "T": 1.0,
    }
    cfg.update(overrides)
    return cfg


def test_e_lambda_closed_forms():
    assert gradflow.e_lambda(0.0, 2.0) == 2.0
    assert gradflow.e_lambda(1.0, 1.0) == pytest.approx(math.e - 1.0, rel=1e-15)


def test_w2_of_translated_gaussians_is_the_shift():
    a = gradflow.gaussian_quantiles(0.0, 1.0, 200)
    b = gradflow.gaussian_quantiles(1.5, 1.0, 200)
    assert gradflow.w2(a, b) == pytest.approx(1.5, abs=1e-12)
    mean, var = gradflow.moments(b)
    assert mean == pytest.approx(1.5, abs=1e-12)


def test_single_implicit_step_matches_the_resolvent():
    result = gradflow.simulate(quadratic_config(T=0.1))
    expected = gradflow.quadratic_resolvent(np.diag([1.0, 2.0]), np.zeros(2), 0.1, np.ones(2))
    np.testing.assert_allclose(result["points"][1], expected, atol=1e-12)
    np.testing.assert_allclose(expected, [1 / 1.1, 1 / 1.2], atol=1e-15)
    assert result["failure"] is None
    assert result["lambda"] == 1.0


def test_exact_scheme_follows_the_closed_form():
    result = gradflow.simulate(quadratic_config(scheme="exact"))
    assert result["points"].shape == (11, 2)
    np.testing.assert_allclose(result["points"][-1], [math.exp(-1.0), math.exp(-2.0)], rtol=1e-12)
    np.testing.assert_allclose(
        gradflow.exact_quadratic_flow(np.diag([1.0, 2.0]), np.zeros(2), np.ones(2), 1.0), result["points"][-1]
    )


def test_jko_energy_is_non_increasing():
    cfg = {
        "carrier": "wasserstein1d",
        "functional": {"internal": {"type": "entropy"}, "potential": {"type": "quadratic"}},
        "initial": {"type": "gaussian", "mean": 2.0, "variance": 0.25},
        "M": 100,
        "tau": 0.05,
        "T": 1.0,
    }
    result = gradflow.simulate(cfg)
    assert np.all(np.diff(result["energy"]) <= 0.0)
    assert np.all(np.diff(result["points"], axis=1) > 0.0)


def test_infeasible_step_raises():
    cfg = quadratic_config(functional={"name": "double_well", "dim": 1}, initial={"type": "vector", "coords": [0.5]})
    cfg.update(tau=2.0, T=4.0)
    with pytest.raises(gradflow.PreconditionError, match=r"1 \+ tau\*lambda > 0"):
        gradflow.simulate(cfg)
    with pytest.raises(gradflow.InputError):
        gradflow.simulate(quadratic_config(bogus=1))


def test_isotonic_projection_pools_violators():
    np.testing.assert_allclose(gradflow.isotonic_projection([3.0, 1.0, 2.0]), [2.0, 2.0, 2.0])


def test_cli_round_trip(tmp_path):
    config = str(CONFIGS / "quadratic_exact.json")
    code, out, err = gradflow.run_cli(["run", "--config", config, "--out", str(tmp_path)])
    assert code == 0, err
    code, out, err = gradflow.run_cli(["verify", "--config", config, "--out", str(tmp_path)])
    assert code == 0, out
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "completed"
