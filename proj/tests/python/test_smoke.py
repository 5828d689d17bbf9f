import json
import math
import os
import subprocess

import numpy as np
import pytest

import lamperti as lp


def test_stable_constants():
    p = lp.StableParams(1.0, 0.5)
    assert p.c1 == pytest.approx(1 / math.pi, rel=1e-14)
    assert lp.StableParams(1.5, 1 / 3).c2 == 0.0
    assert lp.StableParams(1.3, 0.5).char_exponent(2.0).real == pytest.approx(2.0**1.3)
    with pytest.raises(ValueError):
        lp.StableParams(2.5, 0.5)


def test_sampling_is_seeded():
    p = lp.StableParams(1.5, 1 / 3)
    a = p.sample(5, seed=42)
    assert a[0] == pytest.approx(-0.38454305499666158, rel=1e-15)
    assert np.array_equal(a, p.sample(5, seed=42))


def test_polar():
    assert lp.polar_decompose([1.0, 1.0]) == pytest.approx((math.log(2), [0.5, 0.5]))
    assert lp.polar_decompose([0.0, 0.0]) == (-math.inf, None)
    assert lp.polar_compose(0.0, [0.3, 0.7]) == pytest.approx([0.3, 0.7])
    assert lp.polar_compose(-math.inf, None) == [0.0, 0.0]


def test_closed_forms():
    assert lp.killing_rate(1.0, [0.5, 0.5], [1.0, 1.0]) == pytest.approx(4 / math.pi)
    assert lp.jump_vector_v([0.3, 0.7], 0, math.log(2)) == pytest.approx([0.65, 0.35])
    assert lp.jump_kernel_density(1.0, [0.5, 0.5], [0.5, 0.5], 0, math.log(2)) == pytest.approx(2 / math.pi)
    j, dxi, landing = lp.corrective_jump_from_uniforms(1.0, [0.5, 0.5], 0.1, 0.5)
    assert (j, abs(dxi) < 1e-15) == (0, True)
    assert landing == pytest.approx([0.5, 0.5])
    b, a = lp.bm_map_coefficients([0.5, 0.5])
    assert b == pytest.approx([-1, 0, 0])
    assert a.shape == (3, 3) and a[1, 2] == pytest.approx(-0.5)
    s = lp.sde_coefficients([0.5, 0.5])
    assert s["lambda2"] == pytest.approx(2.0) and s["lambda3"] == pytest.approx(1.0)


def test_generators():
    assert lp.generator("skorokhod-stable", "constant", 0.1, [0.4, 0.6]) == 0.0
    with pytest.raises(ArithmeticError):
        lp.generator("skorokhod-stable", "gaussian", 0.1, [0.4, 0.6], variant="literal")
    assert math.isfinite(lp.generator("skorokhod-bm", "gaussian", 0.1, [0.4, 0.6]))


@pytest.mark.parametrize("model", ["killed", "symmetric", "skorokhod-stable", "skorokhod-bm"])
def test_simulate_and_roundtrip(model):
    alpha = 1.5 if model == "skorokhod-stable" else 1.0
    index = 2.0 if model == "skorokhod-bm" else alpha
    z = lp.simulate(model, [1.0, 1.0], alpha=alpha, seed=3, grid_dt=1e-2)
    assert z.values.shape == (len(z), 2)
    assert z.end in ("alive", "killed", "absorbed")
    m = lp.ssmp_to_map(z, index)
    assert m.censored == (z.end == "alive")
    back = lp.map_to_ssmp(m, index)
    assert lp.skeleton_distance(back, z) <= 1e-9
    again = lp.read_skeleton_csv(z.to_csv())
    assert np.array_equal(again.values, z.values)


def test_invalid_model_config():
    with pytest.raises(ValueError):
        lp.simulate("skorokhod-stable", [1.0, 1.0], alpha=1.5, rho=[0.5])


def test_run_test_returns_report():
    r = lp.run_test("algebra.cases = 20\n", "algebra")
    assert r["pass"] is True
    assert r["parts"]
    c = lp.cf_test(1.0, 0.5, 20000, [0.0, 1.0], seed=4)
    assert c["pass"] is True


def test_run_experiment(tmp_path):
    cfg = "model = killed\nensemble.paths = 200\nverify.tests = roundtrip, killing\n"
    res = lp.run_experiment(cfg, str(tmp_path))
    assert res["pass"], res["failures"]
    assert (tmp_path / "killing.json").exists()
    rep = json.loads((tmp_path / "killing.json").read_text())
    assert rep["reference"] == pytest.approx(4 / math.pi)


@pytest.mark.skipif("LAMPERTI_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_analytics():
    out = subprocess.run([os.environ["LAMPERTI_CLI"], "analytics", "q"], capture_output=True, text=True, check=True)
    assert float(out.stdout.split()[1]) == pytest.approx(4 / math.pi)
