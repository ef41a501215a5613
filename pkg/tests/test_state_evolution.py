import math

import numpy as np
import pytest

from drasym.cgmt import ScalarSample, solve_saddle
from drasym.model import BernoulliGaussian, SystemConfig
from drasym.prox import L1, CustomRegularizer, soft_threshold
from drasym.state_evolution import init_ensemble, ks_distance, se_run, se_step

REFERENCE = SystemConfig()  # N=500, M=350, p0=0.9, noise 1e-3, gamma=10, rho=1


def test_init_ensemble_contract():
    ens = init_ensemble(BernoulliGaussian(0.9), 10, seed=1)
    assert len(ens) == 10 and ens.k == 0
    assert np.array_equal(ens.z, np.zeros(10))


def test_init_ensemble_zero_fraction():
    ens = init_ensemble(BernoulliGaussian(0.9), 1_000_000, seed=2)
    assert abs(np.mean(ens.x == 0) - 0.9) <= 3 * math.sqrt(0.09 / 1e6)


def test_init_ensemble_deterministic():
    a = init_ensemble(BernoulliGaussian(0.9), 1000, seed=3)
    b = init_ensemble(BernoulliGaussian(0.9), 1000, seed=3)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.h_for_step(), b.h_for_step())


def test_h_is_persistent_or_fresh():
    pers = init_ensemble(BernoulliGaussian(0.9), 500, seed=4)
    fresh = init_ensemble(BernoulliGaussian(0.9), 500, seed=4, persistent_h=False)
    _, p1, _ = se_step(pers, L1(), 0.7, 1e-3, 10.0, 0.023, 1.0)
    _, f1, _ = se_step(fresh, L1(), 0.7, 1e-3, 10.0, 0.023, 1.0)
    assert np.array_equal(pers.h_for_step(), p1.h_for_step())
    assert not np.array_equal(fresh.h_for_step(), f1.h_for_step())
    # first step is the same under both readings
    assert np.array_equal(p1.s, f1.s)


def test_zero_relaxation_freezes_z():
    ens = init_ensemble(BernoulliGaussian(0.9), 2000, seed=5)
    ens = se_step(ens, L1(), 0.7, 1e-3, 10.0, 0.023, 1.0)[1]
    sp1, e1, _ = se_step(ens, L1(), 0.7, 1e-3, 10.0, 0.023, 0.0)
    assert np.array_equal(e1.z, ens.z)
    sp2, _, _ = se_step(ens, L1(), 0.7, 1e-3, 10.0, 0.023, 0.0)
    assert (sp1.alpha, sp1.beta) == (sp2.alpha, sp2.beta)


def test_particle_update_hand_composition():
    x = np.array([0.5, 0.0, -1.2])
    h = np.array([-1.0, 0.3, 0.8])
    z = np.array([0.2, -0.1, 0.4])
    from dataclasses import replace

    ens = replace(init_ensemble(BernoulliGaussian(0.9), 3, seed=0), x=x, z=z)
    delta, sv2, gamma, lam, rho = 0.7, 1e-3, 10.0, 0.023, 1.3
    sp, new, mse = se_step(ens, L1(), delta, sv2, gamma, lam, rho, h=h)
    ref = solve_saddle(ScalarSample(x, h, z), delta, sv2, gamma)
    assert (sp.alpha, sp.beta) == (ref.alpha, ref.beta)
    al, be = sp.alpha, sp.beta
    for i in range(3):
        w = be * math.sqrt(delta) / al
        s = (w * (x[i] + al / math.sqrt(delta) * h[i]) + z[i] / gamma) / (w + 1 / gamma)
        zn = z[i] + rho * (soft_threshold(2 * s - z[i], gamma * lam) - s)
        assert abs(new.s[i] - s) <= 1e-12
        assert abs(new.z[i] - zn) <= 1e-12
    assert mse == pytest.approx(al * al - sv2, abs=1e-18)


def test_custom_soft_threshold_matches_l1_path():
    ens = init_ensemble(BernoulliGaussian(0.9), 4000, seed=6)
    custom = CustomRegularizer(lambda t, thr: np.sign(t) * np.maximum(np.abs(t) - thr, 0.0))
    _, a, _ = se_step(ens, L1(), 0.7, 1e-3, 10.0, 0.023, 1.0)
    _, b, _ = se_step(ens, custom, 0.7, 1e-3, 10.0, 0.023, 1.0)
    assert np.max(np.abs(a.z - b.z)) <= 1e-12


def test_se_run_single_row():
    cfg = SystemConfig(mc_particles=5000)
    tr = se_run(cfg, 1)
    assert len(tr) == 1 and tr.rows[0].k == 1


def test_se_run_deterministic():
    cfg = SystemConfig(mc_particles=20_000, iterations=15)
    a, b = se_run(cfg), se_run(cfg)
    assert a.rows == b.rows


def test_trace_rows_are_consistent():
    cfg = SystemConfig(mc_particles=20_000, iterations=10)
    for r in se_run(cfg).rows:
        assert r.predicted_mse == max(r.alpha_star ** 2 - cfg.noise_var, 0.0)


def test_two_seeds_agree():
    a = se_run(REFERENCE, 50, seed=1).predicted
    b = se_run(REFERENCE, 50, seed=2).predicted
    assert np.max(np.abs(a / b - 1)) <= 0.02


def test_mse_identity_and_monotone_start():
    tr = se_run(REFERENCE, 50)
    for r in tr.rows:
        assert abs(r.ensemble_mse - r.predicted_mse) <= 3 * r.ensemble_mse_stderr
    pred = tr.predicted[:20]
    # strictly falling through the transient; afterwards only the shallow
    # undershoot-and-recover that DR itself shows at these parameters
    assert np.all(np.diff(pred[:8]) < 0)
    assert pred.max() == pred[0]
    assert np.max(pred[8:]) <= 1.01 * np.min(pred)


def test_first_step_self_consistency_across_particle_seeds():
    a = se_run(REFERENCE, 1, seed=11).predicted[0]
    b = se_run(REFERENCE, 1, seed=12).predicted[0]
    assert abs(a / b - 1) <= 0.02


def test_fresh_h_reading_is_available():
    cfg = SystemConfig(mc_particles=20_000, iterations=10)
    fresh = se_run(cfg, persistent_h=False).predicted
    pers = se_run(cfg).predicted
    assert fresh[0] == pers[0]
    assert fresh[-1] > pers[-1]


def test_ks_examples():
    x = np.random.default_rng(0).standard_normal(100)
    assert ks_distance(x, x) == 0.0
    assert ks_distance(np.zeros(10), np.ones(20)) == 1.0
    with pytest.raises(ValueError):
        ks_distance([], [1.0])


def test_ks_matches_brute_force():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal(300), rng.standard_normal(200) + 0.2
    pts = np.concatenate([a, b])
    brute = max(abs(np.mean(a <= t) - np.mean(b <= t)) for t in pts)
    assert ks_distance(a, b) == pytest.approx(brute, abs=1e-15)


@pytest.mark.parametrize("seed", range(3))
def test_ks_same_gaussian_is_small(seed):
    rng = np.random.default_rng(seed)
    assert ks_distance(rng.standard_normal(100_000), rng.standard_normal(100_000)) <= 0.01


def test_ks_null_bound_by_simulation():
    # the <= 0.01 bound at n = 1e5 sits above the 99% asymptotic quantile
    crit = 1.628 * math.sqrt(2 / 1e5)
    assert crit < 0.01
    rng = np.random.default_rng(7)
    hits = sum(ks_distance(rng.standard_normal(2000), rng.standard_normal(2000)) <= 1.628 * math.sqrt(2 / 2000)
               for _ in range(200))
    assert hits >= 190
