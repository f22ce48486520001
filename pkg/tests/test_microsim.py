import numpy as np
import pytest
from scipy.stats import ks_2samp

from gradchain import gibbs
from gradchain import microsim as ms
from gradchain.potentials import Harmonic, HarmonicCosine
from gradchain.profiles import TemperatureProfile, TensionSchedule


def _streams(seed, R):
    init, dyn = ms.replica_streams(seed, R)
    return init, dyn


# --------------------------------------------------------------------------
# initial local Gibbs sampler

def test_init_mean_zero_tension(harmonic):
    prof = TemperatureProfile.constant(1.0)
    init, _ = _streams(0, 1)
    st = ms.init_local_gibbs(10_000, prof, harmonic, init, tau=0.0)
    n = 10_000
    assert abs(st.r.mean()) < 4 / np.sqrt(n)
    assert abs(st.p.mean()) < 4 / np.sqrt(n)


def test_init_mean_harmonic_tau(harmonic):
    prof = TemperatureProfile.constant(1.0)
    init, _ = _streams(1, 1)
    st = ms.init_local_gibbs(10_000, prof, harmonic, init, tau=0.5)
    assert abs(st.r.mean() - 0.5) < 4 / np.sqrt(10_000)


def test_init_mean_anharmonic(harmonic_cosine):
    prof = TemperatureProfile.constant(0.5)  # beta = 2
    init, _ = _streams(2, 1)
    n = 10_000
    st = ms.init_local_gibbs(n, prof, harmonic_cosine, init, tau=0.3)
    target = gibbs.mean_stretch(harmonic_cosine, 0.3, 2.0)
    sd = np.sqrt(gibbs.stretch_variance(harmonic_cosine, 0.3, 2.0))
    assert abs(st.r.mean() - target) < 4 * sd / np.sqrt(n)


def test_init_from_strain_profile(harmonic_cosine):
    # r0 target converted through the equation of state per site
    prof = TemperatureProfile.linear_T(1.0, 1.5)
    init, _ = _streams(3, 256)
    st = ms.init_local_gibbs(8, prof, harmonic_cosine, init, r0=lambda x: 0.2 + 0.1 * x)
    x = np.arange(1, 9) / 8
    assert np.allclose(st.r.mean(axis=0), 0.2 + 0.1 * x, atol=0.15)


def test_init_requires_exactly_one_target(harmonic):
    prof = TemperatureProfile.constant(1.0)
    init, _ = _streams(0, 1)
    with pytest.raises(ValueError):
        ms.init_local_gibbs(4, prof, harmonic, init)
    with pytest.raises(ValueError):
        ms.init_local_gibbs(4, prof, harmonic, init, tau=0.0, r0=0.0)


def test_init_velocity_variance_profile(harmonic):
    prof = TemperatureProfile.linear_T(1.0, 2.0)
    init, _ = _streams(4, 4000)
    st = ms.init_local_gibbs(4, prof, harmonic, init, tau=0.0)
    betas = prof.site_betas(4)
    var = st.p.var(axis=0)
    assert np.allclose(var, 1 / betas, rtol=0.15)


# --------------------------------------------------------------------------
# single-site stationary statistics

def _run_single_site(pot, tau, beta, horizon=50.0, R=64, seed=11):
    cfg = ms.SimConfig(
        pot=pot,
        profile=TemperatureProfile.constant(1.0 / beta),
        schedule=TensionSchedule.constant(tau),
        n=1,
        replicas=R,
        seed=seed,
        horizon=horizon,
        init_tau=tau,
        windows=((horizon * 0.1, horizon),),
    )
    return ms.simulate(cfg)


def test_single_site_kinetic_temperature(harmonic):
    res = _run_single_site(harmonic, 0.0, 1.0)
    vals = res.window_kinetic[0][:, 0]
    se = vals.std(ddof=1) / np.sqrt(len(vals))
    assert abs(vals.mean() - 1.0) <= 3 * se


def test_single_site_stationary_tension(harmonic):
    # time average of V'(r) = r equals the applied tension
    res = _run_single_site(harmonic, 0.5, 1.0, seed=12)
    vals = res.window_tension[0][:, 0]
    se = vals.std(ddof=1) / np.sqrt(len(vals))
    assert abs(vals.mean() - 0.5) <= 3 * se


def test_pure_damping_noise_off(harmonic):
    # zero-temperature limit: beta -> inf handled by a tiny T profile
    prof = TemperatureProfile.constant(1e-12)
    init, _ = _streams(5, 8)
    st = ms.init_local_gibbs(4, prof, harmonic, init, tau=0.0)
    st.p[:] = 1.0
    st.r[:] = 0.0
    ws = ms._Workspace(8, 4)
    sched = TensionSchedule.constant(0.0)
    ke = [float((st.p**2).sum())]
    dt = 0.1 / 16
    sig = ms._ou_sigma(st.betas, 1.0, 4, dt)
    for _ in range(30):
        ms.step(st, dt, sched, harmonic, 1.0, np.zeros((8, 4)), ws, sig)
        ke.append(float((st.p**2).sum()))
        assert st.ledger.Q.max() < 0  # pure dissipation while p != 0
    assert ke[-1] < ke[0]


# --------------------------------------------------------------------------
# energy ledger

def test_zero_tension_zero_work(harmonic_cosine):
    cfg = ms.SimConfig(
        pot=harmonic_cosine,
        profile=TemperatureProfile.linear_T(1.0, 1.5),
        schedule=TensionSchedule.constant(0.0),
        n=16,
        replicas=8,
        seed=3,
        horizon=0.05,
        init_tau=0.0,
    )
    res = ms.simulate(cfg)
    assert np.all(res.ledger.W == 0.0)


def test_first_principle_exact_on_paths(harmonic_cosine):
    cfg = ms.SimConfig(
        pot=harmonic_cosine,
        profile=TemperatureProfile.linear_T(1.0, 1.5),
        schedule=TensionSchedule.smoothstep(0.0, 0.5, 0.1),
        n=32,
        replicas=16,
        seed=4,
        horizon=0.25,
        init_tau=0.0,
    )
    res = ms.simulate(cfg)
    led = res.ledger
    bound = 1e-8 * (1.0 + np.abs(led.W) + np.abs(led.Q))
    assert np.all(res.first_principle_residual() <= bound)


def test_martingale_is_zero_mean_part(harmonic):
    # Q - martingale is the predictable OU part; with many replicas the
    # martingale itself averages to ~0
    cfg = ms.SimConfig(
        pot=harmonic,
        profile=TemperatureProfile.constant(1.0),
        schedule=TensionSchedule.constant(0.0),
        n=8,
        replicas=400,
        seed=5,
        horizon=0.2,
        init_tau=0.0,
    )
    res = ms.simulate(cfg)
    m = res.ledger.martingale
    se = m.std(ddof=1) / np.sqrt(len(m))
    assert abs(m.mean()) <= 4 * se + 1e-12


# --------------------------------------------------------------------------
# pairings, block averages, per-site observables

def test_empirical_pairing_constant_field():
    r = np.full((3, 50), 1.7)
    assert np.allclose(ms.empirical_pairing(r, lambda x: np.ones_like(x)), 1.7)


def test_empirical_pairing_riemann_sum():
    n = 2000
    r = (np.arange(1, n + 1) / n)[None, :]
    val = ms.empirical_pairing(r, lambda x: x)
    assert val[0] == pytest.approx(1.0 / 3.0, abs=2e-3)


def test_empirical_pairing_clt(harmonic):
    prof = TemperatureProfile.constant(1.0)
    init, _ = _streams(6, 512)
    n = 128
    st = ms.init_local_gibbs(n, prof, harmonic, init, tau=0.5)
    g = lambda x: np.cos(np.pi * x / 2)
    vals = ms.empirical_pairing(st, g)
    x = np.linspace(0, 1, 20001)
    target = 0.5 * np.trapezoid(g(x), x)
    sd = vals.std(ddof=1)
    assert abs(vals.mean() - target) < 4 * sd / np.sqrt(len(vals))


def test_block_average_constant():
    r = np.full((2, 64), 0.3)
    assert np.allclose(ms.block_average(r, 32, 0.1), 0.3)


def test_block_average_single_site():
    r = np.arange(64, dtype=float)[None, :]
    # eps below 1/n: the window degenerates to the site itself
    assert ms.block_average(r, 10, 0.01)[0] == r[0, 9]


def test_block_average_linear_ramp():
    n = 256
    r = (np.arange(1, n + 1) / n)[None, :]
    i = 128
    eps = 0.05
    val = ms.block_average(r, i, eps)[0]
    assert abs(val - i / n) <= eps


def test_block_average_window_errors():
    r = np.zeros((1, 64))
    with pytest.raises(IndexError):
        ms.block_average(r, 2, 0.1)
    with pytest.raises(IndexError):
        ms.block_average(r, 63, 0.1)


def test_local_observable_kinds(harmonic):
    init, _ = _streams(7, 2)
    st = ms.init_local_gibbs(6, TemperatureProfile.constant(1.0), harmonic, init, tau=0.1)
    assert np.allclose(ms.local_observable(st, "tension", harmonic), st.r)
    assert np.allclose(ms.local_observable(st, "kinetic"), st.p**2)
    assert np.allclose(
        ms.local_observable(st, "energy", harmonic), 0.5 * st.p**2 + 0.5 * st.r**2
    )
    with pytest.raises(ValueError):
        ms.local_observable(st, "entropy")


# --------------------------------------------------------------------------
# determinism and reproducibility

def _small_cfg(seed, replicas=6, **kw):
    base = dict(
        pot=HarmonicCosine(),
        profile=TemperatureProfile.linear_T(1.0, 1.5),
        schedule=TensionSchedule.smoothstep(0.0, 0.5, 0.1),
        n=12,
        replicas=replicas,
        seed=seed,
        horizon=0.08,
        init_tau=0.0,
        pairing_functions=(lambda x: np.cos(np.pi * x / 2),),
    )
    base.update(kw)
    return ms.SimConfig(**base)


def test_same_seed_bit_identical():
    a = ms.simulate(_small_cfg(42))
    b = ms.simulate(_small_cfg(42))
    assert np.array_equal(a.final_state.r, b.final_state.r)
    assert np.array_equal(a.pairings, b.pairings)
    assert np.array_equal(a.ledger.W, b.ledger.W)


def test_different_seed_differs():
    a = ms.simulate(_small_cfg(42))
    b = ms.simulate(_small_cfg(43))
    assert not np.array_equal(a.final_state.r, b.final_state.r)


def test_replica_streams_stable_under_extension():
    # replica k's trajectory does not depend on how many replicas run
    a = ms.simulate(_small_cfg(42, replicas=3))
    b = ms.simulate(_small_cfg(42, replicas=6))
    assert np.array_equal(a.final_state.r, b.final_state.r[:3])


def test_chunk_size_invariance(monkeypatch):
    a = ms.simulate(_small_cfg(9))
    monkeypatch.setattr(ms, "_NOISE_CHUNK", 7)
    b = ms.simulate(_small_cfg(9))
    assert np.array_equal(a.final_state.r, b.final_state.r)


# --------------------------------------------------------------------------
# distributional checks

def test_weak_order_dt_halving(harmonic_cosine):
    # halving dt moves the replica-averaged pairing by less than its SE
    kw = dict(n=16, replicas=200, horizon=0.1)
    res_a = ms.simulate(_small_cfg(21, **kw))
    res_b = ms.simulate(_small_cfg(21, c_delta=0.05, **kw))
    pa = res_a.pairings[-1, 0]
    pb = res_b.pairings[-1, 0]
    se = np.hypot(
        pa.std(ddof=1) / np.sqrt(len(pa)), pb.std(ddof=1) / np.sqrt(len(pb))
    )
    assert abs(pa.mean() - pb.mean()) <= 1.2 * se


def test_fixed_site_distribution_vs_direct_gibbs(harmonic_cosine):
    # constant beta and tau: marginal (r_i, p_i) after burn-in vs fresh
    # direct Gibbs samples, two-sample KS at the 1% level
    beta, tau = 1.0, 0.3
    cfg = ms.SimConfig(
        pot=harmonic_cosine,
        profile=TemperatureProfile.constant(1.0 / beta),
        schedule=TensionSchedule.constant(tau),
        n=16,
        replicas=600,
        seed=77,
        horizon=0.12,
        init_tau=tau,
    )
    res = ms.simulate(cfg)
    site = 8
    r_dyn = res.final_state.r[:, site]
    p_dyn = res.final_state.p[:, site]

    gen = np.random.default_rng(1234)
    grid, cdf = gibbs.inverse_cdf_grid(harmonic_cosine, tau, beta)
    r_direct = np.interp(gen.random(600), cdf, grid)
    p_direct = gen.standard_normal(600) / np.sqrt(beta)
    assert ks_2samp(r_dyn, r_direct).pvalue > 0.01
    assert ks_2samp(p_dyn, p_direct).pvalue > 0.01


def test_stationarity_site_tensions(harmonic_cosine):
    # constant taubar: after warm-up, time-averaged V'(r_i) = taubar at
    # every site within 3 SE
    tau = 0.4
    cfg = ms.SimConfig(
        pot=harmonic_cosine,
        profile=TemperatureProfile.linear_T(1.0, 1.5),
        schedule=TensionSchedule.constant(tau),
        n=16,
        replicas=128,
        seed=31,
        horizon=0.5,
        init_tau=tau,
        windows=((0.1, 0.5),),
    )
    res = ms.simulate(cfg)
    mean = res.window_tension[0].mean(axis=0)
    se = res.window_tension[0].std(axis=0, ddof=1) / np.sqrt(cfg.replicas)
    assert np.all(np.abs(mean - tau) <= 3.2 * se)


def test_blow_up_detection(harmonic):
    init, _ = _streams(8, 4)
    st = ms.init_local_gibbs(8, TemperatureProfile.constant(1.0), harmonic, init, tau=0.0)
    st.r[2, 5] = np.inf
    bad = ms._mark_blowups(st)
    assert bad[2] and not bad[0]
    assert not st.alive[2]
    assert st.failures[0]["replica"] == 2 and st.failures[0]["site"] == 5
