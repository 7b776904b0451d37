import os
from dataclasses import replace

import numpy as np
import pytest

from leibenson import (
    DomainError,
    FieldEvaluator,
    NumericalBlowup,
    SDEConfig,
    init_ensemble,
    kolmogorov_quantile_99,
    ks_radial,
    simulate,
    simulate_coupled,
    step,
)
from leibenson.sde import NoiseSource


@pytest.fixture(scope="module")
def cfg_small(params231):
    return SDEConfig(params=params231, delta=1.0, t_final=0.05, dt=1e-3,
                     n_particles=4000, seed=101, snap_times=(0.05,))


def test_config_validation(params231):
    with pytest.raises(DomainError):
        SDEConfig(params=params231, delta=0.0, t_final=1.0, dt=1e-3,
                  n_particles=10, seed=1)
    with pytest.raises(DomainError):
        SDEConfig(params=params231, delta=1.0, t_final=0.5, dt=1.0,
                  n_particles=10, seed=1)
    with pytest.raises(DomainError):
        SDEConfig(params=params231, delta=1.0, t_final=1.0, dt=1e-3,
                  n_particles=0, seed=1)
    # t_final = 0 with a snapshot at 0 is the initial-ensemble degenerate case
    cfg = SDEConfig(params=params231, delta=1.0, t_final=0.0, dt=1e-3,
                    n_particles=10, seed=1, snap_times=(0.0,))
    snaps = simulate(cfg)
    assert len(snaps) == 1 and snaps[0].time == 0.0


def test_snap_time_rounding(params231):
    cfg = SDEConfig(params=params231, delta=1.0, t_final=0.1, dt=3e-3,
                    n_particles=10, seed=1, snap_times=(0.05, 0.1))
    actual = cfg.actual_snap_times()
    for ts, ta in zip(cfg.snap_times, actual):
        assert abs(ta - round(ts / cfg.dt) * cfg.dt) == 0 or ta == cfg.n_steps * cfg.dt


# -- noise streams -------------------------------------------------------------

def test_streams_pure_function_of_indices():
    ns = NoiseSource(seed=7, n_particles=1000, d=2)
    g_all = ns.gaussians(3, 0, 1000)
    g_slice = ns.gaussians(3, 400, 600)
    assert np.array_equal(g_all[400:600], g_slice)
    # different steps and seeds decorrelate
    assert not np.array_equal(ns.gaussians(4, 0, 1000), g_all)
    assert not np.array_equal(NoiseSource(8, 1000, 2).gaussians(3, 0, 1000), g_all)


def test_refinement_preserves_brownian_path():
    ns = NoiseSource(seed=7, n_particles=100, d=2)
    coarse = ns.gaussians(5, 0, 100, refinement=1)
    fine = (ns.gaussians(10, 0, 100) + ns.gaussians(11, 0, 100)) / np.sqrt(2.0)
    assert np.array_equal(coarse, fine)


def test_gaussians_are_standard_normal():
    ns = NoiseSource(seed=42, n_particles=200_000, d=2)
    g = ns.gaussians(0, 0, 200_000).ravel()
    n = g.size
    assert abs(g.mean()) <= 4.0 / np.sqrt(n)
    assert abs(g.std() - 1.0) <= 4.0 / np.sqrt(n)
    # skewness estimator has standard error sqrt(15/n) for a normal sample
    assert abs(np.mean(g ** 3)) <= 4.0 * np.sqrt(15.0 / n)
    assert abs(np.mean(g ** 4) - 3.0) <= 4.0 * np.sqrt(96.0 / n)


# -- initial ensemble ------------------------------------------------------------

def test_init_exact_sampler_ks(params231):
    cfg = SDEConfig(params=params231, delta=1.0, t_final=0.0, dt=1e-3,
                    n_particles=100_000, seed=3, snap_times=(0.0,))
    ens = init_ensemble(cfg)
    fld = FieldEvaluator(params231, delta=1.0)
    ks = ks_radial(ens, fld, 0.0)
    assert ks <= kolmogorov_quantile_99(ens.n)


def test_init_radii_within_support(params231):
    cfg = SDEConfig(params=params231, delta=1.0, t_final=0.0, dt=1e-3,
                    n_particles=20_000, seed=4)
    ens = init_ensemble(cfg)
    fld = FieldEvaluator(params231, delta=1.0)
    assert ens.radii().max() <= fld.support_radius_delta(0.0)


def test_init_deterministic(params231):
    cfg = SDEConfig(params=params231, delta=1.0, t_final=0.0, dt=1e-3,
                    n_particles=5000, seed=5)
    a = init_ensemble(cfg)
    b = init_ensemble(cfg)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.stream_ids, b.stream_ids)


def test_init_isotropic_all_dims(params332):
    cfg = SDEConfig(params=params332, delta=1.0, t_final=0.0, dt=1e-3,
                    n_particles=50_000, seed=6)
    ens = init_ensemble(cfg)
    mean = ens.positions.mean(axis=0)
    se = ens.positions.std(axis=0) / np.sqrt(ens.n)
    assert np.all(np.abs(mean) <= 4 * se)


# -- stepping ---------------------------------------------------------------------

def test_step_advances_time(cfg_small):
    ens = init_ensemble(cfg_small)
    out = step(ens, cfg_small)
    assert out.time == pytest.approx(cfg_small.dt)
    assert out.positions.shape == ens.positions.shape
    with pytest.raises(DomainError):
        bad = out.copy()
        bad.time = cfg_small.t_final
        step(bad, cfg_small)


def test_outside_particle_frozen(params231):
    cfg = SDEConfig(params=params231, delta=1.0, t_final=0.05, dt=1e-3,
                    n_particles=2, seed=9, snap_times=(0.05,))
    fld = FieldEvaluator(params231, delta=1.0)
    ens = init_ensemble(cfg)
    # place one particle outside the support at every time up to t_final
    r_out = fld.support_radius_delta(cfg.t_final) * 1.5
    ens.positions[0] = [r_out, 0.0]
    out = simulate(cfg, initial=ens)[-1]
    assert np.array_equal(out.positions[0], [r_out, 0.0])


def test_zero_noise_drift_signs(params231):
    # hand-derived sign structure of the radial drift at delta=1, t=0:
    # outward in the inner region, crossover near 0.39 R, inward outside it
    cfg = SDEConfig(params=params231, delta=1.0, t_final=0.002, dt=1e-3,
                    n_particles=2, seed=1, snap_times=(0.002,), zero_noise=True)
    fld = FieldEvaluator(params231, delta=1.0)
    R0 = fld.support_radius_delta(0.0)
    ens = init_ensemble(cfg)
    ens.positions[0] = [0.2 * R0, 0.0]
    ens.positions[1] = [0.8 * R0, 0.0]
    out = simulate(cfg, initial=ens)[-1]
    assert out.positions[0, 0] > 0.2 * R0    # outward
    assert out.positions[1, 0] < 0.8 * R0    # inward


def test_blowup_detection(params231):
    cfg = SDEConfig(params=params231, delta=1.0, t_final=0.01, dt=1e-3,
                    n_particles=2, seed=1, snap_times=(0.01,))
    fld = FieldEvaluator(params231, delta=1.0)
    ens = init_ensemble(cfg)
    ens.positions[0] = [50.0 * fld.support_radius_delta(0.01), 0.0]
    with pytest.raises(NumericalBlowup) as exc:
        simulate(cfg, initial=ens)
    assert exc.value.time is not None


def test_simulate_snapshots_and_mass(cfg_small):
    cfg = replace(cfg_small, snap_times=(0.0, 0.02, 0.05))
    snaps = simulate(cfg)
    assert [s.time for s in snaps] == [0.0, 0.02, 0.05]
    assert all(s.n == cfg.n_particles for s in snaps)   # conservation


def test_simulate_threads_bitwise_identical(cfg_small):
    one = simulate(replace(cfg_small, threads=1))[-1]
    four = simulate(replace(cfg_small, threads=4))[-1]
    eight = simulate(replace(cfg_small, threads=8))[-1]
    assert np.array_equal(one.positions, four.positions)
    assert np.array_equal(one.positions, eight.positions)


def test_threads_env_cap(cfg_small, monkeypatch):
    monkeypatch.setenv("LEIBENSON_THREADS", "1")
    capped = simulate(replace(cfg_small, threads=8))[-1]
    monkeypatch.delenv("LEIBENSON_THREADS")
    free = simulate(replace(cfg_small, threads=8))[-1]
    assert np.array_equal(capped.positions, free.positions)


def test_mean_position_unbiased(params231):
    cfg = SDEConfig(params=params231, delta=1.0, t_final=0.2, dt=2e-3,
                    n_particles=20_000, seed=17, snap_times=(0.2,))
    snap = simulate(cfg)[-1]
    mean = snap.positions.mean(axis=0)
    se = snap.positions.std(axis=0) / np.sqrt(snap.n)
    assert np.all(np.abs(mean) <= 3 * se)


def test_em_self_convergence(params231):
    # strong order ~1/2: halving dt on a shared Brownian path shrinks the
    # median displacement between resolutions by a factor in [1.2, 2.0]
    base = SDEConfig(params=params231, delta=1.0, t_final=0.5, dt=4e-3,
                     n_particles=4000, seed=11, snap_times=(0.5,))
    run_dt = simulate(replace(base, noise_refinement=2))[-1]
    run_dt2 = simulate(replace(base, dt=2e-3, noise_refinement=1))[-1]
    run_dt4 = simulate(replace(base, dt=1e-3, noise_refinement=0))[-1]
    d12 = np.median(np.linalg.norm(run_dt.positions - run_dt2.positions, axis=1))
    d24 = np.median(np.linalg.norm(run_dt2.positions - run_dt4.positions, axis=1))
    assert 1.2 <= d12 / d24 <= 2.0


def test_fast_diffusion_origin_clamp(params3183):
    # p < 2: the clamp keeps coefficients finite through the origin
    cfg = SDEConfig(params=params3183, delta=1.0, t_final=0.05, dt=1e-3,
                    n_particles=2000, seed=23, snap_times=(0.05,))
    snap = simulate(cfg)[-1]
    assert np.all(np.isfinite(snap.positions))
    assert cfg.resolve_origin_clamp() > 0


# -- coupled runs ------------------------------------------------------------------

def test_coupled_zero_offset_identity(params231):
    cfg = SDEConfig(params=params231, delta=1.0, t_final=0.05, dt=1e-3,
                    n_particles=3000, seed=31, snap_times=(0.025, 0.05))
    diag = simulate_coupled(cfg, np.zeros(2), epsilon=1e-6)
    assert all(v == 0.0 for v in diag.log_distance)
    assert all(v == 0.0 for v in diag.median_distance)


def test_coupled_offset_finite_and_eps_monotone(params231):
    cfg = SDEConfig(params=params231, delta=1.0, t_final=0.05, dt=1e-3,
                    n_particles=3000, seed=31, snap_times=(0.025, 0.05))
    off = 1e-6 * params231.r_unit
    d1 = simulate_coupled(cfg, np.array([off, 0.0]), epsilon=off)
    assert all(np.isfinite(v) for v in d1.log_distance)
    assert all(v >= 0.0 for v in d1.log_distance)
    d2 = simulate_coupled(cfg, np.array([off, 0.0]), epsilon=2 * off)
    assert all(a >= b for a, b in zip(d1.log_distance, d2.log_distance))


def test_coupled_offset_size_gate(params231):
    cfg = SDEConfig(params=params231, delta=1.0, t_final=0.01, dt=1e-3,
                    n_particles=10, seed=1)
    with pytest.raises(DomainError):
        simulate_coupled(cfg, np.array([1.0, 0.0]), epsilon=1e-3)
