# tests/unit/test_spde.py
import math
from dataclasses import replace

import numpy as np
import pytest

from ksdk.deterministic import DetConfig, Trajectory, solve_det, sqrt_det
from ksdk.errors import ConfigError, GridMismatchError, InputError
from ksdk.fields import FourierField
from ksdk.noise import lolli_path, sample_increment
from ksdk.rng import TAG_NOISE, CounterStream
from ksdk.selftest import random_band_limited
from ksdk.spde import (
    SpdeConfig,
    fluctuation,
    negative_part_norm,
    ou_step,
    rate_functional,
    skeleton_solve,
    solve_ou,
    solve_spde,
)


def test_config_validation():
    with pytest.raises(ConfigError):
        SpdeConfig(eps=-1.0)
    with pytest.raises(ConfigError):
        SpdeConfig(delta=0.0)
    cfg = SpdeConfig(eps=0.0)
    assert cfg.det_config().record_every == 1
    diag = SpdeConfig(eps=1e-4, delta=0.5, gamma=-1.0).scaling_diagnostics()
    assert diag["regular"] == pytest.approx(1e-2 * 0.5 ** (-1.0))


def test_zero_noise_reproduces_deterministic_solver(det_baseline, small_spde_cfg):
    rho0, det, _ = det_baseline
    path = solve_spde(rho0, det, replace(small_spde_cfg, eps=0.0))
    assert path.trajectory.steps == [0, 5, 10]
    for step in path.trajectory.steps:
        assert np.array_equal(path.trajectory.field_at_step(step).coeffs, det.field_at_step(step).coeffs)
    assert path.sup_gap() == 0.0
    assert path.stopping_time == pytest.approx(small_spde_cfg.T)


def test_level_below_initial_norm_stops_at_zero(det_baseline, small_spde_cfg):
    rho0, det, _ = det_baseline
    path = solve_spde(rho0, det, replace(small_spde_cfg, negativity_level_L=0.5))
    assert path.stopping_time == 0.0
    assert path.sup_negative_part() == 0.0


def test_paths_are_reproducible(det_baseline, small_spde_cfg):
    rho0, det, sigma = det_baseline
    a = solve_spde(rho0, det, small_spde_cfg, sigma_path=sigma, path_id=3)
    b = solve_spde(rho0, det, small_spde_cfg, sigma_path=sigma, path_id=3)
    c = solve_spde(rho0, det, small_spde_cfg, sigma_path=sigma, path_id=4)
    assert np.array_equal(a.trajectory.final.coeffs, b.trajectory.final.coeffs)
    assert not np.array_equal(a.trajectory.final.coeffs, c.trajectory.final.coeffs)
    assert len(a.gap_path) == small_spde_cfg.n_steps + 1
    assert 0 < a.sup_gap() < 1.0


def test_noise_preserves_mass(det_baseline, small_spde_cfg):
    rho0, det, sigma = det_baseline
    path = solve_spde(rho0, det, replace(small_spde_cfg, eps=1.0), sigma_path=sigma)
    for f in path.trajectory.fields:
        assert f.mean() == pytest.approx(1.0, abs=1e-13)


def test_grid_mismatch(rho_cos, small_spde_cfg):
    coarse = solve_det(rho_cos, DetConfig(chi=1.0, T=0.01, dt=2e-3, M=8))
    with pytest.raises(GridMismatchError):
        solve_spde(rho_cos, coarse, small_spde_cfg)
    sparse = solve_det(rho_cos, replace(small_spde_cfg.det_config(), record_every=2))
    with pytest.raises(GridMismatchError):
        solve_spde(rho_cos, sparse, small_spde_cfg)


def test_fluctuations_scale_exactly_without_chemotaxis(rho_cos, small_spde_cfg):
    cfg = replace(small_spde_cfg, chi=0.0, record_every=1)
    det = solve_det(rho_cos, cfg.det_config())
    sigma = sqrt_det(det)
    fl = [
        fluctuation(solve_spde(rho_cos, det, replace(cfg, eps=eps), sigma_path=sigma).trajectory, det, eps)
        for eps in (1e-2, 1e-4)
    ]
    assert np.allclose(fl[0].final.coeffs, fl[1].final.coeffs, atol=1e-9)
    # at χ = 0 the fluctuation is minus the stochastic convolution
    ti = lolli_path(sigma, cfg.mollifier(), CounterStream(cfg.seed, 0, TAG_NOISE), cfg.n_steps)[-1]
    assert np.allclose(fl[0].final.coeffs, -ti.coeffs, atol=1e-9)


def test_fluctuation_needs_positive_eps(det_baseline):
    _, det, _ = det_baseline
    with pytest.raises(InputError):
        fluctuation(det, det, 0.0)


def test_negative_part_norm():
    assert negative_part_norm(FourierField.constant(4, 1.0)) == 0.0
    assert negative_part_norm(FourierField.constant(4, -2.0)) == pytest.approx(2.0)


def test_ou_process(det_baseline, small_spde_cfg):
    _, det, sigma = det_baseline
    a = solve_ou(det, small_spde_cfg, sigma_path=sigma, path_id=1)
    b = solve_ou(det, small_spde_cfg, sigma_path=sigma, path_id=1)
    assert a.steps == [0, 5, 10]
    assert np.all(a.fields[0].coeffs == 0)
    assert np.array_equal(a.final.coeffs, b.final.coeffs)
    assert a.final.mean() == 0.0
    assert a.final.is_real


def test_skeleton_without_control_is_deterministic(det_baseline, small_spde_cfg):
    rho0, det, _ = det_baseline
    cfg = small_spde_cfg.det_config()
    unforced = skeleton_solve(rho0, None, det, cfg)
    zero = skeleton_solve(rho0, [FourierField.zeros(8, components=2)] * cfg.n_steps, det, cfg)
    for a, b in ((unforced, det), (zero, det)):
        assert a.steps == b.steps
        assert all(np.array_equal(x.coeffs, y.coeffs) for x, y in zip(a.fields, b.fields))


def test_skeleton_control_errors(det_baseline, small_spde_cfg):
    rho0, det, _ = det_baseline
    cfg = small_spde_cfg.det_config()
    with pytest.raises(InputError):
        skeleton_solve(rho0, [FourierField.zeros(8, components=2)] * 3, det, cfg)
    with pytest.raises(InputError):
        skeleton_solve(rho0, [FourierField.zeros(8)] * cfg.n_steps, det, cfg)


def test_rate_functional():
    h = FourierField.stack([FourierField.cosine(6, (1, 0), 1.0), FourierField.zeros(6)])
    assert rate_functional([h] * 11, 1e-3) == pytest.approx(0.5 * 0.5 * 10 * 1e-3)
    assert rate_functional([h * 3.0] * 11, 1e-3) == pytest.approx(9 * rate_functional([h] * 11, 1e-3))
    assert rate_functional([h], 1e-3) == 0.0


def test_skeleton_is_linear_in_the_control_without_chemotaxis(rng, rho_cos, small_spde_cfg):
    cfg = replace(small_spde_cfg, chi=0.0).det_config()
    det = solve_det(rho_cos, cfg)
    h1 = [random_band_limited(rng, 8, 3, components=2) * 0.05 for _ in range(cfg.n_steps)]
    h2 = [random_band_limited(rng, 8, 3, components=2) * 0.05 for _ in range(cfg.n_steps)]
    both = [a + b for a, b in zip(h1, h2)]
    d1, d2, d12 = (skeleton_solve(rho_cos, h, det, cfg).final - det.final for h in (h1, h2, both))
    assert np.max(np.abs(d1.coeffs)) > 1e-4
    assert np.allclose(d12.coeffs, (d1 + d2).coeffs, rtol=0.0, atol=1e-10)


def test_ou_mode_variance_at_uniform_state_follows_linear_recursion(rng):
    # at ρ_det ≡ 1 the drift on a mean-free v is χv, so mode ω obeys
    # v⁺ = (e^{-λdt} + χφ₁)v + φ₁ f with E|f|² = λ/dt
    M, dt, n, chi, paths = 8, 1e-3, 20, 30.0, 1000
    cfg = SpdeConfig(chi=chi, dt=dt, T=n * dt, M=M)
    one = FourierField.constant(M, 1.0)
    samples = np.empty(paths, dtype=complex)
    for p in range(paths):
        v = FourierField.zeros(M)
        for _ in range(n):
            v = ou_step(v, one, one, sample_increment(rng, M, dt), cfg)
        samples[p] = v.mode(1, 0)
    lam = (2 * math.pi) ** 2
    phi1 = -math.expm1(-lam * dt) / lam
    a = math.exp(-lam * dt) + chi * phi1
    expected = phi1**2 * lam / dt * (1 - a ** (2 * n)) / (1 - a**2)
    unforced = phi1**2 * lam / dt * (1 - math.exp(-2 * n * lam * dt)) / -math.expm1(-2 * lam * dt)
    assert expected > 1.3 * unforced
    assert np.mean(np.abs(samples) ** 2) == pytest.approx(expected, rel=0.15)


def test_ou_without_noise_amplitude_stays_zero(det_baseline, small_spde_cfg):
    _, det, _ = det_baseline
    zero = Trajectory(dt=small_spde_cfg.dt)
    for step in det.steps:
        zero.record(step, FourierField.zeros(8))
    v = solve_ou(det, small_spde_cfg, sigma_path=zero, path_id=2)
    assert v.steps == [0, 5, 10]
    assert all(np.all(f.coeffs == 0) for f in v.fields)
