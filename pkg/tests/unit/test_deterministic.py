# tests/unit/test_deterministic.py
import math

import numpy as np
import pytest

from ksdk.deterministic import (
    DetConfig,
    Trajectory,
    det_step,
    energy_residual,
    solve_det,
    sqrt_det,
    validate_density,
)
from ksdk.errors import ConfigError, GridMismatchError, InputError, PositivityError
from ksdk.fields import FourierField, to_grid
from ksdk.initial import InitialCondition, make_initial
from ksdk.spectral import l2_norm


def test_config_validation():
    with pytest.raises(ConfigError):
        DetConfig(dt=0.0)
    with pytest.raises(ConfigError):
        DetConfig(record_every=0)
    assert DetConfig(T=0.25, dt=2.5e-4).n_steps == 1000


@pytest.mark.parametrize("chi", [0.0, 1.0, 10.0])
def test_uniform_density_is_a_fixed_point(chi):
    rho0 = FourierField.constant(8, 1.0)
    traj = solve_det(rho0, DetConfig(chi=chi, T=0.01, dt=1e-3, M=8))
    for f in traj.fields:
        assert np.max(np.abs(f.coeffs - rho0.coeffs)) <= 1e-12


def test_heat_modes_at_zero_chi():
    rho0 = FourierField.constant(8, 1.0) + FourierField.cosine(8, (1, 2), 0.3)
    cfg = DetConfig(chi=0.0, T=0.02, dt=1e-3, M=8)
    traj = solve_det(rho0, cfg)
    for t, f in zip(traj.times, traj.fields):
        expected = 0.15 * math.exp(-t * 4 * math.pi**2 * 5)
        assert abs(f.mode(1, 2) - expected) < 1e-8


def test_mass_is_conserved(rho_cos, small_det_cfg):
    traj = solve_det(rho_cos, small_det_cfg)
    assert np.max(np.abs(np.asarray(traj.diagnostics["mass"]) - 1.0)) <= 1e-13
    assert len(traj.diagnostics["t"]) == small_det_cfg.n_steps + 1


def test_det_step_is_deterministic(rho_cos, small_det_cfg):
    a = det_step(rho_cos, small_det_cfg)
    b = det_step(rho_cos, small_det_cfg)
    assert np.array_equal(a.coeffs, b.coeffs)


def test_record_every_keeps_final_field(rho_cos):
    cfg = DetConfig(chi=1.0, T=0.01, dt=1e-3, M=8, record_every=4)
    traj = solve_det(rho_cos, cfg)
    assert traj.steps == [0, 4, 8, 10]
    assert not traj.complete
    with pytest.raises(GridMismatchError):
        traj.field_at_step(3)


def test_validate_density():
    with pytest.raises(InputError):
        validate_density(FourierField.constant(4, 2.0))
    with pytest.raises(InputError):
        validate_density(FourierField.constant(4, 1.0) + FourierField.cosine(4, (1, 0), 2.5))
    with pytest.raises(InputError):
        validate_density(FourierField.zeros(4, components=2))


def test_threshold_must_exceed_initial_norm(rho_cos):
    with pytest.raises(InputError):
        solve_det(rho_cos, DetConfig(M=8, T=0.01, dt=1e-3, blowup_L2_threshold=0.5))


def test_blow_up_is_detected(rho_cos):
    # χ = 200 makes the first mode linearly unstable (growth ≈ χ - 4π²)
    cfg = DetConfig(chi=200.0, T=0.05, dt=1e-3, M=8, blowup_L2_threshold=1.5)
    traj = solve_det(rho_cos, cfg)
    assert traj.blew_up_at is not None
    assert 0 < traj.blew_up_at <= cfg.T
    assert traj.times[-1] < traj.blew_up_at


def test_energy_residual_shrinks_second_order():
    rho0 = FourierField.constant(8, 1.0) + FourierField.cosine(8, (1, 0), 0.2)
    worst = []
    for dt in (1e-3, 5e-4):
        cfg = DetConfig(chi=1.0, T=0.05, dt=dt, M=8, scheme="etd2")
        worst.append(np.max(np.abs(energy_residual(solve_det(rho0, cfg), cfg.chi))))
    assert worst[0] / worst[1] >= 3.5


def test_sqrt_det(rho_cos, small_det_cfg):
    traj = solve_det(rho_cos, small_det_cfg)
    sigma = sqrt_det(traj)
    assert sigma.steps == traj.steps
    assert np.allclose(to_grid(sigma.fields[0]) ** 2, to_grid(rho_cos), atol=1e-7)
    assert min(sigma.diagnostics["min_rho"]) > 0.7


def test_sqrt_det_floor(rho_cos, small_det_cfg):
    with pytest.raises(PositivityError):
        sqrt_det(solve_det(rho_cos, small_det_cfg), floor=0.9)


def test_trajectory_record_order():
    traj = Trajectory(dt=0.1)
    traj.record(0, FourierField.constant(2, 1.0))
    with pytest.raises(AssertionError):
        traj.record(0, FourierField.constant(2, 1.0))


@pytest.mark.parametrize("kind", ["uniform", "cosine", "bump"])
def test_initial_conditions_are_unit_mass_densities(kind):
    rho = make_initial(InitialCondition(kind=kind), 8)
    validate_density(rho)
    assert rho.mean() == pytest.approx(1.0, abs=1e-12)


def test_initial_condition_errors():
    with pytest.raises(InputError):
        make_initial(InitialCondition(kind="cosine", amplitude=1.2), 8)
    with pytest.raises(InputError):
        make_initial(InitialCondition(kind="cosine", mode=(9, 0)), 8)


def test_etd2_self_convergence_is_second_order():
    rho0 = FourierField.constant(8, 1.0) + FourierField.cosine(8, (1, 0), 0.3) + FourierField.cosine(8, (1, 1), 0.2)
    finals = [
        solve_det(rho0, DetConfig(chi=5.0, T=0.05, dt=dt, M=8, scheme="etd2")).final
        for dt in (2e-3, 1e-3, 5e-4)
    ]
    coarse = l2_norm(finals[0] - finals[1])
    fine = l2_norm(finals[1] - finals[2])
    assert fine > 0
    assert math.log2(coarse / fine) >= 1.8


def test_positivity_persists(rho_cos):
    rho0 = rho_cos + FourierField.cosine(8, (1, 1), 0.3)
    traj = solve_det(rho0, DetConfig(chi=5.0, T=0.05, dt=1e-3, M=8))
    assert traj.blew_up_at is None
    assert traj.steps[-1] == 50
    assert min(traj.min_value_path) > 0
    assert traj.min_value_path[0] < 1.0
