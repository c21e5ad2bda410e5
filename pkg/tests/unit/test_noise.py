# tests/unit/test_noise.py
import numpy as np
import pytest

from ksdk.deterministic import Trajectory
from ksdk.errors import DomainError, ShapeError
from ksdk.fields import FourierField
from ksdk.noise import (
    CutoffProfile,
    MollifierSymbol,
    lolli_mode_sum,
    lolli_mode_variance,
    lolli_norm_scan,
    lolli_path,
    mollified_noise_field,
    path_norm,
    sample_increment,
    white_mode_variance,
)
from ksdk.rng import TAG_NOISE, TAG_PARTICLES, CounterStream
from ksdk.spectral import dealias_cutoff, symbols


def _unit_sigma(M, dt, n_steps):
    traj = Trajectory(dt=dt)
    for step in range(n_steps + 1):
        traj.record(step, FourierField.constant(M, 1.0))
    return traj


def test_increment_is_hermitian_bit_exactly():
    M = 6
    incr = sample_increment(CounterStream(7).at(0), M, 1e-3)
    dW = incr.dW
    assert dW.shape == (2, 13, 13)
    assert np.array_equal(dW, np.conj(dW[:, ::-1, ::-1]))
    assert np.all(dW[:, M, M].imag == 0.0)


def test_increment_variance(rng):
    M, dt = 4, 1e-2
    draws = np.stack([sample_increment(rng, M, dt).dW for _ in range(4000)])
    var = np.mean(np.abs(draws) ** 2, axis=0)
    # every mode, ω = 0 included, has E|dW|² = dt
    assert np.allclose(var, dt, rtol=0.15)


def test_streams_are_addressable():
    a = sample_increment(CounterStream(3, 1).at(5), 4, 1e-3).dW
    b = sample_increment(CounterStream(3, 1).at(5), 4, 1e-3).dW
    c = sample_increment(CounterStream(3, 2).at(5), 4, 1e-3).dW
    d = sample_increment(CounterStream(3, 1, TAG_PARTICLES).at(5), 4, 1e-3).dW
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
    assert CounterStream(3, 1).with_tag(TAG_NOISE) == CounterStream(3, 1)


def test_mollifier_profile():
    phi = CutoffProfile()
    assert phi(np.array([0.0]))[0] == 1.0
    assert phi(np.array([1.0, 2.0])).tolist() == [0.0, 0.0]
    moll = MollifierSymbol.for_resolution(8, 0.1)
    assert moll.resolution == 8
    assert moll.values[8, 8] == 1.0
    # |δω| ≥ 1 is cut off
    assert moll.values[8 + 8, 8 + 8] == 0.0


@pytest.mark.parametrize("delta", [0.0, -0.5])
def test_mollifier_rejects_nonpositive_delta(delta):
    with pytest.raises(DomainError):
        MollifierSymbol.for_resolution(4, delta)


def test_noise_field_resolution_mismatch():
    incr = sample_increment(CounterStream(0).at(0), 4, 1e-3)
    with pytest.raises(ShapeError):
        mollified_noise_field(incr, MollifierSymbol.for_resolution(5, 0.2))


def test_discrete_variance_approaches_continuum():
    M = 4
    cont = white_mode_variance(M, 0.01)
    disc = white_mode_variance(M, 0.01, dt=1e-4)
    assert disc[M, M] == 0.0
    assert np.allclose(disc, cont, rtol=1e-2)


def test_lolli_mode_sum_decreases_with_delta():
    sums = [lolli_mode_sum(8, d, 0.05) for d in (0.05, 0.1, 0.2)]
    assert sums[0] > sums[1] > sums[2] > 0


def test_stochastic_convolution_matches_ito_isometry():
    M, dt, n_steps, delta = 4, 1e-3, 10, 0.25
    sigma = _unit_sigma(M, dt, n_steps)
    moll = MollifierSymbol.for_resolution(M, delta)
    K = dealias_cutoff(M)
    k1, k2, _ = symbols(M)
    high = (np.abs(k1) > K) | (np.abs(k2) > K)
    energies = []
    for path_id in range(400):
        ti = lolli_path(sigma, moll, CounterStream(11, path_id), n_steps)[-1]
        assert np.all(ti.coeffs[0][high] == 0)
        energies.append(float(np.sum(np.abs(ti.coeffs) ** 2)))
    expected = lolli_mode_sum(M, delta, n_steps * dt, dt=dt)
    mean = np.mean(energies)
    stderr = np.std(energies, ddof=1) / np.sqrt(len(energies))
    assert abs(mean - expected) < 4 * stderr


def test_lolli_variance_vanishes_at_zero_mode():
    var = lolli_mode_variance(6, 0.2, 0.1)
    assert var[6, 6] == 0.0
    assert np.all(var >= 0)


def test_path_norm_of_zero_path():
    path = [FourierField.zeros(4)] * 5
    assert path_norm(path, 1e-3, -0.5) == 0.0


def test_norm_scan_rejects_gamma_out_of_range():
    sigma = _unit_sigma(4, 1e-3, 2)
    with pytest.raises(DomainError):
        lolli_norm_scan([0.2], 0.5, sigma, n_samples=2)


def test_norm_scan_rows():
    sigma = _unit_sigma(4, 1e-3, 5)
    rows = lolli_norm_scan([0.4, 0.2], -0.5, sigma, n_samples=8, seed=3)
    assert [r["delta"] for r in rows] == [0.4, 0.2]
    assert all(r["n_samples"] == 8 for r in rows)
    # shared noise across δ: more modes survive at smaller δ
    assert rows[1]["estimate"] > rows[0]["estimate"]


def test_unit_correlation_length_keeps_only_the_mean_mode(rng):
    M, dt = 6, 1e-3
    incr = sample_increment(rng, M, dt)
    xi = mollified_noise_field(incr, MollifierSymbol.for_resolution(M, 1.0))
    expected = np.zeros_like(incr.dW)
    expected[:, M, M] = incr.dW[:, M, M] / dt
    assert np.array_equal(xi.coeffs, expected)
    assert np.any(xi.coeffs[:, M, M] != 0)
