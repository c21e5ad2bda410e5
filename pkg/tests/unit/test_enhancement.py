# tests/unit/test_enhancement.py
import math

import numpy as np
import pytest

from ksdk.deterministic import Trajectory
from ksdk.enhancement import (
    DEFAULT_ALPHA,
    EnhancementState,
    enhancement_from_h,
    enhancement_tuple,
    evolve_enhancement,
    path_norms,
)
from ksdk.fields import FourierField, to_grid
from ksdk.noise import MollifierSymbol, lolli_path
from ksdk.rng import CounterStream
from ksdk.selftest import random_band_limited
from ksdk.spectral import l2_norm


def _unit_sigma(M, dt, n_steps):
    traj = Trajectory(dt=dt)
    for step in range(n_steps + 1):
        traj.record(step, FourierField.constant(M, 1.0))
    return traj


def _control(M, n_steps, scale=1.0):
    h = FourierField.stack([FourierField.cosine(M, (1, 0), 1.0), FourierField.cosine(M, (1, 1), 0.5)])
    return [h * scale] * n_steps


def test_zero_state_gives_zero_tuple():
    tup = enhancement_tuple(EnhancementState.zeros(6))
    assert tup.tp.components == 2
    assert tup.tc.components == 4
    for name in DEFAULT_ALPHA:
        assert np.all(getattr(tup, name).coeffs == 0)


def test_first_component_is_the_stochastic_convolution():
    M, dt, n = 6, 1e-3, 8
    sigma = _unit_sigma(M, dt, n)
    moll = MollifierSymbol.for_resolution(M, 0.2)
    ((t, tup),) = evolve_enhancement(sigma, moll, CounterStream(5, 2), n)
    ti = lolli_path(sigma, moll, CounterStream(5, 2), n)[-1]
    assert t == pytest.approx(n * dt)
    assert np.array_equal(tup.ti.coeffs, ti.coeffs)


def test_record_steps():
    M, dt, n = 4, 1e-3, 6
    sigma = _unit_sigma(M, dt, n)
    out = evolve_enhancement(sigma, MollifierSymbol.for_resolution(M, 0.3), CounterStream(0), n, record_steps=[0, 3, 6])
    assert [round(t / dt) for t, _ in out] == [0, 3, 6]


def test_control_enhancement_scales_homogeneously():
    M, dt, n, c = 6, 1e-3, 5, 2.0
    sigma = _unit_sigma(M, dt, n)
    (_, base), = enhancement_from_h(_control(M, n), sigma)
    (_, scaled), = enhancement_from_h(_control(M, n, c), sigma)
    expected = base.scaled_by(c)
    for name in DEFAULT_ALPHA:
        a, b = getattr(scaled, name).coeffs, getattr(expected, name).coeffs
        assert np.allclose(a, b, rtol=1e-10, atol=1e-12 * max(1.0, float(np.max(np.abs(b)))))


def test_norms_keys_and_override():
    M, dt, n = 6, 1e-3, 5
    (_, tup), = enhancement_from_h(_control(M, n), _unit_sigma(M, dt, n))
    norms = tup.norms()
    assert set(norms) == {"ti", "ty", "tp", "tc"}
    assert norms["ti"] > 0
    # higher target regularity weighs the high blocks more
    assert tup.norms({"ti": 0.5})["ti"] >= norms["ti"]


def _constant_sigma(sigma, dt, n_steps):
    traj = Trajectory(dt=dt)
    for step in range(n_steps + 1):
        traj.record(step, sigma)
    return traj


def test_zero_noise_amplitude_gives_zero_tuples():
    M, dt, n = 6, 1e-3, 5
    zero = _constant_sigma(FourierField.zeros(M), dt, n)
    path = evolve_enhancement(zero, MollifierSymbol.for_resolution(M, 0.2), CounterStream(1), n, record_steps=[2, 5])
    assert len(path) == 2
    for _, tup in path:
        for name in DEFAULT_ALPHA:
            assert np.all(getattr(tup, name).coeffs == 0)


def test_second_component_is_mean_free():
    M, dt, n = 6, 1e-3, 6
    path = evolve_enhancement(
        _unit_sigma(M, dt, n), MollifierSymbol.for_resolution(M, 0.2), CounterStream(9), n, record_steps=range(1, n + 1)
    )
    for _, tup in path:
        assert tup.ty.mode(0, 0) == 0
    assert l2_norm(path[-1][1].ty) > 0


def test_control_stochastic_convolution_of_one_mode():
    # constant forcing is integrated exactly: |🍭^h(t, (1,0))| = π(1 - e^{-λt})/λ for h = (cos 2πx₁, 0)
    M, dt, n = 6, 1e-3, 8
    h = FourierField.stack([FourierField.cosine(M, (1, 0), 1.0), FourierField.zeros(M)])
    path = enhancement_from_h([h] * n, _unit_sigma(M, dt, n), record_steps=range(1, n + 1))
    lam = (2 * math.pi) ** 2
    for t, tup in path:
        assert abs(tup.ti.mode(1, 0)) == pytest.approx(math.pi * -math.expm1(-lam * t) / lam, rel=1e-12)


def test_control_stochastic_convolution_energy_bound(rng):
    # ‖🍭^h_t‖²_{L²} ≤ ½ ‖σ‖²_∞ Σ_{s<t} dt ‖h_s‖²_{L²}
    M, dt, n = 8, 1e-3, 12
    sigma = FourierField.constant(M, 1.0) + FourierField.cosine(M, (1, 0), 0.3)
    sup_sigma = float(np.max(np.abs(to_grid(sigma))))
    h = [random_band_limited(rng, M, 3, components=2) for _ in range(n)]
    path = enhancement_from_h(h, _constant_sigma(sigma, dt, n), record_steps=range(1, n + 1))
    for t, tup in path:
        steps = int(round(t / dt))
        budget = 0.5 * sup_sigma**2 * dt * sum(l2_norm(hs) ** 2 for hs in h[:steps])
        assert 0 < l2_norm(tup.ti) ** 2 <= budget * (1 + 1e-12)


def test_path_norms_take_the_largest_value_over_time():
    M, dt, n = 6, 1e-3, 6
    path = evolve_enhancement(
        _unit_sigma(M, dt, n), MollifierSymbol.for_resolution(M, 0.2), CounterStream(3), n, record_steps=range(n + 1)
    )
    sup = path_norms(path)
    final = path[-1][1].norms()
    assert set(sup) == set(final)
    for name in sup:
        assert sup[name] == max(tup.norms()[name] for _, tup in path)
        assert sup[name] >= final[name]
    assert path_norms(path[:1]) == {name: 0.0 for name in DEFAULT_ALPHA}
