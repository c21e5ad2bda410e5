# tests/unit/test_fields.py
import numpy as np
import pytest

from ksdk.errors import ShapeError, SymmetryError
from ksdk.fields import FourierField, from_grid, grid_mean, grid_points, grid_size, to_grid
from ksdk.selftest import random_band_limited


def test_grid_size_and_points():
    assert grid_size(8) == 18
    x1, x2 = grid_points(8)
    assert x1.shape == (18, 18)
    assert x1[1, 0] == pytest.approx(1 / 18)
    assert x2[0, 1] == pytest.approx(1 / 18)


def test_constant_field_on_grid():
    f = FourierField.constant(6, 2.5)
    assert np.allclose(to_grid(f), 2.5, atol=1e-14)
    assert f.mean() == 2.5


def test_cosine_coefficients_and_grid_values():
    f = FourierField.cosine(8, (1, 0), 0.4)
    assert f.mode(1, 0) == pytest.approx(0.2)
    assert f.mode(-1, 0) == pytest.approx(0.2)
    x1, _ = grid_points(8)
    assert np.allclose(to_grid(f), 0.4 * np.cos(2 * np.pi * x1), atol=1e-13)


def test_grid_round_trip(rng):
    f = random_band_limited(rng, 8, 8)
    back = from_grid(to_grid(f), 8)
    assert np.allclose(back.coeffs, f.coeffs, atol=1e-13)


def test_from_grid_is_hermitian_bit_exactly(rng):
    u = rng.standard_normal((18, 18))
    f = from_grid(u)
    assert f.resolution == 8
    assert f.hermitian_defect() == 0.0


def test_vector_field_grid_shape(rng):
    v = random_band_limited(rng, 4, 4, components=2)
    assert to_grid(v).shape == (2, 10, 10)


def test_non_hermitian_field_is_rejected():
    f = FourierField.from_modes(4, {(1, 0): 1.0})
    assert not f.is_real
    with pytest.raises(SymmetryError):
        to_grid(f)


def test_mode_outside_resolution():
    assert FourierField.zeros(4).mode(5, 0) == 0j
    with pytest.raises(ShapeError):
        FourierField.from_modes(4, {(5, 0): 1.0})


def test_arithmetic_and_immutability():
    a = FourierField.constant(4, 1.0)
    b = FourierField.cosine(4, (0, 1), 0.5)
    c = (a + b) * 2.0 - b
    assert c.mode(0, 0) == pytest.approx(2.0)
    assert c.mode(0, 1) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        c.coeffs[0, 4, 4] = 0.0


def test_shape_mismatch_raises():
    with pytest.raises(ShapeError):
        FourierField.zeros(4) + FourierField.zeros(5)
    with pytest.raises(ShapeError):
        FourierField(np.zeros((1, 4, 4)))


def test_stack_split_round_trip():
    a, b = FourierField.constant(3, 1.0), FourierField.cosine(3, (1, 1), 0.3)
    s = FourierField.stack([a, b])
    assert s.components == 2
    parts = s.split()
    assert np.array_equal(parts[1].coeffs, b.coeffs)


def test_grid_mean_is_quadrature():
    assert grid_mean(np.full((10, 10), 3.0)) == 3.0
