import random
from pathlib import Path

import numpy as np
import pytest

from ksdk.deterministic import DetConfig, solve_det, sqrt_det
from ksdk.fields import FourierField
from ksdk.spde import SpdeConfig


# setting fixed random seed for reproducibility
@pytest.fixture(autouse=True)
def _fix_seed():
    random.seed(1337)
    np.random.seed(1337)


@pytest.fixture
def rng():
    return np.random.default_rng(1337)


@pytest.fixture
def tmp_dir(tmp_path: Path):
    d = tmp_path / "work"
    d.mkdir()
    return d


@pytest.fixture
def rho_cos():
    """1 + 0.2 cos(2πx₁) at M = 8."""
    return FourierField.constant(8, 1.0) + FourierField.cosine(8, (1, 0), 0.2)


@pytest.fixture
def small_det_cfg():
    return DetConfig(chi=1.0, T=0.01, dt=1e-3, M=8)


@pytest.fixture
def small_spde_cfg():
    return SpdeConfig(eps=1e-3, delta=0.25, chi=1.0, T=0.01, dt=1e-3, M=8, record_every=5)


@pytest.fixture
def det_baseline(rho_cos, small_spde_cfg):
    """(ρ₀, ρ_det, √ρ_det) on the time grid of small_spde_cfg."""
    det = solve_det(rho_cos, small_spde_cfg.det_config())
    return rho_cos, det, sqrt_det(det)
