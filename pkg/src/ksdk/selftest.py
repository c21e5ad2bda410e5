# src/ksdk/selftest.py
"""Built-in oracle suite: exact identities that any correct build reproduces in seconds."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from ksdk.deterministic import DetConfig, solve_det, sqrt_det
from ksdk.fields import FourierField, grid_mean, to_grid
from ksdk.noise import sample_increment
from ksdk.particles import InteractionKernel
from ksdk.rng import CounterStream
from ksdk.spde import rate_functional, skeleton_solve
from ksdk.spectral import (
    dealias_cutoff,
    green_potential,
    heat_propagate,
    l2_norm,
    laplacian,
    paraproduct,
    pointwise_product,
    resonant,
)

log = logging.getLogger(__name__)


@dataclass
class CheckResult:
    check: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value)) and self.value <= self.tolerance

    def to_dict(self) -> dict:
        return {"check": self.check, "value": self.value, "tolerance": self.tolerance, "passed": self.passed}


def random_band_limited(rng: np.random.Generator, M: int, band: int, components: int = 1) -> FourierField:
    """Real field with Gaussian coefficients on |ω|_∞ ≤ band."""
    n = 2 * M + 1
    z = rng.standard_normal((components, n, n)) + 1j * rng.standard_normal((components, n, n))
    k = np.abs(np.arange(-M, M + 1))
    outside = (k[:, None] > band) | (k[None, :] > band)
    z[:, outside] = 0.0
    return FourierField(0.5 * (z + np.conj(z[:, ::-1, ::-1])), is_real=True)


def _rel(a: FourierField, b: FourierField) -> float:
    return l2_norm(a - b) / max(l2_norm(b), 1e-300)


def _bony(rng: np.random.Generator, M: int) -> float:
    band = dealias_cutoff(M) // 2
    worst = 0.0
    for _ in range(5):
        f, g = random_band_limited(rng, M, band), random_band_limited(rng, M, band)
        rebuilt = paraproduct(f, g) + paraproduct(g, f) + resonant(f, g)
        worst = max(worst, _rel(rebuilt, pointwise_product(f, g)))
    return worst


def _green(rng: np.random.Generator, M: int) -> float:
    worst = 0.0
    for _ in range(5):
        f = random_band_limited(rng, M, M)
        centred = f - FourierField.constant(M, f.mean())
        worst = max(worst, _rel(-laplacian(green_potential(f)), centred))
    return worst


def _parseval(rng: np.random.Generator, M: int) -> float:
    worst = 0.0
    for _ in range(5):
        f = random_band_limited(rng, M, M)
        worst = max(worst, abs(l2_norm(f) ** 2 - grid_mean(to_grid(f) ** 2)) / l2_norm(f) ** 2)
    return worst


def _semigroup(rng: np.random.Generator, M: int) -> float:
    f = random_band_limited(rng, M, M)
    return _rel(heat_propagate(heat_propagate(f, 0.003), 0.004), heat_propagate(f, 0.007))


def _uniform_fixed_point(M: int) -> float:
    traj = solve_det(FourierField.constant(M, 1.0), DetConfig(chi=5.0, T=0.01, dt=2.5e-4, M=M))
    return max(float(np.max(np.abs(f.coeffs - FourierField.constant(M, 1.0).coeffs))) for f in traj.fields)


def _heat_modes(M: int) -> float:
    rho0 = FourierField.constant(M, 1.0) + FourierField.cosine(M, (1, 0), 0.3)
    cfg = DetConfig(chi=0.0, T=0.02, dt=2.5e-4, M=M)
    final = solve_det(rho0, cfg).final
    exact = 0.15 * np.exp(-cfg.n_steps * cfg.dt * (2 * np.pi) ** 2)
    return abs(final.mode(1, 0) - exact)


def _mass_drift(M: int) -> float:
    rho0 = FourierField.constant(M, 1.0) + FourierField.cosine(M, (1, 1), 0.3)
    traj = solve_det(rho0, DetConfig(chi=1.0, T=0.02, dt=2.5e-4, M=M))
    return float(np.max(np.abs(np.asarray(traj.diagnostics["mass"]) - 1.0)))


def _kernel_odd(rng: np.random.Generator) -> float:
    kernel = InteractionKernel.build(8)
    d = rng.uniform(-1.0, 1.0, size=(200, 2))
    return float(np.max(np.abs(kernel(d) + kernel(-d))))


def _noise_symmetry(M: int) -> float:
    stream = CounterStream(seed=7)
    return max(FourierField(sample_increment(stream.at(step), M, 1e-3).dW).hermitian_defect() for step in range(5))


def _skeleton_zero_control(M: int) -> float:
    rho0 = FourierField.constant(M, 1.0) + FourierField.cosine(M, (0, 1), 0.2)
    cfg = DetConfig(chi=1.0, T=0.01, dt=2.5e-4, M=M)
    det = solve_det(rho0, cfg)
    h = [FourierField.zeros(M, 2)] * cfg.n_steps
    sk = skeleton_solve(rho0, h, det, cfg, sqrt_det(det))
    same = all(np.array_equal(a.coeffs, b.coeffs) for a, b in zip(sk.fields, det.fields))
    return 0.0 if same and len(sk.fields) == len(det.fields) else 1.0


def _rate_homogeneity(rng: np.random.Generator, M: int) -> float:
    h = [random_band_limited(rng, M, 4, components=2) for _ in range(6)]
    c = 2.5
    base = rate_functional(h, 0.01)
    return abs(rate_functional([x * c for x in h], 0.01) - c**2 * base) / base


def run_selftest(M: int = 8, seed: int = 0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    checks: List[Tuple[str, Callable[[], float], float]] = [
        ("bony_reconstruction", lambda: _bony(rng, M), 1e-10),
        ("green_round_trip", lambda: _green(rng, M), 1e-10),
        ("parseval", lambda: _parseval(rng, M), 1e-10),
        ("heat_semigroup", lambda: _semigroup(rng, M), 1e-12),
        ("uniform_fixed_point", lambda: _uniform_fixed_point(M), 1e-12),
        ("heat_mode_exact", lambda: _heat_modes(M), 1e-8),
        ("mass_drift", lambda: _mass_drift(M), 1e-13),
        ("kernel_odd", lambda: _kernel_odd(rng), 1e-10),
        ("noise_conjugate_symmetry", lambda: _noise_symmetry(M), 0.0),
        ("skeleton_zero_control", lambda: _skeleton_zero_control(M), 0.0),
        ("rate_homogeneity", lambda: _rate_homogeneity(rng, M), 1e-12),
    ]
    results = []
    for name, fn, tol in checks:
        r = CheckResult(name, float(fn()), tol)
        log.info("selftest %-26s %.3e (tol %.0e) %s", name, r.value, tol, "ok" if r.passed else "FAIL")
        results.append(r)
    return results
