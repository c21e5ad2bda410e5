# src/ksdk/noise.py
"""
Vector-valued space-time white noise in its complex Brownian-mode form,
the mollifier ψ_δ and the stochastic convolution 🍭^δ = ∇·I[σ ξ^δ].

Increments follow dW^j(-ω) = conj(dW^j(ω)) with E|dW^j(ω)|² = dt; the only
self-conjugate mode of the lattice, ω = 0, is a real Gaussian of variance dt.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence

import numpy as np

from ksdk.deterministic import Trajectory
from ksdk.ensemble import run_ensemble
from ksdk.errors import DomainError, ShapeError
from ksdk.etd import stepper_for
from ksdk.fields import FourierField, wavenumbers
from ksdk.interfaces import NoiseSource
from ksdk.rng import CounterStream
from ksdk.spectral import dealias_cutoff, divergence, pointwise_product, sobolev_norm, symbols
from ksdk.stats import mean_and_stderr

log = logging.getLogger(__name__)


# =========================
# Mollifier
# =========================

@dataclass(frozen=True)
class CutoffProfile:
    """Radial bump φ(x) = exp(1 - 1/(1-|x|²)) on the unit ball, 0 outside."""

    def __call__(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = r < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
        return out


@dataclass(frozen=True, eq=False)
class MollifierSymbol:
    delta: float
    values: np.ndarray  # φ(δω) on the retained lattice, shape (2M+1, 2M+1)

    @classmethod
    def for_resolution(cls, M: int, delta: float) -> "MollifierSymbol":
        return _mollifier(M, float(delta))

    @property
    def resolution(self) -> int:
        return (self.values.shape[0] - 1) // 2


@lru_cache(maxsize=64)
def _mollifier(M: int, delta: float) -> MollifierSymbol:
    if delta <= 0:
        raise DomainError(f"correlation length must be > 0, got {delta}")
    k1, k2 = wavenumbers(M)
    values = CutoffProfile()(delta * np.sqrt(k1.astype(float) ** 2 + k2.astype(float) ** 2))
    values.setflags(write=False)
    return MollifierSymbol(delta=delta, values=values)


def white_symbol(M: int) -> MollifierSymbol:
    """Symbol ≡ 1 on the retained modes (unmollified noise)."""
    values = np.ones((2 * M + 1, 2 * M + 1))
    values.setflags(write=False)
    return MollifierSymbol(delta=0.0, values=values)


# =========================
# Increments
# =========================

@dataclass(frozen=True, eq=False)
class ModeNoiseIncrement:
    dW: np.ndarray  # (2, 2M+1, 2M+1) complex
    dt: float

    @property
    def resolution(self) -> int:
        return (self.dW.shape[1] - 1) // 2


def sample_increment(rng: np.random.Generator, M: int, dt: float) -> ModeNoiseIncrement:
    """Complex Brownian increments for both noise components over one step."""
    if dt <= 0:
        raise DomainError(f"time step must be > 0, got {dt}")
    n = 2 * M + 1
    g = rng.standard_normal(size=(2, 2, n, n))
    z = (g[0] + 1j * g[1]) * np.sqrt(dt / 2.0)
    # symmetrising keeps dW(-ω) = conj(dW(ω)) bit-exactly and turns ω = 0 into √2·Re z
    dW = (z + np.conj(z[:, ::-1, ::-1])) / np.sqrt(2.0)
    dW.setflags(write=False)
    return ModeNoiseIncrement(dW=dW, dt=dt)


def mollified_noise_field(incr: ModeNoiseIncrement, moll: MollifierSymbol) -> FourierField:
    """ξ^δ over the step as a white-in-time density: φ(δω)·dW^j(ω)/dt."""
    if incr.resolution != moll.resolution:
        raise ShapeError(f"noise at M={incr.resolution} vs mollifier at M={moll.resolution}")
    return FourierField(moll.values[None, :, :] * incr.dW / incr.dt, is_real=True)


def lolli_forcing(sigma: FourierField, incr: ModeNoiseIncrement, moll: MollifierSymbol) -> FourierField:
    """∇·(σ ξ^δ) with the dealiased product; mean-free."""
    if sigma.components != 1:
        raise ShapeError(f"σ must be a scalar field, got {sigma.components} components")
    return divergence(pointwise_product(sigma, mollified_noise_field(incr, moll)))


def lolli_step(
    ti: FourierField,
    sigma: FourierField,
    incr: ModeNoiseIncrement,
    moll: MollifierSymbol,
    dt: float,
) -> FourierField:
    """ti ← P_dt ti + φ₁ ∇·(σ ξ^δ)."""
    if ti.resolution != sigma.resolution:
        raise ShapeError(f"resolution mismatch: {ti.resolution} vs {sigma.resolution}")
    return stepper_for(ti.resolution, dt).step(ti, forcing=lolli_forcing(sigma, incr, moll))


def sigma_at(sigma_path: Trajectory, step: int) -> FourierField:
    return sigma_path.fields[step] if sigma_path.complete else sigma_path.field_at_step(step)


# =========================
# Norm scans
# =========================

def lolli_path(
    sigma_path: Trajectory,
    moll: MollifierSymbol,
    noise: NoiseSource,
    n_steps: int,
) -> List[FourierField]:
    """🍭^δ at steps 0..n_steps (ti₀ = 0)."""
    M = sigma_path.fields[0].resolution
    dt = sigma_path.dt
    ti = FourierField.zeros(M)
    out = [ti]
    for step in range(n_steps):
        incr = sample_increment(noise.at(step), M, dt)
        ti = lolli_step(ti, sigma_at(sigma_path, step), incr, moll, dt)
        out.append(ti)
    return out


def path_norm(path: Sequence[FourierField], dt: float, gamma: float) -> float:
    """‖u‖_{C_T H^γ} + ‖u‖_{L²_T H^{γ+1}}, time integral by trapezoid."""
    sup = max(sobolev_norm(u, gamma) for u in path)
    sq = np.array([sobolev_norm(u, gamma + 1.0) ** 2 for u in path])
    integral = float(np.sum(0.5 * (sq[1:] + sq[:-1])) * dt)
    return sup + float(np.sqrt(integral))


@dataclass(frozen=True)
class _ScanTask:
    delta: float
    path_id: int
    seed: int
    gamma: float
    n_steps: int


def _scan_worker(sigma_path: Trajectory, task: _ScanTask) -> float:
    moll = MollifierSymbol.for_resolution(sigma_path.fields[0].resolution, task.delta)
    path = lolli_path(sigma_path, moll, CounterStream(task.seed, task.path_id), task.n_steps)
    return path_norm(path, sigma_path.dt, task.gamma)


def lolli_norm_scan(
    delta_list: Sequence[float],
    gamma: float,
    sigma_path: Trajectory,
    n_samples: int,
    seed: int = 0,
    n_workers: int = 1,
) -> List[Dict[str, float]]:
    """Monte Carlo E‖🍭^δ‖_{C_T H^γ ∩ L²_T H^{γ+1}} per δ.

    Paths of different δ share their noise (same path ids), which keeps the
    comparison across δ free of independent sampling noise.
    """
    if not -1.0 <= gamma <= 0.0:
        raise DomainError(f"γ must lie in [-1, 0], got {gamma}")
    n_steps = sigma_path.steps[-1]
    tasks = [
        _ScanTask(delta=float(d), path_id=i, seed=seed, gamma=gamma, n_steps=n_steps)
        for d in delta_list
        for i in range(n_samples)
    ]
    norms = run_ensemble(_scan_worker, tasks, shared=sigma_path, n_workers=n_workers)
    rows = []
    for j, d in enumerate(delta_list):
        chunk = np.array(norms[j * n_samples : (j + 1) * n_samples])
        m, se = mean_and_stderr(chunk)
        rows.append({"delta": float(d), "estimate": m, "stderr": se, "n_samples": n_samples})
        log.debug("lolli scan δ=%.4g: %.6g ± %.2g", d, m, se)
    return rows


def white_mode_variance(M: int, t: float, dt: Optional[float] = None) -> np.ndarray:
    """E|∇·I[ξ](t,ω)|² per retained mode for unmollified noise: (1 - e^{-2t|2πω|²})/2.

    With dt given, the exact variance of the discrete recursion after round(t/dt)
    exponential steps is returned instead.
    """
    _, _, lam = symbols(M)
    if dt is None:
        return -np.expm1(-2.0 * t * lam) / 2.0
    stepper = stepper_for(M, dt)
    n = int(round(t / dt))
    per_step = stepper.weight**2 * lam / dt
    geometric = np.full_like(lam, float(n))
    nz = lam > 0
    geometric[nz] = -np.expm1(-2.0 * n * dt * lam[nz]) / -np.expm1(-2.0 * dt * lam[nz])
    return per_step * geometric


def lolli_mode_variance(M: int, delta: float, t: float, dt: Optional[float] = None) -> np.ndarray:
    """E|🍭^δ(t,ω)|² at σ ≡ 1 per retained mode: φ(δω)²(1 - e^{-2t|2πω|²})/2 (0 at ω = 0)."""
    phi = MollifierSymbol.for_resolution(M, delta).values
    return phi**2 * white_mode_variance(M, t, dt)


def lolli_mode_sum(M: int, delta: float, t: float, gamma: float = 0.0, dt: Optional[float] = None) -> float:
    """E‖🍭^δ_t‖²_{H^γ} at σ ≡ 1, summed over the modes kept by the dealiased product."""
    k1, k2, lam = symbols(M)
    K = dealias_cutoff(M)
    kept = (np.abs(k1) <= K) & (np.abs(k2) <= K)
    var = lolli_mode_variance(M, delta, t, dt)
    return float(np.sum(((1.0 + lam) ** gamma * var)[kept]))
