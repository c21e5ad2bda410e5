# src/ksdk/particles.py
"""
Periodic Keller–Segel particle system

    dXⁱ = √2 dBⁱ + (χ/N) Σ_{j≠i} ∇𝒢(Xⁱ - Xʲ) dt   on T²,

with ∇𝒢 the truncated Fourier series of the mean-free Green's function, and the
mollified empirical density used to compare the particles with ρ_det.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence

import numpy as np

from ksdk.deterministic import Trajectory
from ksdk.errors import ConfigError, ShapeError
from ksdk.fields import FourierField, to_grid
from ksdk.noise import MollifierSymbol
from ksdk.rng import TAG_INITIAL, TAG_PARTICLES, CounterStream
from ksdk.spectral import gradient, green_potential, sobolev_norm

log = logging.getLogger(__name__)

# rows of the pairwise force evaluated at once
_FORCE_CHUNK = 256


@dataclass
class ParticleConfig:
    N: int = 1000
    chi: float = 0.0
    T: float = 0.25
    dt: float = 2.5e-4
    M: int = 32                  # resolution of the empirical density
    M_kernel: int = 32
    delta: Optional[float] = None  # None: natural scaling δ = N^{-1/2}
    gamma: float = -1.0
    record_every: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ConfigError(f"particles.N must be >= 1, got {self.N}")
        if self.dt <= 0 or self.T <= 0:
            raise ConfigError(f"particles.dt and particles.T must be > 0, got dt={self.dt}, T={self.T}")
        if self.delta is not None and self.delta <= 0:
            raise ConfigError(f"particles.delta must be > 0, got {self.delta}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def correlation_length(self) -> float:
        return self.delta if self.delta is not None else self.N ** -0.5


@dataclass(frozen=True, eq=False)
class ParticleState:
    positions: np.ndarray  # (N, 2) in [0,1)²
    step: int = 0
    dt: float = 0.0

    def __post_init__(self) -> None:
        p = np.asarray(self.positions, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2:
            raise ShapeError(f"positions must have shape (N, 2), got {p.shape}")
        p.setflags(write=False)
        object.__setattr__(self, "positions", p)

    @property
    def N(self) -> int:
        return self.positions.shape[0]

    @property
    def t(self) -> float:
        return self.step * self.dt


def wrap(x: np.ndarray) -> np.ndarray:
    """Map into [0,1); x mod 1 can round to 1.0 for tiny negative x."""
    y = np.mod(x, 1.0)
    y[y >= 1.0] = 0.0
    return y


# =========================
# Interaction kernel
# =========================

def grad_green_eval(x: np.ndarray, M_kernel: int = 32) -> np.ndarray:
    """Truncated ∇𝒢(x) = -Σ_{0<|ω|_∞≤M} 2πω sin(2π⟨ω,x⟩)/|2πω|², x of shape (2,) or (n, 2)."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    k = np.arange(-M_kernel, M_kernel + 1, dtype=float)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    k1, k2 = k1.ravel(), k2.ravel()
    nz = (k1 != 0) | (k2 != 0)
    k1, k2 = k1[nz], k2[nz]
    weight = 1.0 / (2 * np.pi * (k1**2 + k2**2))   # 2π/|2πω|²
    s = np.sin(2 * np.pi * (np.outer(pts[:, 0], k1) + np.outer(pts[:, 1], k2)))
    out = -np.stack([s @ (k1 * weight), s @ (k2 * weight)], axis=1)
    return out[0] if np.ndim(x) == 1 else out


@dataclass(frozen=True, eq=False)
class InteractionKernel:
    """∇𝒢 tabulated on a periodic grid, exactly odd, read by bilinear interpolation."""

    M_kernel: int
    table: np.ndarray  # (2, G, G), table[:, j1, j2] = ∇𝒢((j1, j2)/G)

    @classmethod
    def build(cls, M_kernel: int = 32, oversample: int = 4) -> "InteractionKernel":
        return _kernel(M_kernel, oversample)

    @property
    def side(self) -> int:
        return self.table.shape[-1]

    def __call__(self, d: np.ndarray) -> np.ndarray:
        """∇𝒢 at displacements d (..., 2), any real values (wrapped to the torus)."""
        G = self.side
        u = wrap(d) * G
        base = np.floor(u)
        f = u - base
        i0 = base.astype(np.int64) % G
        i1 = (i0 + 1) % G
        a0, b0 = i0[..., 0], i0[..., 1]
        a1, b1 = i1[..., 0], i1[..., 1]
        fx, fy = f[..., 0], f[..., 1]
        out = np.empty(d.shape, dtype=float)
        for c in range(2):
            t = self.table[c]
            out[..., c] = (
                (1 - fx) * (1 - fy) * t[a0, b0]
                + fx * (1 - fy) * t[a1, b0]
                + (1 - fx) * fy * t[a0, b1]
                + fx * fy * t[a1, b1]
            )
        return out


@lru_cache(maxsize=8)
def _kernel(M_kernel: int, oversample: int) -> InteractionKernel:
    # zero-padding the truncated series onto a finer resolution gives a finer table
    M_table = oversample * M_kernel
    c = np.zeros((2 * M_table + 1, 2 * M_table + 1), dtype=np.complex128)
    lo, hi = M_table - M_kernel, M_table + M_kernel + 1
    c[lo:hi, lo:hi] = 1.0
    table = to_grid(gradient(green_potential(FourierField(c))))
    # T(-x) sits at index (-j) mod G
    mirrored = np.roll(table[:, ::-1, ::-1], shift=1, axis=(1, 2))
    table = 0.5 * (table - mirrored)
    table.setflags(write=False)
    log.debug("interaction table %dx%d built for M_kernel=%d", table.shape[1], table.shape[2], M_kernel)
    return InteractionKernel(M_kernel=M_kernel, table=table)


def interaction_forces(positions: np.ndarray, kernel: InteractionKernel) -> np.ndarray:
    """(1/N) Σ_j ∇𝒢(Xⁱ - Xʲ); the j = i term vanishes since the table is odd."""
    N = positions.shape[0]
    out = np.zeros_like(positions)
    for start in range(0, N, _FORCE_CHUNK):
        rows = positions[start : start + _FORCE_CHUNK]
        d = rows[:, None, :] - positions[None, :, :]
        out[start : start + _FORCE_CHUNK] = kernel(d).sum(axis=1)
    return out / N


def particle_step(
    state: ParticleState,
    chi: float,
    dt: float,
    rng: np.random.Generator,
    kernel: Optional[InteractionKernel] = None,
) -> ParticleState:
    """Euler–Maruyama step, wrapped to the torus."""
    X = state.positions
    dX = math.sqrt(2.0 * dt) * rng.standard_normal(size=X.shape)
    if chi != 0 and state.N > 1:
        kernel = kernel or InteractionKernel.build()
        dX = dX + chi * dt * interaction_forces(X, kernel)
    return ParticleState(wrap(X + dX), step=state.step + 1, dt=dt)


# =========================
# Densities
# =========================

def empirical_density(state: ParticleState, moll: MollifierSymbol, M: Optional[int] = None) -> FourierField:
    """f̂(ω) = φ(δω)(1/N) Σᵢ e^{-2πi⟨ω,Xⁱ⟩}; label order does not affect the result."""
    M = moll.resolution if M is None else M
    if M != moll.resolution:
        raise ShapeError(f"mollifier at M={moll.resolution}, density requested at M={M}")
    X = state.positions[np.lexsort((state.positions[:, 1], state.positions[:, 0]))]
    k = np.arange(-M, M + 1, dtype=float)
    A = np.exp(-2j * np.pi * np.outer(X[:, 0], k))
    B = np.exp(-2j * np.pi * np.outer(X[:, 1], k))
    c = (A.T @ B) / state.N
    c = 0.5 * (c + np.conj(c[::-1, ::-1]))
    c[M, M] = 1.0
    return FourierField(moll.values * c, is_real=True)


def sample_positions(rho0: FourierField, N: int, rng: np.random.Generator) -> ParticleState:
    """N i.i.d. points from the grid density of ρ₀ (inverse CDF over cells, uniform inside a cell)."""
    u = np.maximum(to_grid(rho0), 0.0)
    G = u.shape[0]
    cdf = np.cumsum(u.ravel())
    cdf /= cdf[-1]
    cells = np.searchsorted(cdf, rng.uniform(size=N), side="right")
    cells = np.minimum(cells, G * G - 1)
    j1, j2 = np.divmod(cells, G)
    # cells are centred on the grid points
    jitter = rng.uniform(-0.5, 0.5, size=(N, 2))
    pos = (np.stack([j1, j2], axis=1) + jitter) / G
    return ParticleState(wrap(pos), step=0)


def mean_field_gap(
    state_path: Sequence[ParticleState],
    det_trajectory: Trajectory,
    moll: MollifierSymbol,
    gamma: float = -1.0,
) -> List[float]:
    """‖μ^N_δ(t) - ρ_det(t)‖_{H^γ} at the times of state_path."""
    out = []
    for state in state_path:
        rho = det_trajectory.field_at_step(state.step)
        out.append(sobolev_norm(empirical_density(state, moll) - rho, gamma))
    return out


def simulate_particles(
    rho0: FourierField,
    cfg: ParticleConfig,
    path_id: int = 0,
    kernel: Optional[InteractionKernel] = None,
) -> List[ParticleState]:
    """States at step 0, every record_every steps and at the final step."""
    stream = CounterStream(cfg.seed, path_id, TAG_PARTICLES)
    state = sample_positions(rho0, cfg.N, CounterStream(cfg.seed, path_id, TAG_INITIAL).at(0))
    state = ParticleState(state.positions, step=0, dt=cfg.dt)
    if cfg.chi != 0 and kernel is None:
        kernel = InteractionKernel.build(cfg.M_kernel)
    path = [state]
    n = cfg.n_steps
    for step in range(n):
        state = particle_step(state, cfg.chi, cfg.dt, stream.at(step), kernel)
        if (step + 1) % cfg.record_every == 0 or step + 1 == n:
            path.append(state)
    return path
