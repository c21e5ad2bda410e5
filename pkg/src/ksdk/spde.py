# src/ksdk/spde.py
"""
Stochastic and controlled Keller–Segel dynamics driven by √ρ_det:

  additive-noise SPDE   ρ = Pρ₀ - χ∇·I[ρ∇Φ_ρ] - ε^{1/2} ∇·I[σ ξ^δ]
  generalized OU        (∂_t - Δ)v = -χ∇·(v∇Φ_det) - χ∇·(ρ_det∇Φ_v) - ∇·(σ ξ),   v₀ = 0
  skeleton              ρ^h = Pρ₀ - χ∇·I[ρ^h∇Φ_{ρ^h}] - ∇·I[σ h]

All three reuse the exponential stepper of the deterministic solver, so ε = 0
and h ≡ 0 reproduce solve_det bit for bit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ksdk.deterministic import DetConfig, KellerSegelDrift, Trajectory, solve_det, sqrt_det, validate_density
from ksdk.errors import BlowUpSignal, ConfigError, GridMismatchError, InputError
from ksdk.etd import stepper_for
from ksdk.fields import FourierField, to_grid
from ksdk.interfaces import NoiseSource
from ksdk.noise import MollifierSymbol, ModeNoiseIncrement, lolli_forcing, sample_increment, sigma_at, white_symbol
from ksdk.rng import TAG_NOISE, TAG_OU_NOISE, CounterStream
from ksdk.spectral import divergence, gradient, green_potential, l2_norm, pointwise_product, sobolev_norm

log = logging.getLogger(__name__)


# =========================
# Config model
# =========================

@dataclass
class SpdeConfig:
    eps: float = 1e-3
    delta: float = 0.1
    chi: float = 1.0
    T: float = 0.25
    dt: float = 2.5e-4
    M: int = 32
    seed: int = 0
    blowup_threshold: float = 1e3
    negativity_level_L: float = 10.0
    gamma: float = 0.0            # regularity of the gap norm ‖ρ - ρ_det‖_{H^γ}
    positivity_floor: float = 1e-8
    record_every: int = 50

    def __post_init__(self) -> None:
        # ε = 0 is accepted as the deterministic endpoint of a schedule
        if self.eps < 0:
            raise ConfigError(f"spde.eps must be >= 0, got {self.eps}")
        if self.delta <= 0:
            raise ConfigError(f"spde.delta must be > 0, got {self.delta}")
        if self.dt <= 0 or self.T <= 0:
            raise ConfigError(f"spde.dt and spde.T must be > 0, got dt={self.dt}, T={self.T}")
        if self.record_every < 1:
            raise ConfigError(f"spde.record_every must be >= 1, got {self.record_every}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def scaling_diagnostics(self, gamma: Optional[float] = None) -> Dict[str, float]:
        """ε^{1/2}δ^{-γ-2} (regular regime) and ε·log(1/δ) (rough regime)."""
        g = self.gamma if gamma is None else gamma
        return {
            "regular": math.sqrt(self.eps) * self.delta ** (-g - 2.0),
            "rough": self.eps * math.log(1.0 / self.delta) if self.delta < 1 else 0.0,
        }

    def det_config(self) -> DetConfig:
        """Deterministic counterpart on the same time grid with every step stored (σ is read per step)."""
        return DetConfig(
            chi=self.chi,
            T=self.T,
            dt=self.dt,
            M=self.M,
            blowup_L2_threshold=self.blowup_threshold,
            positivity_floor=self.positivity_floor,
            scheme="etd1",
            record_every=1,
        )

    def mollifier(self) -> MollifierSymbol:
        return MollifierSymbol.for_resolution(self.M, self.delta)


# =========================
# Paths
# =========================

@dataclass
class StoppedPath:
    trajectory: Trajectory
    stopping_time: float
    negative_part_norm_path: List[float] = field(default_factory=list)  # per step
    gap_path: List[float] = field(default_factory=list)                 # ‖ρ_t - ρ_det(t)‖_{H^γ} per step

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.negative_part_norm_path)) * self.trajectory.dt

    def _until_stop(self, series: Sequence[float]) -> np.ndarray:
        values = np.asarray(series, dtype=float)
        return values[self.times <= self.stopping_time + 1e-12]

    def sup_negative_part(self) -> float:
        """‖ρ⁻‖_{C_{S_L} L²}."""
        return float(np.max(self._until_stop(self.negative_part_norm_path), initial=0.0))

    def sup_gap(self) -> float:
        """sup_{t ≤ S_L} ‖ρ_t - ρ_det(t)‖_{H^γ}."""
        return float(np.max(self._until_stop(self.gap_path), initial=0.0))

    @property
    def blew_up_at(self) -> Optional[float]:
        return self.trajectory.blew_up_at


def negative_part_norm(rho: FourierField) -> float:
    """‖min(0, ρ)‖_{L²} by grid quadrature."""
    u = to_grid(rho)
    return float(np.sqrt(np.mean(np.minimum(u, 0.0) ** 2)))


def _check_grid(det_trajectory: Trajectory, dt: float, M: int) -> None:
    if not math.isclose(det_trajectory.dt, dt, rel_tol=1e-12):
        raise GridMismatchError(f"deterministic trajectory has dt={det_trajectory.dt}, solver uses dt={dt}")
    if not det_trajectory.complete:
        raise GridMismatchError("deterministic trajectory must store every step (record_every = 1)")
    if det_trajectory.fields[0].resolution != M:
        raise GridMismatchError(f"deterministic trajectory at M={det_trajectory.fields[0].resolution}, solver at M={M}")


# =========================
# Additive-noise SPDE
# =========================

def spde_step(
    rho: FourierField,
    sigma: Optional[FourierField],
    incr: Optional[ModeNoiseIncrement],
    cfg: SpdeConfig,
    moll: Optional[MollifierSymbol] = None,
) -> FourierField:
    """ETD step of ρ with the Keller–Segel drift and the forcing -ε^{1/2}∇·(σ ξ^δ)."""
    forcing = None
    if cfg.eps > 0:
        assert incr is not None and sigma is not None, "noise increment and σ are required for eps > 0"
        forcing = lolli_forcing(sigma, incr, moll or cfg.mollifier()) * (-math.sqrt(cfg.eps))
    out = stepper_for(rho.resolution, cfg.dt, "etd1").step(rho, drift=KellerSegelDrift(cfg.chi), forcing=forcing)
    if not out.is_finite():
        raise BlowUpSignal("non-finite coefficients in stochastic Keller–Segel step")
    return out


def solve_spde(
    rho0: FourierField,
    det_trajectory: Trajectory,
    cfg: SpdeConfig,
    noise: Optional[NoiseSource] = None,
    sigma_path: Optional[Trajectory] = None,
    path_id: int = 0,
) -> StoppedPath:
    """One path of ρ^(ε)_δ with blow-up detection and S_L bookkeeping.

    The path runs to T (or blow-up); S_L = min(T, L, first t with ‖ρ_t‖_{L²} > L).
    """
    validate_density(rho0)
    _check_grid(det_trajectory, cfg.dt, cfg.M)
    if sigma_path is None and cfg.eps > 0:
        sigma_path = sqrt_det(det_trajectory, cfg.positivity_floor)
    if noise is None:
        noise = CounterStream(cfg.seed, path_id, TAG_NOISE)
    moll = cfg.mollifier()
    n = min(cfg.n_steps, det_trajectory.steps[-1])

    traj = Trajectory(dt=cfg.dt)
    traj.record(0, rho0)
    neg = [negative_part_norm(rho0)]
    gap = [sobolev_norm(rho0 - det_trajectory.fields[0], cfg.gamma)]
    level = cfg.negativity_level_L
    stop = min(cfg.T, level) if l2_norm(rho0) <= level else 0.0

    rho = rho0
    for step in range(n):
        t = (step + 1) * cfg.dt
        incr = None
        sigma = None
        if cfg.eps > 0:
            assert sigma_path is not None
            incr = sample_increment(noise.at(step), cfg.M, cfg.dt)
            sigma = sigma_at(sigma_path, step)
        try:
            rho = spde_step(rho, sigma, incr, cfg, moll)
        except BlowUpSignal:
            traj.blew_up_at = t
            break
        norm = l2_norm(rho)
        if norm > cfg.blowup_threshold:
            traj.blew_up_at = t
            break
        if norm > level and t < stop:
            stop = t
        neg.append(negative_part_norm(rho))
        gap.append(sobolev_norm(rho - det_trajectory.fields[step + 1], cfg.gamma))
        if (step + 1) % cfg.record_every == 0 or step + 1 == n:
            traj.record(step + 1, rho)

    if traj.blew_up_at is not None:
        stop = min(stop, traj.blew_up_at)
        log.debug("path %d blew up at t=%.5g", path_id, traj.blew_up_at)
    traj.diagnostics["negative_part"] = neg
    traj.diagnostics["gap"] = gap
    return StoppedPath(trajectory=traj, stopping_time=stop, negative_part_norm_path=neg, gap_path=gap)


# =========================
# Generalized Ornstein–Uhlenbeck process
# =========================

class LinearizedDrift:
    """-χ∇·(v∇Φ_det) - χ∇·(ρ_det∇Φ_v) at a frozen deterministic state."""

    def __init__(self, rho_det: FourierField, chi: float):
        self.rho_det = rho_det
        self.chi = chi
        self.grad_phi_det = gradient(green_potential(rho_det))

    def __call__(self, v: FourierField) -> FourierField:
        if self.chi == 0:
            return FourierField.zeros(v.resolution)
        flux = pointwise_product(v, self.grad_phi_det) + pointwise_product(self.rho_det, gradient(green_potential(v)))
        return divergence(flux) * (-self.chi)


def ou_step(
    v: FourierField,
    rho_det: FourierField,
    sigma: FourierField,
    incr: ModeNoiseIncrement,
    cfg: SpdeConfig,
) -> FourierField:
    """ETD step of the generalized OU equation with unmollified noise on the retained modes."""
    forcing = -lolli_forcing(sigma, incr, white_symbol(v.resolution))
    return stepper_for(v.resolution, cfg.dt, "etd1").step(v, drift=LinearizedDrift(rho_det, cfg.chi), forcing=forcing)


def solve_ou(
    det_trajectory: Trajectory,
    cfg: SpdeConfig,
    noise: Optional[NoiseSource] = None,
    sigma_path: Optional[Trajectory] = None,
    path_id: int = 0,
) -> Trajectory:
    """One path of v on the deterministic time grid, stored every record_every steps."""
    _check_grid(det_trajectory, cfg.dt, cfg.M)
    if sigma_path is None:
        sigma_path = sqrt_det(det_trajectory, cfg.positivity_floor)
    if noise is None:
        noise = CounterStream(cfg.seed, path_id, TAG_OU_NOISE)
    n = min(cfg.n_steps, det_trajectory.steps[-1])
    v = FourierField.zeros(cfg.M)
    traj = Trajectory(dt=cfg.dt)
    traj.record(0, v)
    for step in range(n):
        incr = sample_increment(noise.at(step), cfg.M, cfg.dt)
        v = ou_step(v, det_trajectory.fields[step], sigma_at(sigma_path, step), incr, cfg)
        if (step + 1) % cfg.record_every == 0 or step + 1 == n:
            traj.record(step + 1, v)
    return traj


# =========================
# Skeleton equation and rate function
# =========================

def control_forcing(sigma: FourierField, h: FourierField) -> FourierField:
    """-∇·(σ h) with the dealiased product."""
    if h.components != 2:
        raise InputError(f"control must be a 2-vector field, got {h.components} components")
    return -divergence(pointwise_product(sigma, h))


def skeleton_solve(
    rho0: FourierField,
    h: Optional[Sequence[FourierField]],
    det_trajectory: Trajectory,
    cfg: DetConfig,
    sigma_path: Optional[Trajectory] = None,
) -> Trajectory:
    """Deterministic solve of ρ^h; h[step] is frozen over the step. h = None is the unforced solve."""
    if h is None:
        return solve_det(rho0, cfg)
    if len(h) < cfg.n_steps:
        raise InputError(f"control path has {len(h)} steps, the solver needs {cfg.n_steps}")
    _check_grid(det_trajectory, cfg.dt, cfg.M)
    if sigma_path is None:
        sigma_path = sqrt_det(det_trajectory, cfg.positivity_floor)
    sigma = sigma_path
    last = sigma.steps[-1]

    def forcing(step: int) -> FourierField:
        return control_forcing(sigma_at(sigma, min(step, last)), h[step])

    return solve_det(rho0, cfg, forcing=forcing)


def rate_functional(h: Sequence[FourierField], dt: float) -> float:
    """½ ∫₀^T ‖h_t‖²_{L²} dt, trapezoid in time and Parseval in space."""
    if len(h) < 2:
        return 0.0
    sq = np.array([l2_norm(ht) ** 2 for ht in h])
    return 0.5 * float(np.sum(0.5 * (sq[1:] + sq[:-1])) * dt)


# =========================
# Fluctuations
# =========================

def fluctuation(rho_path: Trajectory, det_trajectory: Trajectory, eps: float) -> Trajectory:
    """ε^{-1/2}(ρ_t - ρ_det(t)) at every stored time of rho_path."""
    if eps <= 0:
        raise InputError(f"fluctuations need eps > 0, got {eps}")
    if not math.isclose(rho_path.dt, det_trajectory.dt, rel_tol=1e-12):
        raise GridMismatchError(f"time steps differ: {rho_path.dt} vs {det_trajectory.dt}")
    scale = 1.0 / math.sqrt(eps)
    out = Trajectory(dt=rho_path.dt)
    for step, rho in zip(rho_path.steps, rho_path.fields):
        out.record(step, (rho - det_trajectory.field_at_step(step)) * scale)
    return out
