# src/ksdk/deterministic.py
"""
Deterministic periodic Keller–Segel equation

    (∂_t - Δ)ρ = -χ ∇·(ρ ∇Φ_ρ),   -ΔΦ_ρ = ρ - mean(ρ),

solved through its mild formulation with the shared exponential stepper.
Also provides the energy-identity residual and the noise heterogeneity √ρ_det.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from ksdk.errors import ConfigError, GridMismatchError, InputError, NumericalOverflowError, PositivityError
from ksdk.etd import Scheme, stepper_for
from ksdk.fields import FourierField, from_grid, to_grid
from ksdk.spectral import divergence, gradient, green_potential, l2_norm, pointwise_product, symbols

log = logging.getLogger(__name__)


# =========================
# Config model
# =========================

@dataclass
class DetConfig:
    chi: float = 1.0
    T: float = 0.25
    dt: float = 2.5e-4
    M: int = 32
    blowup_L2_threshold: float = 1e3
    positivity_floor: float = 1e-8
    scheme: Scheme = "etd1"
    record_every: int = 1        # store every n-th field (1 = all, needed by the stochastic solvers)

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ConfigError(f"deterministic.dt must be > 0, got {self.dt}")
        if self.T <= 0:
            raise ConfigError(f"deterministic.T must be > 0, got {self.T}")
        if self.M < 1:
            raise ConfigError(f"deterministic.M must be >= 1, got {self.M}")
        if self.positivity_floor < 0:
            raise ConfigError(f"deterministic.positivity_floor must be >= 0, got {self.positivity_floor}")
        if self.record_every < 1:
            raise ConfigError(f"deterministic.record_every must be >= 1, got {self.record_every}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


# =========================
# Trajectory
# =========================

@dataclass
class Trajectory:
    """Stored fields of one solution path.

    times/steps/fields/min_value_path are aligned (one entry per stored field).
    diagnostics holds per-step series keyed by name, with their own "t" axis.
    """

    dt: float
    times: List[float] = field(default_factory=list)
    steps: List[int] = field(default_factory=list)
    fields: List[FourierField] = field(default_factory=list)
    min_value_path: List[float] = field(default_factory=list)
    blew_up_at: Optional[float] = None
    diagnostics: Dict[str, List[float]] = field(default_factory=dict)

    def record(self, step: int, value: FourierField) -> None:
        assert not self.steps or step > self.steps[-1], "trajectory steps must increase"
        assert self.blew_up_at is None, "cannot record after blow-up"
        self.steps.append(step)
        self.times.append(step * self.dt)
        self.fields.append(value)
        self.min_value_path.append(float(np.min(to_grid(value))))

    def log_diagnostic(self, name: str, value: float) -> None:
        self.diagnostics.setdefault(name, []).append(float(value))

    def field_at_step(self, step: int) -> FourierField:
        try:
            return self.fields[self.steps.index(step)]
        except ValueError:
            raise GridMismatchError(f"step {step} (t={step * self.dt:.6g}) is not stored in this trajectory") from None

    @property
    def final(self) -> FourierField:
        return self.fields[-1]

    @property
    def complete(self) -> bool:
        """Every step from 0 to the last stored one is available."""
        return self.steps == list(range(len(self.steps)))


# =========================
# Dynamics
# =========================

def ks_advection(rho: FourierField, chi: float) -> FourierField:
    """-χ ∇·(ρ ∇Φ_ρ) with the dealiased grid product; mean-free."""
    if chi == 0:
        return FourierField.zeros(rho.resolution)
    flux = pointwise_product(rho, gradient(green_potential(rho)))
    return divergence(flux) * (-chi)


class KellerSegelDrift:
    """Drift callback for the exponential stepper."""

    def __init__(self, chi: float):
        self.chi = chi

    def __call__(self, u: FourierField) -> FourierField:
        return ks_advection(u, self.chi)


def det_step(rho: FourierField, cfg: DetConfig, forcing: Optional[FourierField] = None) -> FourierField:
    """One exponential-integrator step of the mild formulation; preserves the mean exactly.

    forcing is an optional mean-free term frozen over the step (control of the skeleton equation).
    """
    stepper = stepper_for(rho.resolution, cfg.dt, cfg.scheme)
    out = stepper.step(rho, drift=KellerSegelDrift(cfg.chi), forcing=forcing)
    if not out.is_finite():
        raise NumericalOverflowError("non-finite coefficients in deterministic Keller–Segel step")
    return out


def validate_density(rho0: FourierField) -> None:
    if rho0.components != 1 or not rho0.is_real:
        raise InputError("initial density must be a real scalar field")
    if abs(rho0.mean() - 1.0) > 1e-10:
        raise InputError(f"initial density must have unit mass, got mean {rho0.mean():.12g}")
    if float(np.min(to_grid(rho0))) <= 0:
        raise InputError("initial density must be strictly positive on the grid")


def solve_det(
    rho0: FourierField,
    cfg: DetConfig,
    forcing: Optional[Callable[[int], Optional[FourierField]]] = None,
) -> Trajectory:
    """Iterate det_step up to T or until the L² norm crosses the blow-up threshold.

    forcing(step) supplies the term frozen over [step·dt, (step+1)·dt); None means unforced.
    """
    validate_density(rho0)
    if cfg.blowup_L2_threshold <= l2_norm(rho0):
        raise InputError(
            f"blowup_L2_threshold {cfg.blowup_L2_threshold} must exceed ‖ρ₀‖_L² = {l2_norm(rho0):.6g}"
        )
    traj = Trajectory(dt=cfg.dt)
    traj.record(0, rho0)
    traj.log_diagnostic("t", 0.0)
    traj.log_diagnostic("l2", l2_norm(rho0))
    traj.log_diagnostic("mass", rho0.mean())

    rho = rho0
    n = cfg.n_steps
    for step in range(1, n + 1):
        t = step * cfg.dt
        try:
            rho = det_step(rho, cfg, None if forcing is None else forcing(step - 1))
        except NumericalOverflowError:
            traj.blew_up_at = t
            break
        norm = l2_norm(rho)
        if norm > cfg.blowup_L2_threshold:
            traj.blew_up_at = t
            break
        traj.log_diagnostic("t", t)
        traj.log_diagnostic("l2", norm)
        traj.log_diagnostic("mass", rho.mean())
        if step % cfg.record_every == 0 or step == n:
            traj.record(step, rho)

    if traj.blew_up_at is not None:
        log.info("deterministic solution crossed ‖ρ‖_L² > %.3g at t=%.5g", cfg.blowup_L2_threshold, traj.blew_up_at)
    else:
        log.debug("deterministic solve finished: %d steps, final ‖ρ‖_L²=%.6g", n, traj.diagnostics["l2"][-1])
    return traj


# =========================
# Diagnostics
# =========================

def _cumulative_trapezoid(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values)
    out[1:] = np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(times))
    return out


def energy_residual(trajectory: Trajectory, chi: float) -> np.ndarray:
    """Residual of the a priori energy identity along the stored fields.

    R(t) = ‖f_t‖² - ‖f_0‖² + 2∫‖∇f‖² - χ∫‖f‖³_{L³} + χ∫‖f‖²_{L²}
    (unit mass), time integrals by trapezoid, L³ by grid quadrature.
    """
    times = np.asarray(trajectory.times)
    _, _, lam = symbols(trajectory.fields[0].resolution)
    l2sq = np.array([np.sum(np.abs(f.coeffs) ** 2) for f in trajectory.fields])
    grad_sq = np.array([np.sum(lam * np.abs(f.coeffs[0]) ** 2) for f in trajectory.fields])
    l3_cube = np.array([np.mean(np.abs(to_grid(f)) ** 3) for f in trajectory.fields])
    return (
        l2sq
        - l2sq[0]
        + 2.0 * _cumulative_trapezoid(grad_sq, times)
        - chi * _cumulative_trapezoid(l3_cube, times)
        + chi * _cumulative_trapezoid(l2sq, times)
    )


def sqrt_det(trajectory: Trajectory, floor: float = 1e-8) -> Trajectory:
    """Grid-pointwise √ρ_det for every stored field."""
    out = Trajectory(dt=trajectory.dt, blew_up_at=None, diagnostics={"t": [], "min_rho": []})
    for step, rho in zip(trajectory.steps, trajectory.fields):
        u = to_grid(rho)
        lowest = float(np.min(u))
        if lowest <= floor:
            raise PositivityError(
                f"ρ_det reaches {lowest:.3e} <= floor {floor:.1e} at t={step * trajectory.dt:.6g}"
            )
        out.record(step, from_grid(np.sqrt(u), rho.resolution))
        out.log_diagnostic("t", step * trajectory.dt)
        out.log_diagnostic("min_rho", lowest)
    out.blew_up_at = trajectory.blew_up_at
    return out
