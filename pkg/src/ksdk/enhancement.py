# src/ksdk/enhancement.py
"""
Canonical enhancement of the stochastic convolution:

  ty = ∇·I[🍭∇Φ_🍭]
  tp = ty ⊙ ∇Φ_🍭 + ∇Φ_ty ⊙ 🍭
  tc = ∇I[🍭] ⊙ ∇Φ_🍭 + ∇²I[Φ_🍭] ⊙ 🍭      (2×2, row-major)

🍭, ty and J = I[🍭] are co-evolved with the exponential stepper; ∇I[🍭] = ∇J
and ∇²I[Φ_🍭] = ∇²Φ_J because Φ and I commute. The same recursion driven by a
deterministic control h gives the enhancement of 🍭^h = ∇·I[σ h].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ksdk.deterministic import Trajectory
from ksdk.etd import stepper_for
from ksdk.fields import FourierField
from ksdk.interfaces import NoiseSource
from ksdk.noise import ModeNoiseIncrement, MollifierSymbol, lolli_forcing, sample_increment, sigma_at
from ksdk.spectral import besov_norm, divergence, gradient, green_potential, hessian, pointwise_product, resonant

# Hölder–Besov regularity at which each object is measured
DEFAULT_ALPHA: Dict[str, float] = {"ti": -1.2, "ty": -0.2, "tp": -1.2, "tc": -0.2}


@dataclass(frozen=True)
class EnhancementTuple:
    ti: FourierField
    ty: FourierField
    tp: FourierField  # 2-vector
    tc: FourierField  # 2×2 matrix

    def scaled_by(self, c: float) -> "EnhancementTuple":
        return EnhancementTuple(self.ti * c, self.ty * c**2, self.tp * c**3, self.tc * c**2)

    def norms(self, alpha: Optional[Dict[str, float]] = None) -> Dict[str, float]:
        """C^α surrogates ‖·‖_{B^α_{∞,∞}} with grid L^∞."""
        a = {**DEFAULT_ALPHA, **(alpha or {})}
        return {name: besov_norm(getattr(self, name), a[name], float("inf"), float("inf")) for name in a}


@dataclass(frozen=True)
class EnhancementState:
    """Running Duhamel fields; the tuple is a function of this state at one time."""

    ti: FourierField
    ty: FourierField
    duhamel_ti: FourierField  # J = I[🍭]

    @classmethod
    def zeros(cls, M: int) -> "EnhancementState":
        z = FourierField.zeros(M)
        return cls(z, z, z)


def enhancement_tuple(state: EnhancementState) -> EnhancementTuple:
    ti, ty, J = state.ti, state.ty, state.duhamel_ti
    grad_phi_ti = gradient(green_potential(ti))
    grad_phi_ty = gradient(green_potential(ty))
    tp = resonant(ty, grad_phi_ti) + resonant(grad_phi_ty, ti)

    grad_J = gradient(J).split()
    hess_phi_J = hessian(green_potential(J)).split()
    grad_phi = grad_phi_ti.split()
    tc = FourierField.stack(
        resonant(grad_J[i], grad_phi[j]) + resonant(hess_phi_J[2 * i + j], ti)
        for i in range(2)
        for j in range(2)
    )
    return EnhancementTuple(ti=ti, ty=ty, tp=tp, tc=tc)


def advance_state(state: EnhancementState, ti_forcing: FourierField, dt: float) -> EnhancementState:
    """One ETD step of (🍭, ty, J) with every right-hand side frozen at the left endpoint."""
    stepper = stepper_for(state.ti.resolution, dt)
    ti = state.ti
    ty_forcing = divergence(pointwise_product(ti, gradient(green_potential(ti))))
    return EnhancementState(
        ti=stepper.step(ti, forcing=ti_forcing),
        ty=stepper.step(state.ty, forcing=ty_forcing),
        duhamel_ti=stepper.step(state.duhamel_ti, forcing=ti),
    )


def enhancement_step(
    state: EnhancementState,
    sigma: FourierField,
    incr: ModeNoiseIncrement,
    moll: MollifierSymbol,
    dt: float,
) -> Tuple[EnhancementState, EnhancementTuple]:
    nxt = advance_state(state, lolli_forcing(sigma, incr, moll), dt)
    return nxt, enhancement_tuple(nxt)


def _evolve(
    sigma_path: Trajectory,
    n_steps: int,
    ti_forcing: Callable[[int, FourierField], FourierField],
    record_steps: Sequence[int],
) -> List[Tuple[float, EnhancementTuple]]:
    M = sigma_path.fields[0].resolution
    dt = sigma_path.dt
    wanted = set(record_steps)
    state = EnhancementState.zeros(M)
    out: List[Tuple[float, EnhancementTuple]] = []
    if 0 in wanted:
        out.append((0.0, enhancement_tuple(state)))
    for step in range(n_steps):
        state = advance_state(state, ti_forcing(step, sigma_at(sigma_path, step)), dt)
        if step + 1 in wanted:
            out.append(((step + 1) * dt, enhancement_tuple(state)))
    return out


def evolve_enhancement(
    sigma_path: Trajectory,
    moll: MollifierSymbol,
    noise: NoiseSource,
    n_steps: int,
    record_steps: Optional[Sequence[int]] = None,
) -> List[Tuple[float, EnhancementTuple]]:
    """(t, X^δ_t) at the requested steps (default: the final one)."""
    M = sigma_path.fields[0].resolution
    dt = sigma_path.dt

    def forcing(step: int, sigma: FourierField) -> FourierField:
        return lolli_forcing(sigma, sample_increment(noise.at(step), M, dt), moll)

    return _evolve(sigma_path, n_steps, forcing, record_steps or [n_steps])


def enhancement_from_h(
    h: Sequence[FourierField],
    sigma_path: Trajectory,
    record_steps: Optional[Sequence[int]] = None,
) -> List[Tuple[float, EnhancementTuple]]:
    """Deterministic enhancement X^h with 🍭^h = ∇·I[σ h]; h[step] is frozen over the step."""
    n_steps = min(len(h), sigma_path.steps[-1])

    def forcing(step: int, sigma: FourierField) -> FourierField:
        return divergence(pointwise_product(sigma, h[step]))

    return _evolve(sigma_path, n_steps, forcing, record_steps or [n_steps])


def path_norms(
    path: Sequence[Tuple[float, EnhancementTuple]], alpha: Optional[Dict[str, float]] = None
) -> Dict[str, float]:
    """C_T surrogate: the largest C^α norm of each term over the recorded times."""
    out: Dict[str, float] = {}
    for _, tup in path:
        for name, value in tup.norms(alpha).items():
            out[name] = max(out.get(name, 0.0), value)
    return out
