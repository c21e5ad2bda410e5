# src/ksdk/etd.py
"""
Exponential time differencing for (∂_t - Δ)u = N(u) in Fourier space.

One stepper is shared by every dynamic equation of the package (deterministic
Keller–Segel, additive-noise SPDE, generalized OU process, skeleton equation,
stochastic convolutions), so that switching a forcing off reproduces the
unforced solver bit for bit.

  etd1:  u⁺ = e^{-λh} u + φ₁(λ) N(u),               φ₁ = (1 - e^{-λh}) / λ   (h at λ = 0)
  etd2:  a  = e^{-λh} u + φ₁(λ) N(u)
         u⁺ = a + φ₂(λ) (N(a) - N(u)),               φ₂ = (e^{-λh} - 1 + λh) / (λ² h)   (h/2 at λ = 0)
"""

from __future__ import annotations

from functools import lru_cache
from typing import Literal, Optional

import numpy as np

from ksdk.fields import FourierField
from ksdk.interfaces import Drift
from ksdk.spectral import symbols

Scheme = Literal["etd1", "etd2"]


class ExponentialStepper:
    def __init__(self, M: int, dt: float, scheme: Scheme = "etd1"):
        assert dt > 0, "time step must be positive"
        assert scheme in ("etd1", "etd2"), f"unknown scheme {scheme!r}"
        self.M = M
        self.dt = dt
        self.scheme = scheme

        _, _, lam = symbols(M)
        x = lam * dt
        self.decay = np.exp(-x)

        phi1 = np.full_like(lam, dt)
        nz = lam > 0
        phi1[nz] = -np.expm1(-x[nz]) / lam[nz]
        self.weight = phi1

        # small λh loses digits in (e^{-x} - 1 + x); switch to the Taylor series there
        phi2 = np.empty_like(lam)
        small = x < 1e-4
        xs = x[small]
        phi2[small] = dt * (0.5 - xs / 6.0 + xs**2 / 24.0)
        big = ~small
        phi2[big] = (np.expm1(-x[big]) + x[big]) / (lam[big] ** 2 * dt)
        self.weight2 = phi2

    def propagate(self, u: FourierField) -> FourierField:
        return u.with_coeffs(u.coeffs * self.decay)

    def integrate(self, term: FourierField) -> FourierField:
        """∫₀^h P_{h-s} term ds for a term frozen over the step."""
        return term.with_coeffs(term.coeffs * self.weight)

    def step(
        self,
        u: FourierField,
        drift: Optional[Drift] = None,
        forcing: Optional[FourierField] = None,
    ) -> FourierField:
        """Advance u by one step. forcing is frozen over the step (white-noise density or control)."""
        n_u = self._rhs(u, drift, forcing)
        if n_u is None:
            return self.propagate(u)
        a = u.with_coeffs(u.coeffs * self.decay + self.weight * n_u.coeffs)
        if self.scheme == "etd1" or drift is None:
            return a
        n_a = self._rhs(a, drift, forcing)
        assert n_a is not None
        return a.with_coeffs(a.coeffs + self.weight2 * (n_a.coeffs - n_u.coeffs))

    @staticmethod
    def _rhs(
        u: FourierField, drift: Optional[Drift], forcing: Optional[FourierField]
    ) -> Optional[FourierField]:
        if drift is None:
            return forcing
        n = drift(u)
        if forcing is not None:
            n = n + forcing
        return n


@lru_cache(maxsize=32)
def stepper_for(M: int, dt: float, scheme: Scheme = "etd1") -> ExponentialStepper:
    return ExponentialStepper(M, dt, scheme)
