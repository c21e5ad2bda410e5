# src/ksdk/spectral.py
"""
Torus operators acting on FourierField: heat semigroup, mean-free Green's potential,
differential operators, Sobolev/Besov norms, Littlewood–Paley blocks and the
Bony paraproduct / resonant product.

Nonlinear products follow one dealiasing policy: inputs are truncated to
|ωᵢ| ≤ ⌊2M/3⌋, multiplied on the (2M+2)² grid and the result truncated again.
On that band every product is alias-free, which makes the Bony decomposition
exact on retained modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from ksdk.errors import DomainError, ShapeError
from ksdk.fields import FourierField, from_grid, to_grid, wavenumbers


# =========================
# Symbols
# =========================

@lru_cache(maxsize=None)
def symbols(M: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(ω1, ω2, |2πω|²) as read-only float arrays."""
    k1, k2 = wavenumbers(M)
    k1 = k1.astype(float)
    k2 = k2.astype(float)
    lam = (2 * np.pi) ** 2 * (k1**2 + k2**2)
    for a in (k1, k2, lam):
        a.setflags(write=False)
    return k1, k2, lam


def dealias_cutoff(M: int) -> int:
    return (2 * M) // 3


@lru_cache(maxsize=None)
def _dealias_mask(M: int) -> np.ndarray:
    k1, k2, _ = symbols(M)
    K = dealias_cutoff(M)
    mask = (np.abs(k1) <= K) & (np.abs(k2) <= K)
    mask.setflags(write=False)
    return mask


def _apply(f: FourierField, multiplier: np.ndarray) -> FourierField:
    return f.with_coeffs(f.coeffs * multiplier[None, :, :])


# =========================
# Linear operators
# =========================

def heat_propagate(f: FourierField, t: float) -> FourierField:
    """P_t f: multiply each coefficient by exp(-t|2πω|²)."""
    if t < 0:
        raise DomainError(f"heat semigroup needs t >= 0, got {t}")
    _, _, lam = symbols(f.resolution)
    return _apply(f, np.exp(-t * lam))


@lru_cache(maxsize=None)
def _inverse_laplacian_symbol(M: int) -> np.ndarray:
    _, _, lam = symbols(M)
    inv = np.zeros_like(lam)
    np.divide(1.0, lam, out=inv, where=lam > 0)
    inv.setflags(write=False)
    return inv


def green_potential(f: FourierField) -> FourierField:
    """Φ_f with -ΔΦ_f = f - mean(f); zero mean by construction."""
    return _apply(f, _inverse_laplacian_symbol(f.resolution))


def laplacian(f: FourierField) -> FourierField:
    _, _, lam = symbols(f.resolution)
    return _apply(f, -lam)


def gradient(f: FourierField) -> FourierField:
    if f.components != 1:
        raise ShapeError(f"gradient expects a scalar field, got {f.components} components")
    k1, k2, _ = symbols(f.resolution)
    c = f.coeffs[0]
    out = np.stack([2j * np.pi * k1 * c, 2j * np.pi * k2 * c])
    return FourierField(out, is_real=f.is_real)


def divergence(v: FourierField) -> FourierField:
    if v.components != 2:
        raise ShapeError(f"divergence expects a 2-vector field, got {v.components} components")
    k1, k2, _ = symbols(v.resolution)
    out = 2j * np.pi * k1 * v.coeffs[0] + 2j * np.pi * k2 * v.coeffs[1]
    return FourierField(out[None], is_real=v.is_real)


def hessian(f: FourierField) -> FourierField:
    """∂ᵢ∂ⱼ f as a 2×2 matrix field (row-major components)."""
    if f.components != 1:
        raise ShapeError(f"hessian expects a scalar field, got {f.components} components")
    k1, k2, _ = symbols(f.resolution)
    c = f.coeffs[0]
    four_pi2 = (2 * np.pi) ** 2
    d11 = -four_pi2 * k1 * k1 * c
    d12 = -four_pi2 * k1 * k2 * c
    d22 = -four_pi2 * k2 * k2 * c
    return FourierField(np.stack([d11, d12, d12, d22]), is_real=f.is_real)


def sobolev_norm(f: FourierField, gamma: float) -> float:
    """Bessel-potential norm (Σ_ω (1+|2πω|²)^γ |f̂(ω)|²)^{1/2}, summed over components."""
    _, _, lam = symbols(f.resolution)
    weight = (1.0 + lam) ** gamma
    return float(np.sqrt(np.sum(weight[None, :, :] * np.abs(f.coeffs) ** 2)))


def l2_norm(f: FourierField) -> float:
    return sobolev_norm(f, 0.0)


# =========================
# Products
# =========================

def dealias(f: FourierField) -> FourierField:
    """2/3 rule: zero every mode with |ωᵢ| > ⌊2M/3⌋."""
    return _apply(f, _dealias_mask(f.resolution).astype(float))


def _broadcast_components(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[0] != b.shape[0] and 1 not in (a.shape[0], b.shape[0]):
        raise ShapeError(f"cannot multiply fields with {a.shape[0]} and {b.shape[0]} components")
    return a * b


def _as_components(values: np.ndarray, f: FourierField) -> np.ndarray:
    return values[None] if f.components == 1 else values


def pointwise_product(f: FourierField, g: FourierField) -> FourierField:
    """Dealiased grid product f·g; scalar×vector broadcasts, vector×vector is component-wise."""
    if f.resolution != g.resolution:
        raise ShapeError(f"resolution mismatch: {f.resolution} vs {g.resolution}")
    fu = _as_components(to_grid(dealias(f)), f)
    gu = _as_components(to_grid(dealias(g)), g)
    return dealias(from_grid(_broadcast_components(fu, gu), f.resolution))


# =========================
# Littlewood–Paley
# =========================

# ϱ₋₁(x) = χ(|x|) with χ ≡ 1 on [0, _LP_INNER] and χ ≡ 0 on [_LP_OUTER, ∞)
_LP_INNER = 0.3
_LP_OUTER = 15.0 / 32.0


def _smooth_step(s: np.ndarray) -> np.ndarray:
    """C^∞ step: 0 for s ≤ 0, 1 for s ≥ 1, built from exp(-1/s)."""
    s = np.asarray(s, dtype=float)

    def h(x: np.ndarray) -> np.ndarray:
        pos = x > 0
        out = np.zeros_like(x)
        out[pos] = np.exp(-1.0 / x[pos])
        return out

    a, b = h(s), h(1.0 - s)
    return a / (a + b)


def low_pass_profile(r: np.ndarray) -> np.ndarray:
    return _smooth_step((_LP_OUTER - np.asarray(r, dtype=float)) / (_LP_OUTER - _LP_INNER))


@dataclass(frozen=True, eq=False)
class LittlewoodPaleyPartition:
    """Dyadic partition ϱ₋₁, ϱ₀, …, ϱ_{max_block} evaluated on the retained lattice.

    blocks[k + 1] holds ϱ_k. The last block collects every frequency above the
    previous ones, so the partition sums to one on all retained modes.
    """

    resolution: int
    max_block: int
    blocks: np.ndarray

    @classmethod
    def for_resolution(cls, M: int) -> "LittlewoodPaleyPartition":
        return _partition(M)

    def symbol(self, k: int) -> np.ndarray:
        if k < -1:
            raise DomainError(f"Littlewood–Paley index must be >= -1, got {k}")
        if k > self.max_block:
            return np.zeros_like(self.blocks[0])
        return self.blocks[k + 1]

    @property
    def indices(self) -> range:
        return range(-1, self.max_block + 1)


@lru_cache(maxsize=None)
def _partition(M: int) -> LittlewoodPaleyPartition:
    k1, k2, _ = symbols(M)
    r = np.sqrt(k1**2 + k2**2)
    max_block = (2 * M).bit_length() - 1  # largest k with 2^k <= 2M
    rows = [low_pass_profile(r)]
    for k in range(0, max_block):
        rows.append(low_pass_profile(r / 2 ** (k + 1)) - low_pass_profile(r / 2**k))
    rows.append(1.0 - low_pass_profile(r / 2**max_block))
    blocks = np.stack(rows)
    blocks.setflags(write=False)
    return LittlewoodPaleyPartition(resolution=M, max_block=max_block, blocks=blocks)


def lp_block(f: FourierField, k: int) -> FourierField:
    """Δ_k f; blocks beyond max_block are the zero field."""
    part = _partition(f.resolution)
    return _apply(f, part.symbol(k))


def _lp_norm(f: FourierField, p: float) -> float:
    if p == 2:
        return l2_norm(f)
    values = to_grid(f)
    if f.components > 1:
        pointwise = np.sqrt(np.sum(values**2, axis=0))
    else:
        pointwise = np.abs(values)
    if p == 1:
        return float(np.mean(pointwise))
    if math.isinf(p):
        return float(np.max(pointwise))
    raise DomainError(f"L^p norm supported for p in {{1, 2, inf}}, got {p}")


def besov_norm(f: FourierField, alpha: float, p: float = 2, q: float = 2) -> float:
    """ℓ^q over k of 2^{kα}‖Δ_k f‖_{L^p}; L^1 and L^∞ by grid quadrature.

    B^0_{2,2} is the L² norm for a mode inside a single block. For α > 0 it
    matches the Sobolev norm only up to a constant of size (2π)^α, since the
    blocks are dyadic in |ω| and the Sobolev weight uses |2πω|.
    """
    if q not in (1, 2) and not math.isinf(q):
        raise DomainError(f"ℓ^q norm supported for q in {{1, 2, inf}}, got {q}")
    part = _partition(f.resolution)
    terms = np.array([2.0 ** (k * alpha) * _lp_norm(lp_block(f, k), p) for k in part.indices])
    if q == 1:
        return float(np.sum(terms))
    if q == 2:
        return float(np.sqrt(np.sum(terms**2)))
    return float(np.max(terms))


def _block_grids(f: FourierField) -> np.ndarray:
    """Grid values of Δ_k(dealias f) for every block: shape (n_blocks, C, N, N)."""
    part = _partition(f.resolution)
    ft = dealias(f)
    return np.stack([_as_components(to_grid(lp_block(ft, k)), f) for k in part.indices])


def _check_pair(f: FourierField, g: FourierField) -> None:
    if f.resolution != g.resolution:
        raise ShapeError(f"resolution mismatch: {f.resolution} vs {g.resolution}")
    if f.components != g.components and 1 not in (f.components, g.components):
        raise ShapeError(f"component mismatch: {f.components} vs {g.components}")


def paraproduct(f: FourierField, g: FourierField) -> FourierField:
    """f ⊘ g = Σ_k Σ_{l ≤ k-2} Δ_l f Δ_k g (component-wise for vector inputs)."""
    _check_pair(f, g)
    fb, gb = _block_grids(f), _block_grids(g)
    low = np.cumsum(fb, axis=0)
    acc = None
    for i in range(2, gb.shape[0]):
        term = _broadcast_components(low[i - 2], gb[i])
        acc = term if acc is None else acc + term
    if acc is None:
        return FourierField.zeros(f.resolution, max(f.components, g.components))
    return dealias(from_grid(acc, f.resolution))


def resonant(f: FourierField, g: FourierField) -> FourierField:
    """f ⊙ g = Σ_{|k-l| ≤ 1} Δ_l f Δ_k g (component-wise for vector inputs)."""
    _check_pair(f, g)
    fb, gb = _block_grids(f), _block_grids(g)
    n = fb.shape[0]
    acc = None
    for i in range(n):
        near = fb[max(0, i - 1) : min(n, i + 2)].sum(axis=0)
        term = _broadcast_components(near, gb[i])
        acc = term if acc is None else acc + term
    return dealias(from_grid(acc, f.resolution))
