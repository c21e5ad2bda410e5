# src/ksdk/fields.py
"""
Truncated Fourier representation of real scalar/vector fields on the torus T² = R²/Z².

Conventions
- f̂(ω) = ∫ e^{-2πi⟨ω,x⟩} f(x) dx,   f(x) = Σ_ω e^{2πi⟨ω,x⟩} f̂(ω)
- Retained modes: ω ∈ {-M..M}², stored centred: coeffs[c, ω1 + M, ω2 + M]
- Real-space grid: (2M+2)² points x = (j1, j2) / (2M+2); axis 0 ↔ x1, axis 1 ↔ x2
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Tuple

import numpy as np
import scipy.fft as sfft

from ksdk.errors import ShapeError, SymmetryError

Mode = Tuple[int, int]

# tolerance for the numerical Hermitian check in to_grid (relative to max |coeff|)
HERMITIAN_TOL = 1e-10


def grid_size(M: int) -> int:
    return 2 * M + 2


def wavenumbers(M: int) -> Tuple[np.ndarray, np.ndarray]:
    """Integer mode arrays (ω1, ω2), each of shape (2M+1, 2M+1)."""
    k = np.arange(-M, M + 1)
    return np.meshgrid(k, k, indexing="ij")


def grid_points(M: int) -> Tuple[np.ndarray, np.ndarray]:
    n = grid_size(M)
    x = np.arange(n) / n
    return np.meshgrid(x, x, indexing="ij")


def _mirror(c: np.ndarray) -> np.ndarray:
    """c(-ω) for centred coefficient arrays."""
    return c[..., ::-1, ::-1]


@dataclass(frozen=True, eq=False)
class FourierField:
    """Immutable carrier of the coefficients of a (possibly vector-valued) field.

    coeffs has shape (components, 2M+1, 2M+1). Matrix-valued fields are stored
    row-major, i.e. component 2*i + j holds entry (i, j).
    """

    coeffs: np.ndarray
    is_real: bool = True

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim == 2:
            c = c[None, :, :]
        if c.ndim != 3 or c.shape[1] != c.shape[2] or c.shape[1] % 2 != 1:
            raise ShapeError(f"coefficient array must be (components, 2M+1, 2M+1), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # ----- constructors -----

    @classmethod
    def zeros(cls, M: int, components: int = 1) -> "FourierField":
        return cls(np.zeros((components, 2 * M + 1, 2 * M + 1), dtype=np.complex128))

    @classmethod
    def constant(cls, M: int, value: float | Iterable[float] = 1.0) -> "FourierField":
        values = np.atleast_1d(np.asarray(value, dtype=float))
        c = np.zeros((values.size, 2 * M + 1, 2 * M + 1), dtype=np.complex128)
        c[:, M, M] = values
        return cls(c)

    @classmethod
    def from_modes(
        cls,
        M: int,
        modes: Mapping[Mode, complex],
        components: int = 1,
        component: int = 0,
        is_real: bool | None = None,
    ) -> "FourierField":
        """Build a field from explicit coefficients {ω: f̂(ω)} placed in one component."""
        c = np.zeros((components, 2 * M + 1, 2 * M + 1), dtype=np.complex128)
        for (k1, k2), value in modes.items():
            if max(abs(k1), abs(k2)) > M:
                raise ShapeError(f"mode {(k1, k2)} outside resolution M={M}")
            c[component, k1 + M, k2 + M] = value
        if is_real is None:
            is_real = bool(np.max(np.abs(c - np.conj(_mirror(c))), initial=0.0) == 0.0)
        return cls(c, is_real=is_real)

    @classmethod
    def cosine(cls, M: int, mode: Mode, amplitude: float = 1.0) -> "FourierField":
        """amplitude·cos(2π⟨mode, x⟩)."""
        k1, k2 = mode
        return cls.from_modes(M, {(k1, k2): amplitude / 2, (-k1, -k2): amplitude / 2}, is_real=True)

    @classmethod
    def stack(cls, fields: Iterable["FourierField"]) -> "FourierField":
        fs = list(fields)
        _check_same_resolution(*fs)
        return cls(np.concatenate([f.coeffs for f in fs], axis=0), is_real=all(f.is_real for f in fs))

    # ----- accessors -----

    @property
    def resolution(self) -> int:
        return (self.coeffs.shape[1] - 1) // 2

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    def mode(self, k1: int, k2: int, component: int = 0) -> complex:
        M = self.resolution
        if max(abs(k1), abs(k2)) > M:
            return 0j
        return complex(self.coeffs[component, k1 + M, k2 + M])

    def mean(self) -> np.ndarray | float:
        m = self.coeffs[:, self.resolution, self.resolution].real
        return float(m[0]) if self.components == 1 else m.copy()

    def component(self, j: int) -> "FourierField":
        return FourierField(self.coeffs[j : j + 1], is_real=self.is_real)

    def split(self) -> list["FourierField"]:
        return [self.component(j) for j in range(self.components)]

    def hermitian_defect(self) -> float:
        c = self.coeffs
        scale = max(1.0, float(np.max(np.abs(c), initial=0.0)))
        return float(np.max(np.abs(c - np.conj(_mirror(c))), initial=0.0)) / scale

    def with_coeffs(self, coeffs: np.ndarray, is_real: bool | None = None) -> "FourierField":
        return FourierField(coeffs, is_real=self.is_real if is_real is None else is_real)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))

    # ----- linear algebra -----

    def __add__(self, other: "FourierField") -> "FourierField":
        _check_compatible(self, other)
        return FourierField(self.coeffs + other.coeffs, is_real=self.is_real and other.is_real)

    def __sub__(self, other: "FourierField") -> "FourierField":
        _check_compatible(self, other)
        return FourierField(self.coeffs - other.coeffs, is_real=self.is_real and other.is_real)

    def __neg__(self) -> "FourierField":
        return FourierField(-self.coeffs, is_real=self.is_real)

    def __mul__(self, scalar: complex) -> "FourierField":
        real_scalar = np.isrealobj(scalar) or np.imag(scalar) == 0
        return FourierField(self.coeffs * scalar, is_real=self.is_real and bool(real_scalar))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"FourierField(M={self.resolution}, components={self.components}, is_real={self.is_real})"


def _check_same_resolution(*fields: FourierField) -> None:
    ms = {f.resolution for f in fields}
    if len(ms) > 1:
        raise ShapeError(f"resolution mismatch: {sorted(ms)}")


def _check_compatible(a: FourierField, b: FourierField) -> None:
    if a.coeffs.shape != b.coeffs.shape:
        raise ShapeError(f"shape mismatch: {a!r} vs {b!r}")


# =========================
# Grid transforms
# =========================

def _centred_to_fft(coeffs: np.ndarray) -> np.ndarray:
    C, n_modes, _ = coeffs.shape
    n = n_modes + 1
    padded = np.zeros((C, n, n), dtype=np.complex128)
    padded[:, 1:, 1:] = coeffs  # index 1 ↔ ω = -M, the extra row/col is the (empty) Nyquist mode
    return sfft.ifftshift(padded, axes=(1, 2))


def to_grid(f: FourierField) -> np.ndarray:
    """Real-space values on the (2M+2)² grid; shape (N, N) for scalars, (C, N, N) otherwise."""
    if not f.is_real or f.hermitian_defect() > HERMITIAN_TOL:
        raise SymmetryError(f"to_grid needs a real field (Hermitian defect {f.hermitian_defect():.3e})")
    n = grid_size(f.resolution)
    values = (sfft.ifft2(_centred_to_fft(f.coeffs), axes=(1, 2)) * (n * n)).real
    return values[0] if f.components == 1 else values


def from_grid(values: np.ndarray, M: int | None = None) -> FourierField:
    """Inverse of to_grid for real grid data; output is Hermitian bit-exactly."""
    u = np.asarray(values, dtype=float)
    if u.ndim == 2:
        u = u[None, :, :]
    n = u.shape[-1]
    if u.shape[-2] != n or n % 2 != 0:
        raise ShapeError(f"grid must be square with even side, got {u.shape}")
    if M is None:
        M = n // 2 - 1
    if grid_size(M) != n:
        raise ShapeError(f"grid side {n} does not match resolution M={M}")
    spec = sfft.fftshift(sfft.fft2(u, axes=(1, 2)), axes=(1, 2)) / (n * n)
    c = spec[:, 1:, 1:]
    c = 0.5 * (c + np.conj(_mirror(c)))
    return FourierField(c, is_real=True)


def grid_mean(values: np.ndarray) -> float:
    """Quadrature ∫_{T²} u dx on the uniform grid (torus has unit volume)."""
    return float(np.mean(values))
