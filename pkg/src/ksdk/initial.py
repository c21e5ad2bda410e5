# src/ksdk/initial.py
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Tuple

import numpy as np

from ksdk.errors import InputError
from ksdk.fields import FourierField, from_grid, grid_points

Kind = Literal["uniform", "cosine", "bump"]


@dataclass
class InitialCondition:
    kind: Kind = "cosine"
    amplitude: float = 0.2       # cosine: 1 + amplitude·cos(2π⟨mode, x⟩)
    mode: Tuple[int, int] = (1, 0)
    width: float = 0.15          # bump: std of the periodised Gaussian
    floor: float = 0.2           # bump: constant background before normalisation


def make_initial(ic: InitialCondition, M: int) -> FourierField:
    """Positive initial density with unit mass."""
    if ic.kind == "uniform":
        return FourierField.constant(M, 1.0)
    if ic.kind == "cosine":
        if abs(ic.amplitude) >= 1:
            raise InputError(f"cosine amplitude must be < 1 for a positive density, got {ic.amplitude}")
        if max(abs(ic.mode[0]), abs(ic.mode[1])) > M:
            raise InputError(f"cosine mode {ic.mode} is not resolved at M={M}")
        rho = FourierField.cosine(M, tuple(ic.mode), ic.amplitude) + FourierField.constant(M, 1.0)
        return rho
    if ic.kind == "bump":
        x1, x2 = grid_points(M)
        d1 = np.minimum(np.abs(x1 - 0.5), 1 - np.abs(x1 - 0.5))
        d2 = np.minimum(np.abs(x2 - 0.5), 1 - np.abs(x2 - 0.5))
        u = ic.floor + np.exp(-(d1**2 + d2**2) / (2 * ic.width**2))
        u = u / np.mean(u)
        rho = from_grid(u, M)
        c = np.array(rho.coeffs)
        c[0, M, M] = 1.0
        return rho.with_coeffs(c)
    raise InputError(f"unknown initial condition kind {ic.kind!r}")
