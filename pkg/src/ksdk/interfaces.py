# src/ksdk/interfaces.py
from __future__ import annotations

from typing import Any, Dict, Protocol

import numpy as np

from ksdk.fields import FourierField


# Protocols:
# act as typecheckers for the pluggable parts of the solvers
# a new drift or noise provider only has to conform to these


class Drift(Protocol):
    """Nonlinear/explicit part N(u) of (∂_t - Δ)u = N(u), evaluated at the current state."""

    def __call__(self, u: FourierField) -> FourierField:
        ...


class NoiseSource(Protocol):
    """Provides one Gaussian generator per time step, independent of call order."""

    def at(self, step: int) -> np.random.Generator:
        ...


class ReportWriter(Protocol):
    def write_json(self, name: str, payload: Dict[str, Any]) -> str:
        """Write a JSON document into the run directory, return its path."""
        ...

    def write_csv(self, name: str, rows: list[Dict[str, Any]]) -> str:
        ...
