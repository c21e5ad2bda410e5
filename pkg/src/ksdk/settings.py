# src/ksdk/settings.py
"""
Resolved run configuration.

Precedence: built-in defaults < YAML file < command-line overrides. Every
section rejects unknown keys; validation errors are re-raised as ConfigError
naming the dotted key path.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ksdk.deterministic import DetConfig
from ksdk.errors import ConfigError
from ksdk.experiments import DeltaRule, ScalingSchedule
from ksdk.initial import InitialCondition
from ksdk.particles import ParticleConfig
from ksdk.spde import SpdeConfig

log = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = "configs/ksdk.yaml"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SpectralSection(_Section):
    M: int = Field(32, ge=1, le=512)


class DeterministicSection(_Section):
    chi: float = 1.0
    T: float = Field(0.25, gt=0)
    dt: float = Field(2.5e-4, gt=0)
    blowup_L2_threshold: float = Field(1e3, gt=0)
    positivity_floor: float = Field(1e-8, ge=0)
    scheme: Literal["etd1", "etd2"] = "etd1"
    record_every: int = Field(1, ge=1)


class NoiseSection(_Section):
    delta: float = Field(0.1, gt=0)
    gamma: float = Field(0.0, ge=-1.0, le=0.0)


class SpdeSection(_Section):
    eps: float = Field(1e-3, ge=0)
    negativity_level_L: float = Field(10.0, gt=0)
    record_every: int = Field(50, ge=1)


class DeltaRuleSection(_Section):
    kind: Literal["power", "log", "constant", "natural"] = "power"
    c: float = Field(1.0, gt=0)
    p: float = 0.125


class ScheduleSection(_Section):
    eps_list: List[float] = Field(default_factory=lambda: [1e-2, 3e-3, 1e-3])
    delta_rule: DeltaRuleSection = Field(default_factory=DeltaRuleSection)

    @field_validator("eps_list")
    @classmethod
    def _strictly_decreasing(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("must not be empty")
        if any(e < 0 for e in v):
            raise ValueError("entries must be >= 0")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("must be strictly decreasing")
        return v


class InitialSection(_Section):
    kind: Literal["uniform", "cosine", "bump"] = "cosine"
    amplitude: float = Field(0.2, gt=-1, lt=1)
    mode: Tuple[int, int] = (1, 0)
    width: float = Field(0.15, gt=0)
    floor: float = Field(0.2, ge=0)


class ParticlesSection(_Section):
    N: int = Field(1000, ge=1)
    N_list: List[int] = Field(default_factory=lambda: [250, 1000, 4000])
    M_kernel: int = Field(32, ge=1)
    delta: Optional[float] = Field(None, gt=0)
    gamma: float = Field(-1.0, ge=-1.0, lt=0.0)
    record_every: int = Field(100, ge=1)


class ExperimentSection(_Section):
    n_samples: int = Field(200, ge=1)
    delta_list: List[float] = Field(default_factory=lambda: [2.0**-k for k in range(2, 7)])
    clt_eps: float = Field(1e-3, gt=0)
    clt_tolerance: float = Field(0.15, gt=0)
    probe_modes: List[Tuple[int, int]] = Field(default_factory=lambda: [(1, 0), (0, 1), (1, 1), (2, 0)])
    probe_times: List[float] = Field(default_factory=lambda: [0.25])
    negativity_level: float = Field(0.05, gt=0)
    negativity_L: float = Field(10.0, gt=0)
    blowup_chi: float = 20.0
    blowup_S: float = Field(0.05, gt=0)


class RunSection(_Section):
    output_dir: str = "runs"
    snapshot_stride: int = Field(10, ge=1)
    n_workers: int = Field(1, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)


class RunConfig(_Section):
    spectral: SpectralSection = Field(default_factory=SpectralSection)
    deterministic: DeterministicSection = Field(default_factory=DeterministicSection)
    noise: NoiseSection = Field(default_factory=NoiseSection)
    spde: SpdeSection = Field(default_factory=SpdeSection)
    schedule: ScheduleSection = Field(default_factory=ScheduleSection)
    initial: InitialSection = Field(default_factory=InitialSection)
    particles: ParticlesSection = Field(default_factory=ParticlesSection)
    experiment: ExperimentSection = Field(default_factory=ExperimentSection)
    run: RunSection = Field(default_factory=RunSection)

    # --- runtime configs ---

    def det_config(self) -> DetConfig:
        d = self.deterministic
        return DetConfig(
            chi=d.chi, T=d.T, dt=d.dt, M=self.spectral.M,
            blowup_L2_threshold=d.blowup_L2_threshold, positivity_floor=d.positivity_floor,
            scheme=d.scheme, record_every=d.record_every,
        )

    def spde_config(self) -> SpdeConfig:
        d = self.deterministic
        return SpdeConfig(
            eps=self.spde.eps, delta=self.noise.delta, chi=d.chi, T=d.T, dt=d.dt, M=self.spectral.M,
            seed=self.run.seed, blowup_threshold=d.blowup_L2_threshold,
            negativity_level_L=self.spde.negativity_level_L, gamma=self.noise.gamma,
            positivity_floor=d.positivity_floor, record_every=self.spde.record_every,
        )

    def particle_config(self) -> ParticleConfig:
        p, d = self.particles, self.deterministic
        return ParticleConfig(
            N=p.N, chi=d.chi, T=d.T, dt=d.dt, M=self.spectral.M, M_kernel=p.M_kernel,
            delta=p.delta, gamma=p.gamma, record_every=p.record_every, seed=self.run.seed,
        )

    def scaling_schedule(self) -> ScalingSchedule:
        s = self.schedule
        return ScalingSchedule(tuple(s.eps_list), DeltaRule(**s.delta_rule.model_dump()), gamma=self.noise.gamma)

    def initial_condition(self) -> InitialCondition:
        i = self.initial
        return InitialCondition(kind=i.kind, amplitude=i.amplitude, mode=tuple(i.mode), width=i.width, floor=i.floor)

    # --- diagnostics ---

    def scaling_diagnostics(self) -> Dict[str, Any]:
        return {
            "spde": self.spde_config().scaling_diagnostics(),
            "schedule": self.scaling_schedule().diagnostics(),
        }

    def regime_warnings(self) -> List[str]:
        out: List[str] = []
        regime = self.scaling_schedule().regime()
        if not regime["regular"]:
            out.append("schedule: ε^{1/2}δ^{-γ-2} does not decrease along schedule.eps_list")
        if not regime["rough"]:
            out.append("schedule: ε·log(1/δ) does not decrease along schedule.eps_list")
        # φ(δω) vanishes for |ω| ≥ 1/δ; below 1/M the cutoff lies outside the retained band
        if self.noise.delta * self.spectral.M < 1.0:
            out.append(
                f"noise.delta: δ={self.noise.delta} is below 1/M={1.0 / self.spectral.M:.3g}, "
                "the mollifier is truncated by the spectral cutoff"
            )
        if self.particles.delta is None and self.particles.N ** -0.5 * self.spectral.M < 1.0:
            out.append("particles.N: natural δ = N^{-1/2} is below the resolved scale 1/M")
        return out

    def resolved(self) -> Dict[str, Any]:
        """Echo of the resolved configuration, JSON-safe."""
        return self.model_dump(mode="json")


# =========================
# Loading
# =========================

def _load_yaml(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML ({e})") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping of sections")
    return data


def _set_dotted(data: Dict[str, Any], key: str, value: Any) -> None:
    parts = key.split(".")
    node = data
    for p in parts[:-1]:
        child = node.setdefault(p, {})
        if not isinstance(child, dict):
            raise ConfigError(f"{key}: {p} is not a section")
        node = child
    node[parts[-1]] = value


def _format_errors(e: ValidationError) -> str:
    lines = []
    for err in e.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "; ".join(lines)


def parse_config(path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Defaults < YAML file at `path` < `overrides` (dotted keys, None values skipped)."""
    data: Dict[str, Any] = _load_yaml(Path(path)) if path else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            _set_dotted(data, key, value)
    try:
        cfg = RunConfig.model_validate(data)
        # cross-field checks live in the runtime dataclasses
        cfg.det_config()
        cfg.spde_config()
        cfg.particle_config()
        cfg.scaling_schedule()
    except ValidationError as e:
        raise ConfigError(_format_errors(e)) from e
    for message in cfg.regime_warnings():
        log.warning(message)
    return cfg


def regime_summary(cfg: RunConfig) -> Dict[str, Any]:
    diag = cfg.scaling_diagnostics()
    return {
        "warnings": cfg.regime_warnings(),
        "spde": diag["spde"],
        "schedule": diag["schedule"],
        "mollifier_cutoff_modes": math.floor(1.0 / cfg.noise.delta),
    }
