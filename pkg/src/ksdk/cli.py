# src/ksdk/cli.py
from __future__ import annotations

import logging
import os
from contextlib import contextmanager
from dataclasses import replace
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
import typer

from ksdk import __version__
from ksdk.deterministic import DetConfig, energy_residual, solve_det
from ksdk.errors import ConfigError, KsdkError
from ksdk.experiments import (
    DeltaRule,
    ExperimentReport,
    build_baseline,
    run_blowup,
    run_clt,
    run_enhancement_scan,
    run_lln,
    run_negativity,
    run_particle_comparison,
)
from ksdk.fields import FourierField
from ksdk.initial import make_initial
from ksdk.noise import MollifierSymbol
from ksdk.particles import mean_field_gap, simulate_particles
from ksdk.selftest import run_selftest
from ksdk.settings import RunConfig, parse_config, regime_summary
from ksdk.spde import rate_functional, skeleton_solve, solve_ou, solve_spde
from ksdk.spectral import l2_norm
from ksdk.store import RunDirectory, export_trajectory, write_particles_csv, write_series_csv

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERDICT_FAIL = 2

app = typer.Typer(help="Keller–Segel fluctuation lab: solvers, Monte Carlo experiments, self-test.")

# ===============================
# Shared options
# ===============================

ConfigOpt = typer.Option(None, "--config", "-c", help="YAML config (sections per module), e.g. configs/ksdk.yaml")
SeedOpt = typer.Option(None, "--seed", help="Master seed (u64)")
WorkersOpt = typer.Option(None, "--workers", help="Worker processes for Monte Carlo ensembles")
OutOpt = typer.Option(None, "--out", envvar="KSDK_OUT", help="Output root (default run.output_dir)")
SamplesOpt = typer.Option(None, "--samples", help="Monte Carlo samples per parameter point")
ChiOpt = typer.Option(None, "--chi", help="Chemotactic sensitivity χ")
DeltaOpt = typer.Option(None, "--delta", help="Noise correlation length δ")


@app.callback()
def main(
    log_level: str = typer.Option("INFO", "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
) -> None:
    logging.basicConfig(
        level=getattr(logging, log_level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


@contextmanager
def _errors_to_exit() -> Iterator[None]:
    try:
        yield
    except KsdkError as e:
        log.error("%s: %s", type(e).__name__, e)
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(code=EXIT_ERROR)


def _resolve(config: Optional[str], **overrides: Any) -> RunConfig:
    return parse_config(config, {k.replace("__", "."): v for k, v in overrides.items()})


def _run_dir(cfg: RunConfig, name: str) -> RunDirectory:
    rd = RunDirectory(os.path.join(cfg.run.output_dir, name))
    rd.write_json("config.json", cfg.resolved())
    rd.write_json("regime.json", regime_summary(cfg))
    rd.write_text("VERSION", f"ksdk {__version__}")
    return rd


def _parse_modes(text: Optional[str]) -> Optional[List[Tuple[int, int]]]:
    """'1,0;0,1' -> [(1, 0), (0, 1)]."""
    if not text:
        return None
    try:
        modes = []
        for part in text.split(";"):
            a, b = part.split(",")
            modes.append((int(a), int(b)))
        return modes
    except ValueError as e:
        raise ConfigError(f"--modes: expected 'k1,k2;k1,k2;...', got {text!r}") from e


def _finish_report(rd: RunDirectory, report: ExperimentReport) -> None:
    rd.write_json("report.json", report.to_dict())
    rd.write_csv("report.csv", report.rows)
    rd.write_csv("fits.csv", [{"fit": name, **fit} for name, fit in sorted(report.fits.items())])
    for name, ok in report.verdicts.items():
        typer.echo(f"{report.name}.{name}: {'PASS' if ok else 'FAIL'}")
    for w in report.warnings:
        typer.echo(f"warning: {w}")
    typer.echo(f"Report written to {rd.root}")
    if not report.passed:
        raise typer.Exit(code=EXIT_VERDICT_FAIL)


# ===============================
# Solvers
# ===============================

@app.command("simulate-det")
def simulate_det(
    config: Optional[str] = ConfigOpt,
    out: Optional[str] = OutOpt,
    chi: Optional[float] = ChiOpt,
) -> None:
    """Deterministic Keller–Segel run. Writes trajectory/ (meta.jsonl + snapshots) and energy.csv (t, residual)."""
    with _errors_to_exit():
        cfg = _resolve(config, run__output_dir=out, deterministic__chi=chi)
        rd = _run_dir(cfg, "simulate-det")
        det_cfg = cfg.det_config()
        traj = solve_det(make_initial(cfg.initial_condition(), det_cfg.M), det_cfg)
        export_trajectory(traj, rd.path("trajectory"), stride=cfg.run.snapshot_stride)
        residual = energy_residual(traj, det_cfg.chi)
        write_series_csv(rd.path("energy.csv"), {"t": traj.times, "residual": list(residual)})
        mass = np.asarray(traj.diagnostics["mass"])
        rd.write_json("summary.json", {
            "blew_up_at": traj.blew_up_at,
            "final_l2": l2_norm(traj.final),
            "max_mass_drift": float(np.max(np.abs(mass - mass[0]))),
            "min_value": min(traj.min_value_path),
        })
        typer.echo(f"Trajectory written to {rd.root}")


@app.command("simulate-spde")
def simulate_spde(
    config: Optional[str] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    out: Optional[str] = OutOpt,
    eps: Optional[float] = typer.Option(None, "--eps", help="Noise intensity ε"),
    delta: Optional[float] = DeltaOpt,
    chi: Optional[float] = ChiOpt,
    path_id: int = typer.Option(0, "--path-id", help="Noise stream index"),
) -> None:
    """One stopped SPDE path. Writes trajectory/ and series.csv (t, negative_part, gap)."""
    with _errors_to_exit():
        cfg = _resolve(config, run__seed=seed, run__output_dir=out, spde__eps=eps,
                       noise__delta=delta, deterministic__chi=chi)
        rd = _run_dir(cfg, "simulate-spde")
        spde_cfg = cfg.spde_config()
        base = build_baseline(cfg.initial_condition(), spde_cfg)
        path = solve_spde(base.rho0, base.det, spde_cfg, sigma_path=base.sigma, path_id=path_id)
        export_trajectory(path.trajectory, rd.path("trajectory"))
        write_series_csv(rd.path("series.csv"), {
            "t": list(path.times), "negative_part": path.negative_part_norm_path, "gap": path.gap_path,
        })
        rd.write_json("summary.json", {
            "stopping_time": path.stopping_time,
            "blew_up_at": path.blew_up_at,
            "sup_gap": path.sup_gap(),
            "sup_negative_part": path.sup_negative_part(),
            "path_id": path_id,
        })
        typer.echo(f"Path written to {rd.root}")


@app.command("simulate-ou")
def simulate_ou(
    config: Optional[str] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    out: Optional[str] = OutOpt,
    chi: Optional[float] = ChiOpt,
    path_id: int = typer.Option(0, "--path-id", help="Noise stream index"),
) -> None:
    """Generalized Ornstein–Uhlenbeck fluctuation path. Writes trajectory/."""
    with _errors_to_exit():
        cfg = _resolve(config, run__seed=seed, run__output_dir=out, deterministic__chi=chi)
        rd = _run_dir(cfg, "simulate-ou")
        spde_cfg = cfg.spde_config()
        base = build_baseline(cfg.initial_condition(), spde_cfg)
        traj = solve_ou(base.det, spde_cfg, sigma_path=base.sigma, path_id=path_id)
        export_trajectory(traj, rd.path("trajectory"))
        rd.write_json("summary.json", {"final_l2": l2_norm(traj.final), "path_id": path_id})
        typer.echo(f"Path written to {rd.root}")


@app.command("simulate-particles")
def simulate_particles_cmd(
    config: Optional[str] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    out: Optional[str] = OutOpt,
    chi: Optional[float] = ChiOpt,
    n: Optional[int] = typer.Option(None, "--n", help="Number of particles"),
) -> None:
    """Interacting particle system. Writes particles.csv (t, i, x1, x2) and gap.csv (t, gap)."""
    with _errors_to_exit():
        cfg = _resolve(config, run__seed=seed, run__output_dir=out, deterministic__chi=chi, particles__N=n)
        rd = _run_dir(cfg, "simulate-particles")
        pcfg = cfg.particle_config()
        rho0 = make_initial(cfg.initial_condition(), pcfg.M)
        path = simulate_particles(rho0, pcfg)
        write_particles_csv(rd.path("particles.csv"), path)
        det = solve_det(rho0, DetConfig(chi=pcfg.chi, T=pcfg.T, dt=pcfg.dt, M=pcfg.M, record_every=1))
        moll = MollifierSymbol.for_resolution(pcfg.M, pcfg.correlation_length)
        gaps = mean_field_gap(path, det, moll, pcfg.gamma)
        write_series_csv(rd.path("gap.csv"), {"t": [s.t for s in path], "gap": gaps})
        typer.echo(f"Particles written to {rd.root}")


@app.command("skeleton")
def skeleton(
    config: Optional[str] = ConfigOpt,
    out: Optional[str] = OutOpt,
    chi: Optional[float] = ChiOpt,
    amplitude: float = typer.Option(0.0, "--amplitude", help="Control h = a·cos(2π⟨ω,x⟩) e₁, constant in time"),
    modes: Optional[str] = typer.Option(None, "--modes", help="Control wavevector as 'k1,k2'"),
) -> None:
    """Skeleton equation for a time-constant control. Writes trajectory/ and summary.json (rate, gap)."""
    with _errors_to_exit():
        cfg = _resolve(config, run__output_dir=out, deterministic__chi=chi)
        rd = _run_dir(cfg, "skeleton")
        det_cfg = replace(cfg.det_config(), record_every=1)
        M = det_cfg.M
        rho0 = make_initial(cfg.initial_condition(), M)
        det = solve_det(rho0, det_cfg)
        k1, k2 = (_parse_modes(modes) or [(1, 0)])[0]
        h_field = FourierField.stack([FourierField.cosine(M, (k1, k2), amplitude), FourierField.zeros(M)])
        h = [h_field] * det_cfg.n_steps
        traj = skeleton_solve(rho0, h, det, det_cfg)
        export_trajectory(traj, rd.path("trajectory"), stride=cfg.run.snapshot_stride)
        n = min(len(traj.fields), len(det.fields))
        rd.write_json("summary.json", {
            "rate": rate_functional(h + [h_field], det_cfg.dt),
            "blew_up_at": traj.blew_up_at,
            "final_gap_l2": l2_norm(traj.fields[n - 1] - det.fields[n - 1]),
        })
        typer.echo(f"Skeleton written to {rd.root}")


# ===============================
# Experiments
# ===============================

def _schedule_overrides(eps: Optional[List[float]]) -> Dict[str, Any]:
    return {"schedule__eps_list": list(eps) if eps else None}


@app.command("enhancement-scan")
def enhancement_scan(
    config: Optional[str] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    workers: Optional[int] = WorkersOpt,
    out: Optional[str] = OutOpt,
    samples: Optional[int] = SamplesOpt,
    delta: Optional[List[float]] = typer.Option(None, "--delta", help="δ values (repeat the flag)"),
    modes: Optional[str] = typer.Option(None, "--modes", help="Probe mode 'k1,k2' for the ti variance oracle"),
) -> None:
    """E‖·‖_{C^α} of the enhancement per δ. CSV columns: sigma, object, delta, norm_estimate, stderr, n_samples, oracle."""
    with _errors_to_exit():
        cfg = _resolve(config, run__seed=seed, run__n_workers=workers, run__output_dir=out,
                       experiment__n_samples=samples, experiment__delta_list=list(delta) if delta else None)
        rd = _run_dir(cfg, "enhancement-scan")
        probe = (_parse_modes(modes) or [(1, 0)])[0]
        report = run_enhancement_scan(
            cfg.experiment.delta_list, cfg.spde_config(), cfg.experiment.n_samples,
            cfg.initial_condition(), cfg.run.n_workers, probe,
        )
        _finish_report(rd, report)


@app.command("experiment-lln")
def experiment_lln(
    config: Optional[str] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    workers: Optional[int] = WorkersOpt,
    out: Optional[str] = OutOpt,
    samples: Optional[int] = SamplesOpt,
    eps: Optional[List[float]] = typer.Option(None, "--eps", help="ε schedule, decreasing (repeat the flag)"),
    chi: Optional[float] = ChiOpt,
) -> None:
    """Law of large numbers. CSV columns: eps, delta, regular, rough, estimate, stderr, n_samples, final_gap_rms, blowups, oracle_final_rms."""
    with _errors_to_exit():
        cfg = _resolve(config, run__seed=seed, run__n_workers=workers, run__output_dir=out,
                       experiment__n_samples=samples, deterministic__chi=chi, **_schedule_overrides(eps))
        rd = _run_dir(cfg, "experiment-lln")
        report = run_lln(cfg.scaling_schedule(), cfg.spde_config(), cfg.experiment.n_samples,
                         cfg.initial_condition(), cfg.run.n_workers)
        _finish_report(rd, report)


@app.command("experiment-clt")
def experiment_clt(
    config: Optional[str] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    workers: Optional[int] = WorkersOpt,
    out: Optional[str] = OutOpt,
    samples: Optional[int] = SamplesOpt,
    eps: Optional[float] = typer.Option(None, "--eps", help="Noise intensity ε"),
    delta: Optional[float] = typer.Option(None, "--delta", help="Fixed δ (default: schedule delta_rule)"),
    chi: Optional[float] = ChiOpt,
    modes: Optional[str] = typer.Option(None, "--modes", help="Probe modes 'k1,k2;k1,k2;...'"),
) -> None:
    """Fluctuations against the OU ensemble. CSV columns: t, mode, fluctuation_second_moment, ou_second_moment, relative_discrepancy, f_test_*, *_oracle, *_z."""
    with _errors_to_exit():
        cfg = _resolve(config, run__seed=seed, run__n_workers=workers, run__output_dir=out,
                       experiment__n_samples=samples, experiment__clt_eps=eps, deterministic__chi=chi,
                       experiment__probe_modes=_parse_modes(modes))
        rd = _run_dir(cfg, "experiment-clt")
        rule = DeltaRule("constant", c=delta) if delta is not None else cfg.scaling_schedule().delta_rule
        ex = cfg.experiment
        report = run_clt(
            ex.clt_eps, rule, cfg.spde_config(), ex.n_samples,
            probe_modes=[tuple(m) for m in ex.probe_modes], probe_times=ex.probe_times,
            initial=cfg.initial_condition(), n_workers=cfg.run.n_workers, tolerance=ex.clt_tolerance,
        )
        _finish_report(rd, report)


@app.command("experiment-negativity")
def experiment_negativity(
    config: Optional[str] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    workers: Optional[int] = WorkersOpt,
    out: Optional[str] = OutOpt,
    samples: Optional[int] = SamplesOpt,
    eps: Optional[List[float]] = typer.Option(None, "--eps", help="ε values, decreasing (repeat the flag)"),
    level: Optional[float] = typer.Option(None, "--level", help="Negativity level λ"),
) -> None:
    """Negative-mass probabilities. CSV columns: eps, delta, count, n_samples, estimate, stderr, wilson_low, wilson_high, inv_eps, composite_speed."""
    with _errors_to_exit():
        cfg = _resolve(config, run__seed=seed, run__n_workers=workers, run__output_dir=out,
                       experiment__n_samples=samples, experiment__negativity_level=level, **_schedule_overrides(eps))
        rd = _run_dir(cfg, "experiment-negativity")
        ex = cfg.experiment
        sched = cfg.scaling_schedule()
        report = run_negativity(
            sched.eps_list, sched.delta_rule, ex.negativity_level, ex.negativity_L,
            cfg.spde_config(), ex.n_samples, cfg.initial_condition(), cfg.run.n_workers,
        )
        _finish_report(rd, report)


@app.command("experiment-blowup")
def experiment_blowup(
    config: Optional[str] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    workers: Optional[int] = WorkersOpt,
    out: Optional[str] = OutOpt,
    samples: Optional[int] = SamplesOpt,
    eps: Optional[List[float]] = typer.Option(None, "--eps", help="ε values, decreasing (repeat the flag)"),
    chi: Optional[float] = typer.Option(None, "--chi", help="Large χ of the blow-up experiment"),
) -> None:
    """Blow-up probabilities before S. CSV columns: eps, delta, count, n_samples, estimate, stderr, wilson_low, wilson_high, inv_eps."""
    with _errors_to_exit():
        cfg = _resolve(config, run__seed=seed, run__n_workers=workers, run__output_dir=out,
                       experiment__n_samples=samples, experiment__blowup_chi=chi, **_schedule_overrides(eps))
        rd = _run_dir(cfg, "experiment-blowup")
        ex = cfg.experiment
        sched = cfg.scaling_schedule()
        report = run_blowup(
            sched.eps_list, sched.delta_rule, ex.blowup_chi, ex.blowup_S,
            cfg.spde_config(), ex.n_samples, cfg.initial_condition(), cfg.run.n_workers,
        )
        _finish_report(rd, report)


@app.command("experiment-particles")
def experiment_particles(
    config: Optional[str] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    workers: Optional[int] = WorkersOpt,
    out: Optional[str] = OutOpt,
    samples: Optional[int] = SamplesOpt,
    chi: Optional[float] = ChiOpt,
    n: Optional[List[int]] = typer.Option(None, "--n", help="Particle numbers (repeat the flag)"),
) -> None:
    """Particles against the mean field. CSV columns: N, delta, estimate, stderr, n_samples."""
    with _errors_to_exit():
        cfg = _resolve(config, run__seed=seed, run__n_workers=workers, run__output_dir=out,
                       experiment__n_samples=samples, deterministic__chi=chi,
                       particles__N_list=list(n) if n else None)
        rd = _run_dir(cfg, "experiment-particles")
        report = run_particle_comparison(
            cfg.particles.N_list, cfg.particle_config(), cfg.experiment.n_samples,
            cfg.initial_condition(), cfg.run.n_workers,
        )
        _finish_report(rd, report)


@app.command("selftest")
def selftest(
    out: Optional[str] = OutOpt,
    seed: Optional[int] = SeedOpt,
) -> None:
    """Built-in oracle suite. Writes selftest.csv (check, value, tolerance, passed)."""
    with _errors_to_exit():
        cfg = _resolve(None, run__output_dir=out, run__seed=seed)
        rd = _run_dir(cfg, "selftest")
        results = run_selftest(seed=cfg.run.seed)
        rd.write_csv("selftest.csv", [r.to_dict() for r in results])
        for r in results:
            typer.echo(f"{r.check}: {'PASS' if r.passed else 'FAIL'} ({r.value:.3e})")
        if not all(r.passed for r in results):
            raise typer.Exit(code=EXIT_VERDICT_FAIL)


if __name__ == "__main__":
    app()
