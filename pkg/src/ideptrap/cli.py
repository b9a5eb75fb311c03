"""Command-line entry point: config-driven solve, sweep, spectrum, trace,
and metrics runs with deterministic text outputs and a JSON run manifest.

Exit codes: 0 success, 2 config error, 3 convergence failure, 4 I/O error.
Failures print one machine-readable JSON record to stderr naming the stage.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone

from . import __version__
from .config import RunConfig, load_config, serialize_config, um_to_m
from .dep import cm_spectrum, dep_force_field
from .dynamics import FluidProps, ParticleState, integrate
from .dynamics import EnsembleResult
from .errors import (
    DegenerateDenominator,
    GeometryInvalid,
    IoError,
    NotConverged,
    OutOfDomain,
    ParseError,
    ResolutionTooCoarse,
    SingularSystem,
    StepUnderflow,
    TrapSimError,
    ValidationError,
    ZeroFrequency,
)
from .export import (
    ensure_dir,
    export_ensemble,
    export_report,
    export_scalar_field,
    export_spectrum,
    export_trajectory,
    export_vector_field,
)
from .geometry import constriction_zones
from .metrics import gap_sweep, height_decay, uniformity
from .solver import solve_device

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4

_CONFIG_ERRORS = (
    ParseError,
    ValidationError,
    GeometryInvalid,
    ResolutionTooCoarse,
    OutOfDomain,
    ZeroFrequency,
    DegenerateDenominator,
)
_CONVERGENCE_ERRORS = (NotConverged, SingularSystem, StepUnderflow)


@dataclass(frozen=True)
class RunManifest:
    """Provenance record written once per run, after all outputs."""

    config_sha256: str
    tool_version: str
    started_utc: str
    finished_utc: str
    solver_iterations: int
    final_residual: float
    outputs: tuple[str, ...]


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _provenance(cfg: RunConfig) -> str:
    pair = cfg.device.tip_pairs[0]
    mode = cfg.device.electrode_mode
    drive = (
        f"applied_field_v_per_m={mode.applied_field!r}"
        if mode.applied_field is not None
        else f"voltage_v={mode.voltage!r}"
    )
    return (
        f"gap_m={pair.gap!r} tip_angle_deg={pair.tip_angle!r} "
        f"insulator_height_m={cfg.device.insulator_height!r} {drive} "
        f"sigma_s_per_m={cfg.sigma_medium!r} resolution_m={cfg.resolution!r} "
        f"rel_tolerance={cfg.solver.rel_tolerance!r}"
    )


class _Run:
    """Collects output files for one run and writes the manifest last."""

    def __init__(self, cfg: RunConfig, out_dir: str | None):
        self.cfg = cfg
        self.dir = out_dir if out_dir is not None else cfg.outputs.directory
        self.started = _utc_now()
        self.files: list[str] = []
        ensure_dir(self.dir)

    def path(self, name: str) -> str:
        self.files.append(name)
        return os.path.join(self.dir, name)

    def finish(self, iterations: int = 0, residual: float = 0.0) -> list[str]:
        resolved = serialize_config(self.cfg)
        with open(self.path("resolved.cfg"), "w", encoding="utf-8") as fh:
            fh.write(resolved)
        manifest = RunManifest(
            config_sha256=hashlib.sha256(resolved.encode()).hexdigest(),
            tool_version=__version__,
            started_utc=self.started,
            finished_utc=_utc_now(),
            solver_iterations=iterations,
            final_residual=residual,
            outputs=tuple(self.files),
        )
        with open(os.path.join(self.dir, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest.__dict__, fh, indent=2, default=list)
            fh.write("\n")
        self.files.append("manifest.json")
        return [os.path.join(self.dir, f) for f in self.files]


def _solve(cfg: RunConfig):
    return solve_device(
        cfg.device,
        cfg.resolution,
        sigma_medium=cfg.sigma_medium,
        eps_r_medium=cfg.eps_r_medium,
        cfg=cfg.solver,
    )


def _write_reports(run: _Run, cfg: RunConfig, solution) -> None:
    prov = _provenance(cfg)
    report = height_decay(solution, cfg.metrics.heights)
    export_report(report, run.path("height_decay.csv"), prov)
    slices = [uniformity(solution.E2, h) for h in cfg.metrics.uniformity_heights]
    export_report(slices, run.path("uniformity.csv"), prov)


def run_solve(cfg: RunConfig, out_dir: str | None = None) -> list[str]:
    """Full solve: optional field exports plus the standard report CSVs."""
    run = _Run(cfg, out_dir)
    solution = _solve(cfg)
    fmt = cfg.outputs.format
    ext = "csv" if fmt == "csv" else "vtk"
    if cfg.outputs.export_phi:
        export_scalar_field(solution.phi, run.path(f"phi.{ext}"), fmt)
    if cfg.outputs.export_e2:
        export_scalar_field(solution.E2, run.path(f"e2.{ext}"), fmt)
    if cfg.outputs.export_grad_e2:
        export_vector_field(solution.grad_E2, run.path(f"grad_e2.{ext}"), fmt)
    _write_reports(run, cfg, solution)
    return run.finish(solution.iterations, solution.residual)


def run_metrics(cfg: RunConfig, out_dir: str | None = None) -> list[str]:
    """Solve and write only the report CSVs."""
    run = _Run(cfg, out_dir)
    solution = _solve(cfg)
    _write_reports(run, cfg, solution)
    return run.finish(solution.iterations, solution.residual)


def run_sweep(cfg: RunConfig, sweep_axis: str = "gap", out_dir: str | None = None) -> list[str]:
    """One solve per swept gap; writes the gap sweep report."""
    if sweep_axis != "gap":
        raise ValidationError("sweep", f"unsupported sweep axis {sweep_axis!r}")
    run = _Run(cfg, out_dir)
    report = gap_sweep(
        cfg.device,
        cfg.sweep.gaps,
        cfg.sweep.height,
        cfg.resolution,
        sigma_medium=cfg.sigma_medium,
        eps_r_medium=cfg.eps_r_medium,
        cfg=cfg.solver,
    )
    export_report(report, run.path("gap_sweep.csv"), _provenance(cfg))
    return run.finish()


def run_spectrum(cfg: RunConfig, out_dir: str | None = None) -> list[str]:
    """Clausius-Mossotti spectrum of the configured particle and medium."""
    run = _Run(cfg, out_dir)
    spectrum = cm_spectrum(
        cfg.particle.props,
        cfg.medium_props(),
        cfg.spectrum.f_min,
        cfg.spectrum.f_max,
        cfg.spectrum.points_per_decade,
    )
    export_spectrum(spectrum, run.path("spectrum.csv"))
    return run.finish()


def run_trace(cfg: RunConfig, releases=None, out_dir: str | None = None) -> list[str]:
    """Solve, build the force field, and track released particles."""
    run = _Run(cfg, out_dir)
    solution = _solve(cfg)
    force = dep_force_field(cfg.particle, cfg.medium_props(), cfg.omega, solution.grad_E2)
    fluid = FluidProps(props=cfg.medium_props())
    zones = constriction_zones(cfg.device)
    points = [tuple(p) for p in releases] if releases is not None else [cfg.trace.release]
    results = []
    for index, point in enumerate(points):
        result = integrate(
            ParticleState(point),
            force,
            cfg.particle,
            fluid,
            cfg.trace.step_control(),
            cfg.trace.stop_rules(zones),
            device=cfg.device,
        )
        results.append(result)
        export_trajectory(result, run.path(f"trace_{index:03d}.csv"))
    ensemble = EnsembleResult(tuple(points), tuple(results))
    export_ensemble(ensemble, run.path("ensemble.csv"))
    return run.finish(solution.iterations, solution.residual)


def _apply_threads(n: int | None) -> None:
    if n is None:
        return
    if n < 1:
        raise ValidationError("threads", "must be >= 1")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=n)
    except ImportError:
        pass


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to a run config file")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument(
        "--resolution", metavar="UM", help="grid spacing in micrometers (overrides the config)"
    )
    common.add_argument("--threads", type=int, help="cap worker threads")
    common.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="logging verbosity",
    )
    parser = argparse.ArgumentParser(
        prog="ideptrap",
        description="Insulator-based dielectrophoretic cell trapping simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve fields and export them")
    sweep = sub.add_parser("sweep", parents=[common], help="sweep the tip gap")
    sweep.add_argument("--axis", default="gap", help="sweep axis (only 'gap')")
    sub.add_parser("spectrum", parents=[common], help="CM factor vs frequency")
    sub.add_parser("trace", parents=[common], help="track a released particle")
    sub.add_parser("metrics", parents=[common], help="solve and write report CSVs only")
    return parser


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.resolution is not None:
        try:
            resolution = um_to_m(args.resolution)
        except ValueError:
            raise ValidationError("resolution", f"not a number: {args.resolution!r}")
        if resolution <= 0:
            raise ValidationError("resolution", "must be positive")
        cfg = _replace_resolution(cfg, resolution)
    return cfg


def _replace_resolution(cfg: RunConfig, resolution: float) -> RunConfig:
    from dataclasses import replace

    return replace(cfg, resolution=resolution)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(levelname)s %(name)s: %(message)s",
    )
    stage = args.command
    try:
        _apply_threads(args.threads)
        cfg = _load(args)
        if args.command == "solve":
            files = run_solve(cfg, args.out)
        elif args.command == "sweep":
            files = run_sweep(cfg, args.axis, args.out)
        elif args.command == "spectrum":
            files = run_spectrum(cfg, args.out)
        elif args.command == "trace":
            files = run_trace(cfg, out_dir=args.out)
        else:
            files = run_metrics(cfg, args.out)
    except _CONFIG_ERRORS as exc:
        return _fail(stage, exc, EXIT_CONFIG)
    except _CONVERGENCE_ERRORS as exc:
        return _fail(stage, exc, EXIT_CONVERGENCE)
    except (IoError, OSError) as exc:
        return _fail(stage, exc, EXIT_IO)
    except TrapSimError as exc:
        return _fail(stage, exc, EXIT_CONFIG)
    for path in files:
        log.info("wrote %s", path)
    return EXIT_OK


def _fail(stage: str, exc: Exception, code: int) -> int:
    record = {"stage": stage, "error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(record), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
