"""Command-line entry points.

Batch workflows (solve, simulate, normality, validate, replay) plus
the HTTP service launcher.  Exit status: 0 on success, 1 when an input
fails validation, 2 when a computation or I/O step fails at runtime.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .designs import Design
from .errors import (
    AdwynnError,
    ConfigError,
    DesignError,
    DomainError,
    InsufficientSampleError,
    SpecError,
)
from .io import design_to_document, dump_json, parse_model_document
from .model import validate_spec
from .service import DATA_DIR_ENV, DEFAULT_DATA_DIR, create_app
from .session import parse_event_line, replay_events
from .simulate import (
    checkpoints_to_csv,
    config_from_document,
    normality_diagnostics,
    normality_sample_from_document,
    simulate_replications,
    summary_to_json,
)
from .wynn import Trajectory, TrajectoryStep, WynnConfig, solve_locally_d_optimal

VALIDATION_EXIT = 1
RUNTIME_EXIT = 2

_VALIDATION_ERRORS = (
    ConfigError,
    SpecError,
    DomainError,
    DesignError,
    InsufficientSampleError,
)


def _fail(exc: Exception, code: int) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _guarded(fn):
    try:
        fn()
    except _VALIDATION_ERRORS as exc:
        _fail(exc, VALIDATION_EXIT)
    except (AdwynnError, OSError) as exc:
        _fail(exc, RUNTIME_EXIT)


def _read_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}"
        ) from None


def _parse_floats(text: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers, got {text!r}")


def _parse_ints(text: str, what: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated integers, got {text!r}")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


@click.group()
def main():
    """Adaptive D-optimal design toolkit."""


@main.command()
@click.option("--spec", "spec_path", required=True,
              help="model document (JSON file)")
@click.option("--theta", "theta_text", required=True,
              help="comma-separated parameter values")
@click.option("--tol", default=1e-4, show_default=True,
              help="equivalence-gap stopping tolerance")
# the exchange gap closes like 1/n, so tight tolerances need room
@click.option("--max-iters", default=200000, show_default=True)
@click.option("--start", "start_text", default=None,
              help="comma-separated grid indices for the start design "
                   "(default: uniform over the grid)")
@click.option("--out", default=None, help="output file (default: stdout)")
def doptimal(spec_path, theta_text, tol, max_iters, start_text, out):
    """Fixed-parameter D-optimal design with an optimality certificate."""

    def body():
        spec = parse_model_document(_read_json(spec_path), path=spec_path)
        theta = _parse_floats(theta_text, "--theta")
        start = None
        if start_text is not None:
            start = Design.uniform(_parse_ints(start_text, "--start"))
        cfg = WynnConfig(max_iters=max_iters, kw_gap_tol=tol)
        design, cert = solve_locally_d_optimal(spec, theta, start=start, cfg=cfg)
        doc = {
            "theta": list(theta),
            "design": design_to_document(design, spec),
            "certificate": {
                "kw_gap": cert.kw_gap,
                "logdet": cert.logdet,
                "iterations": cert.iterations,
                "status": cert.status,
            },
        }
        _emit(dump_json(doc) + "\n", out)

    _guarded(body)


@main.command()
@click.argument("spec_path")
def validate(spec_path):
    """Check a model document; exit 1 with reasons if it is invalid."""

    def body():
        try:
            spec = parse_model_document(_read_json(spec_path), path=spec_path)
        except (ConfigError, SpecError) as exc:
            click.echo(f"invalid: {exc}")
            sys.exit(VALIDATION_EXIT)
        report = validate_spec(spec)
        if not report.ok:
            for problem in report.problems:
                click.echo(f"invalid: {problem}")
            sys.exit(VALIDATION_EXIT)
        click.echo(
            f"ok: {spec.response.name}, {spec.region.size} grid points, "
            f"p={spec.region.dim}"
        )

    _guarded(body)


@main.command()
@click.option("--config", "config_path", required=True,
              help="replication config (JSON file)")
@click.option("--out-dir", required=True,
              help="directory for summary.json and checkpoints.csv")
def simulate(config_path, out_dir):
    """Run replicated adaptive experiments; outputs are seed-deterministic."""

    def body():
        cfg = config_from_document(_read_json(config_path))
        summary = simulate_replications(cfg)
        outdir = Path(out_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "summary.json").write_text(summary_to_json(summary))
        (outdir / "checkpoints.csv").write_text(checkpoints_to_csv(summary))
        click.echo(f"wrote {outdir / 'summary.json'}")
        click.echo(f"wrote {outdir / 'checkpoints.csv'}")

    _guarded(body)


@main.command()
@click.option("--summary", "summary_path", required=True,
              help="summary.json produced by the simulate command")
@click.option("--level", default=0.95, show_default=True)
@click.option("--out", default=None, help="output file (default: stdout)")
def normality(summary_path, level, out):
    """Normality diagnostics of the terminal standardized estimates."""

    def body():
        sample = normality_sample_from_document(_read_json(summary_path))
        report = normality_diagnostics(sample, level=level)
        doc = {
            "sample_size": report.sample_size,
            "excluded": report.excluded,
            "dim": report.dim,
            "level": report.level,
            "chi_square_threshold": report.chi_square_threshold,
            "coverage": report.coverage,
            "mean_norm": report.mean_norm,
            "covariance": [list(row) for row in report.covariance],
            "frob_to_identity": report.frob_to_identity,
        }
        _emit(dump_json(doc) + "\n", out)

    _guarded(body)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--data-dir", default=None,
              help=f"session log directory (default: ${DATA_DIR_ENV} "
                   f"or ./{DEFAULT_DATA_DIR})")
def serve(host, port, data_dir):
    """Serve the live-session HTTP API."""

    def body():
        import uvicorn

        uvicorn.run(create_app(data_dir), host=host, port=port)

    _guarded(body)


@main.group()
def session():
    """Operations on persisted session logs."""


@session.command("replay")
@click.option("--events", "events_path", required=True,
              help="session log (.ndjson file)")
@click.option("--out", default=None, help="output CSV (default: stdout)")
def session_replay(events_path, out):
    """Replay an event log and emit the reconstructed trajectory."""

    def body():
        try:
            raw = Path(events_path).read_bytes()
        except OSError as exc:
            raise ConfigError(f"{events_path}: {exc}") from exc
        events = [parse_event_line(ln) for ln in raw.split(b"\n") if ln]
        spec, state = replay_events(events)
        labels = spec.region.labels
        xy: list[tuple[str | None, float | None]] = [(None, None)]
        for k, y in state.history[state.n_start:]:
            xy.append((labels[k], y))
        steps = tuple(
            TrajectoryStep(
                n=d.n,
                x_label=lb,
                y=y,
                theta_hat=d.theta_hat,
                logdet=d.logdet,
                lambda_min=d.lambda_min,
                kw_gap=d.kw_gap,
                err_norm=None,
            )
            for (lb, y), d in zip(xy, state.diagnostics)
        )
        traj = Trajectory(
            start_points=tuple(k for k, _ in state.history[: state.n_start]),
            steps=steps,
            final_design=state.design,
            final_theta=tuple(float(v) for v in state.theta_hat),
            theta_bar=None,
        )
        _emit(traj.to_csv(), out)

    _guarded(body)


if __name__ == "__main__":
    main()
