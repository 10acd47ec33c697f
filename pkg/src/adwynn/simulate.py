"""Replicated adaptive runs and their statistical reports.

Each replicate draws its generator from the master seed by spawn key,
so growing the replicate count leaves earlier replicates' numbers
untouched, and a failed replicate is recorded alongside the survivors
rather than dropped.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .designs import information_matrix, lambda_min, logdet, sym_inv_sqrt
from .errors import ConfigError, DomainError, InsufficientSampleError
from .io import dump_json, format_float, model_to_document, parse_model_document
from .model import ModelSpec
from .special import chi_square_quantile
from .wynn import (
    EstimatorConfig,
    adaptive_init,
    estimator_from_document,
    estimator_to_document,
    mean_source,
    simulated_source,
)

RESPONSE_MODES = ("simulated", "mean")


@dataclass(frozen=True)
class ReplicationConfig:
    spec: ModelSpec
    theta_bar: tuple[float, ...]
    start_points: tuple[int, ...]
    horizon: int
    replicates: int
    master_seed: int
    estimator: EstimatorConfig = EstimatorConfig()
    checkpoints: tuple[int, ...] = ()
    response_mode: str = "simulated"
    lambda_floor_from: int = 200

    def __post_init__(self):
        tb = np.asarray(self.theta_bar, dtype=float)
        if not self.spec.box.strictly_contains(tb):
            raise DomainError(
                f"true parameter {tb.tolist()} must be strictly inside the box"
            )
        if self.replicates < 1:
            raise DomainError("replicates must be at least 1")
        n_st = len(self.start_points)
        if n_st == 0:
            raise DomainError("need at least one starting point")
        if self.horizon < n_st:
            raise DomainError(
                f"horizon {self.horizon} below the {n_st} starting points"
            )
        for c in self.checkpoints:
            if not n_st <= c <= self.horizon:
                raise DomainError(
                    f"checkpoint {c} outside [{n_st}, {self.horizon}]"
                )
        if list(self.checkpoints) != sorted(self.checkpoints):
            raise DomainError("checkpoints must be sorted ascending")
        if self.response_mode not in RESPONSE_MODES:
            raise DomainError(
                f"response_mode must be one of {RESPONSE_MODES}, "
                f"got {self.response_mode!r}"
            )
        object.__setattr__(
            self, "theta_bar", tuple(float(v) for v in tb)
        )
        object.__setattr__(
            self,
            "start_points",
            tuple(self.spec.region.check_index(k) for k in self.start_points),
        )
        object.__setattr__(self, "checkpoints", tuple(int(c) for c in self.checkpoints))


def config_document(cfg: ReplicationConfig) -> dict:
    return {
        "model": model_to_document(cfg.spec),
        "theta_bar": list(cfg.theta_bar),
        "start_points": list(cfg.start_points),
        "horizon": cfg.horizon,
        "replicates": cfg.replicates,
        "master_seed": cfg.master_seed,
        "checkpoints": list(cfg.checkpoints),
        "response_mode": cfg.response_mode,
        "lambda_floor_from": cfg.lambda_floor_from,
        "estimator": estimator_to_document(cfg.estimator),
    }


def config_from_document(doc: dict) -> ReplicationConfig:
    """Inverse of config_document; raises ConfigError on malformed input."""
    if not isinstance(doc, dict):
        raise ConfigError("replication config must be a JSON object")
    for key in ("model", "theta_bar", "start_points", "horizon",
                "replicates", "master_seed"):
        if key not in doc:
            raise ConfigError(f"replication config is missing '{key}'")
    spec = parse_model_document(doc["model"])
    est = estimator_from_document(doc.get("estimator", {}))
    try:
        return ReplicationConfig(
            spec=spec,
            theta_bar=tuple(float(v) for v in doc["theta_bar"]),
            start_points=tuple(int(k) for k in doc["start_points"]),
            horizon=int(doc["horizon"]),
            replicates=int(doc["replicates"]),
            master_seed=int(doc["master_seed"]),
            estimator=est,
            checkpoints=tuple(int(c) for c in doc.get("checkpoints", ())),
            response_mode=str(doc.get("response_mode", "simulated")),
            lambda_floor_from=int(doc.get("lambda_floor_from", 200)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"replication config invalid: {exc}") from exc


def config_digest(cfg: ReplicationConfig) -> str:
    doc = dump_json(config_document(cfg))
    return hashlib.sha256(doc.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CheckpointRecord:
    n: int
    theta_hat: tuple[float, ...]
    err_norm: float
    logdet: float
    lambda_min: float
    kw_gap: float
    info_matrix: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class ReplicateResult:
    index: int
    ok: bool
    error: str | None
    checkpoints: tuple[CheckpointRecord, ...]
    z: tuple[float, ...] | None
    z_exclusion: str | None
    lambda_floor: float | None
    converged: bool
    at_boundary: bool


@dataclass(frozen=True)
class NormalitySample:
    dim: int
    z_rows: tuple[tuple[float, ...], ...]
    excluded: int


@dataclass(frozen=True)
class ReplicationSummary:
    config_digest: str
    master_seed: int
    replicates: tuple[ReplicateResult, ...]
    checkpoints: tuple[int, ...]
    dim: int

    def normality_sample(self) -> NormalitySample:
        rows = tuple(r.z for r in self.replicates if r.z is not None)
        return NormalitySample(
            dim=self.dim,
            z_rows=rows,
            excluded=len(self.replicates) - len(rows),
        )


def _matrix_tuple(M: np.ndarray) -> tuple[tuple[float, ...], ...]:
    return tuple(tuple(float(v) for v in row) for row in M)


def _run_replicate(cfg: ReplicationConfig, index: int,
                   fixed_phi2: np.ndarray) -> ReplicateResult:
    spec = cfg.spec
    rng = np.random.default_rng(
        np.random.SeedSequence(cfg.master_seed, spawn_key=(index,))
    )
    if cfg.response_mode == "simulated":
        source = simulated_source(cfg.theta_bar)
    else:
        source = mean_source(cfg.theta_bar)
    tbar = np.asarray(cfg.theta_bar, dtype=float)
    F = spec.region.fmatrix
    want = set(cfg.checkpoints)
    records: list[CheckpointRecord] = []
    floor_val: float | None = None

    state = adaptive_init(spec, cfg.start_points, cfg.estimator)
    for k in list(state.pending_points):
        state.observe(k, source(spec, k, rng))

    def track(nvalue: int) -> None:
        nonlocal floor_val
        diag = state.diagnostics[-1]
        if nvalue >= cfg.lambda_floor_from:
            sup, w = state.design.as_arrays()
            weighted = fixed_phi2[:, sup] * w
            Ms = np.einsum("ts,sp,sq->tpq", weighted, F[sup], F[sup])
            lam = float(np.linalg.eigvalsh(Ms)[:, 0].min())
            lam = min(lam, diag.lambda_min)
            floor_val = lam if floor_val is None else min(floor_val, lam)
        if nvalue in want:
            M = information_matrix(spec, state.design, state.theta_hat)
            records.append(
                CheckpointRecord(
                    n=nvalue,
                    theta_hat=diag.theta_hat,
                    err_norm=float(
                        np.linalg.norm(np.asarray(diag.theta_hat) - tbar)
                    ),
                    logdet=diag.logdet,
                    lambda_min=diag.lambda_min,
                    kw_gap=diag.kw_gap,
                    info_matrix=_matrix_tuple(M),
                )
            )

    track(state.n)
    while state.n < cfg.horizon:
        k = state.next_point()
        state.observe(k, source(spec, k, rng))
        track(state.n)

    # terminal standardized estimate error
    z = None
    exclusion = None
    fit = state.last_fit
    converged = bool(fit.converged) if fit is not None else True
    at_boundary = bool(fit.at_boundary) if fit is not None else False
    if fit is not None and not fit.converged:
        exclusion = "estimator did not converge"
    elif fit is not None and fit.at_boundary:
        exclusion = "estimate at box boundary"
    else:
        M = information_matrix(spec, state.design, state.theta_hat)
        _, root = sym_inv_sqrt(M)
        zv = np.sqrt(float(state.n)) * (root @ (state.theta_hat - tbar))
        z = tuple(float(v) for v in zv)
    return ReplicateResult(
        index=index,
        ok=True,
        error=None,
        checkpoints=tuple(records),
        z=z,
        z_exclusion=exclusion,
        lambda_floor=floor_val,
        converged=converged,
        at_boundary=at_boundary,
    )


def simulate_replications(cfg: ReplicationConfig) -> ReplicationSummary:
    """Run all replicates serially and collect their records.

    A replicate that raises is recorded with the error text and carries
    no sample contribution; the count identity kept + excluded =
    replicates always holds for the normality sample.
    """
    spec = cfg.spec
    # fixed parameter set for the lower-eigenvalue floor: truth + box corners
    fixed = np.vstack([np.asarray(cfg.theta_bar, float), spec.box.vertices()])
    U = fixed @ spec.region.fmatrix.T
    fixed_phi2 = np.asarray(spec.response.phi(U)) ** 2
    out = []
    for i in range(cfg.replicates):
        try:
            out.append(_run_replicate(cfg, i, fixed_phi2))
        except Exception as exc:
            out.append(
                ReplicateResult(
                    index=i,
                    ok=False,
                    error=f"{type(exc).__name__}: {exc}",
                    checkpoints=(),
                    z=None,
                    z_exclusion="replicate errored",
                    lambda_floor=None,
                    converged=False,
                    at_boundary=False,
                )
            )
    return ReplicationSummary(
        config_digest=config_digest(cfg),
        master_seed=cfg.master_seed,
        replicates=tuple(out),
        checkpoints=cfg.checkpoints,
        dim=spec.region.dim,
    )


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class NormalityReport:
    sample_size: int
    excluded: int
    dim: int
    level: float
    chi_square_threshold: float
    mean_norm: float
    covariance: tuple[tuple[float, ...], ...]
    frob_to_identity: float
    coverage: float


def normality_diagnostics(sample: NormalitySample, level: float = 0.95) -> NormalityReport:
    """Summary statistics of the standardized terminal errors."""
    rows = np.asarray(sample.z_rows, dtype=float)
    if rows.size == 0 or rows.shape[0] < 50:
        raise InsufficientSampleError(
            f"need at least 50 usable replicates, have {0 if rows.size == 0 else rows.shape[0]}"
        )
    p = sample.dim
    mean = rows.mean(axis=0)
    centered = rows - mean
    cov = centered.T @ centered / (rows.shape[0] - 1)
    threshold = chi_square_quantile(level, p)
    norms2 = np.sum(rows * rows, axis=1)
    return NormalityReport(
        sample_size=int(rows.shape[0]),
        excluded=sample.excluded,
        dim=p,
        level=level,
        chi_square_threshold=threshold,
        mean_norm=float(np.linalg.norm(mean)),
        covariance=_matrix_tuple(cov),
        frob_to_identity=float(np.linalg.norm(cov - np.eye(p))),
        coverage=float(np.mean(norms2 <= threshold)),
    )


@dataclass(frozen=True)
class CheckpointStats:
    n: int
    median_m_dist: float
    q90_m_dist: float
    median_logdet_gap: float
    q90_logdet_gap: float
    replicates: int


@dataclass(frozen=True)
class ConvergenceReport:
    checkpoints: tuple[CheckpointStats, ...]
    m_dist_medians_nonincreasing: bool
    gap_medians_nonincreasing: bool


def convergence_report(
    summary: ReplicationSummary, m_star: np.ndarray, psi_star: float
) -> ConvergenceReport:
    """Distance-to-optimum distributions across checkpoints."""
    m_star = np.asarray(m_star, dtype=float)
    stats = []
    for n in summary.checkpoints:
        m_dists = []
        gaps = []
        for rep in summary.replicates:
            for rec in rep.checkpoints:
                if rec.n == n:
                    M = np.asarray(rec.info_matrix, dtype=float)
                    m_dists.append(float(np.linalg.norm(M - m_star)))
                    gaps.append(psi_star - rec.logdet)
        if not m_dists:
            continue
        stats.append(
            CheckpointStats(
                n=n,
                median_m_dist=float(np.median(m_dists)),
                q90_m_dist=float(np.percentile(m_dists, 90)),
                median_logdet_gap=float(np.median(gaps)),
                q90_logdet_gap=float(np.percentile(gaps, 90)),
                replicates=len(m_dists),
            )
        )
    med_m = [s.median_m_dist for s in stats]
    med_g = [s.median_logdet_gap for s in stats]
    return ConvergenceReport(
        checkpoints=tuple(stats),
        m_dist_medians_nonincreasing=all(
            b <= a + 1e-12 for a, b in zip(med_m, med_m[1:])
        ),
        gap_medians_nonincreasing=all(
            b <= a + 1e-12 for a, b in zip(med_g, med_g[1:])
        ),
    )


# ---------------------------------------------------------------------------
# export


def summary_document(summary: ReplicationSummary) -> dict:
    sample = summary.normality_sample()
    return {
        "config_digest": summary.config_digest,
        "master_seed": summary.master_seed,
        "dim": summary.dim,
        "checkpoints": list(summary.checkpoints),
        "replicates": [
            {
                "index": r.index,
                "ok": r.ok,
                "error": r.error,
                "converged": r.converged,
                "at_boundary": r.at_boundary,
                "lambda_floor": r.lambda_floor,
                "z": None if r.z is None else list(r.z),
                "z_exclusion": r.z_exclusion,
                "checkpoints": [
                    {
                        "n": c.n,
                        "theta_hat": list(c.theta_hat),
                        "err_norm": c.err_norm,
                        "logdet": c.logdet,
                        "lambda_min": c.lambda_min,
                        "kw_gap": c.kw_gap,
                        "info_matrix": [list(row) for row in c.info_matrix],
                    }
                    for c in r.checkpoints
                ],
            }
            for r in summary.replicates
        ],
        "normality_excluded": sample.excluded,
        "normality_kept": len(sample.z_rows),
    }


def summary_to_json(summary: ReplicationSummary) -> str:
    return dump_json(summary_document(summary)) + "\n"


def normality_sample_from_document(doc: dict) -> NormalitySample:
    """Recover the usable terminal statistics from a summary document."""
    if not isinstance(doc, dict):
        raise ConfigError("summary must be a JSON object")
    for key in ("replicates", "dim"):
        if key not in doc:
            raise ConfigError(f"summary is missing '{key}'")
    rows = []
    excluded = 0
    for rep in doc["replicates"]:
        z = rep.get("z")
        if z is None:
            excluded += 1
        else:
            rows.append(tuple(float(v) for v in z))
    return NormalitySample(
        dim=int(doc["dim"]), z_rows=tuple(rows), excluded=excluded
    )


def checkpoints_to_csv(summary: ReplicationSummary) -> str:
    p = summary.dim
    cols = ["replicate", "n"]
    cols += [f"theta_{j}" for j in range(p)]
    cols += ["err_norm", "logdet", "lambda_min", "kw_gap"]
    lines = [",".join(cols)]
    for rep in summary.replicates:
        for rec in rep.checkpoints:
            row = [str(rep.index), str(rec.n)]
            row += [format_float(v) for v in rec.theta_hat]
            row += [
                format_float(rec.err_norm),
                format_float(rec.logdet),
                format_float(rec.lambda_min),
                format_float(rec.kw_gap),
            ]
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"
