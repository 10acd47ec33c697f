"""Sequential design construction.

Two layers share one step rule.  The fixed-parameter layer iterates the
classical exchange step until a Kiefer-Wolfowitz certificate or a
budget stop.  The adaptive layer interleaves those steps with response
collection and re-estimation, one observation at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .designs import (
    Design,
    information_matrix,
    lambda_min,
    logdet,
    sensitivity_profile,
    update_design,
)
from .errors import (
    DesignError,
    DomainError,
    SequencingError,
)
from .estimation import DataSet, FitResult, SolverConfig, fit_mle
from .model import ModelSpec

TIE_SIG_DIGITS = 12


def _round_sig(values: np.ndarray, digits: int = TIE_SIG_DIGITS) -> np.ndarray:
    """Round each entry to ``digits`` significant digits.

    Grid points whose sensitivities agree to this precision count as
    tied, and the lowest index wins the argmax.
    """
    a = np.asarray(values, dtype=float)
    out = a.copy()
    nz = (a != 0) & np.isfinite(a)
    mag = np.floor(np.log10(np.abs(a[nz])))
    factor = np.power(10.0, digits - 1 - mag)
    out[nz] = np.round(a[nz] * factor) / factor
    return out


def _argmax_lowest(profile: np.ndarray) -> int:
    # np.argmax returns the first maximizer, which is the lowest index
    return int(np.argmax(_round_sig(profile)))


@dataclass(frozen=True)
class WynnConfig:
    max_iters: int = 5000
    kw_gap_tol: float = 1e-4

    def __post_init__(self):
        if self.max_iters < 1:
            raise DomainError("max_iters must be at least 1")
        if not (self.kw_gap_tol > 0 and np.isfinite(self.kw_gap_tol)):
            raise DomainError("kw_gap_tol must be positive and finite")


@dataclass(frozen=True)
class Certificate:
    """Optimality evidence for a returned design."""

    kw_gap: float
    logdet: float
    iterations: int
    status: str  # "converged" or "budget exhausted"

    def __post_init__(self):
        if self.kw_gap < -1e-9:
            raise DesignError(f"certificate gap {self.kw_gap} below -1e-9")

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def wynn_step(
    spec: ModelSpec, design: Design, theta, n: int
) -> tuple[int, Design, float]:
    """One exchange step at fixed ``theta``.

    Picks the grid index with the largest sensitivity (ties to the
    lowest index), then shifts mass 1/(n+1) onto it.
    """
    profile = sensitivity_profile(spec, design, theta)
    k = _argmax_lowest(profile)
    return k, update_design(design, k, n), float(profile[k])


def solve_locally_d_optimal(
    spec: ModelSpec,
    theta,
    start: Design | None = None,
    cfg: WynnConfig | None = None,
) -> tuple[Design, Certificate]:
    """Iterate exchange steps at fixed ``theta`` until the sensitivity
    gap closes or the budget runs out.

    The step count starts from the start design's support size, playing
    the role of the sample size in the 1/(n+1) step lengths.  On budget
    exhaustion the best design seen (by log-determinant) is returned.
    """
    if cfg is None:
        cfg = WynnConfig()
    if start is None:
        start = Design.uniform(range(spec.region.size))
    p = spec.region.dim
    design = start
    n = len(design.support)
    best_design = design
    best_logdet = logdet(information_matrix(spec, design, theta))
    # tracked through the one-step determinant recursion; the returned
    # certificate recomputes the exact value
    running_logdet = best_logdet
    status = "budget exhausted"
    iterations = 0
    for _ in range(cfg.max_iters):
        profile = sensitivity_profile(spec, design, theta)
        d_max = float(profile.max())
        if d_max - p <= cfg.kw_gap_tol:
            status = "converged"
            break
        k = _argmax_lowest(profile)
        design = update_design(design, k, n)
        running_logdet += math.log1p(float(profile[k]) / n)
        running_logdet -= p * math.log1p(1.0 / n)
        n += 1
        iterations += 1
        if running_logdet > best_logdet:
            best_logdet = running_logdet
            best_design = design
    if status != "converged":
        design = best_design
    M = information_matrix(spec, design, theta)
    final_gap = float(sensitivity_profile(spec, design, theta).max()) - p
    return design, Certificate(
        kw_gap=final_gap,
        logdet=logdet(M),
        iterations=iterations,
        status=status,
    )


# ---------------------------------------------------------------------------
# adaptive layer


@dataclass(frozen=True)
class EstimatorConfig:
    """How the adaptive loop maintains its parameter estimate.

    frozen_at pins the estimate to a fixed value and skips fitting
    entirely; refit_every > 1 refits only every that-many post-start
    observations (the estimate is otherwise carried forward).
    """

    solver: SolverConfig = SolverConfig()
    refit_every: int = 1
    frozen_at: tuple[float, ...] | None = None
    warm_start: bool = True

    def __post_init__(self):
        if self.refit_every < 1:
            raise DomainError("refit_every must be at least 1")


def estimator_to_document(est: EstimatorConfig) -> dict:
    """Flat JSON-ready form; round-trips through estimator_from_document."""
    return {
        "grad_tol": est.solver.grad_tol,
        "max_newton_iters": est.solver.max_newton_iters,
        "n_starts": est.solver.n_starts,
        "seed": est.solver.seed,
        "refit_every": est.refit_every,
        "frozen_at": None if est.frozen_at is None else list(est.frozen_at),
        "warm_start": est.warm_start,
    }


def estimator_from_document(doc: dict) -> EstimatorConfig:
    frozen = doc.get("frozen_at")
    solver = SolverConfig(
        grad_tol=float(doc.get("grad_tol", 1e-8)),
        max_newton_iters=int(doc.get("max_newton_iters", 100)),
        n_starts=doc.get("n_starts"),
        seed=int(doc.get("seed", 0)),
    )
    return EstimatorConfig(
        solver=solver,
        refit_every=int(doc.get("refit_every", 1)),
        frozen_at=None if frozen is None else tuple(float(v) for v in frozen),
        warm_start=bool(doc.get("warm_start", True)),
    )


@dataclass(frozen=True)
class StepDiagnostics:
    n: int
    theta_hat: tuple[float, ...]
    logdet: float
    lambda_min: float
    kw_gap: float


class AdaptiveState:
    """One adaptive run in progress.

    The design always equals the empirical measure of the points in the
    history; responses for the starting points arrive before the first
    suggestion.  ``n`` counts design points, ``n_observed`` counts
    responses received.
    """

    def __init__(self, spec: ModelSpec, start_points, estimator: EstimatorConfig,
                 theta_seed=None):
        idx = [spec.region.check_index(k) for k in start_points]
        if not idx:
            raise DesignError("need at least one starting point")
        F = spec.region.fmatrix[sorted(set(idx))]
        rank = int(np.linalg.matrix_rank(F))
        if rank < spec.region.dim:
            raise DesignError(
                f"starting points span rank {rank}, need {spec.region.dim}"
            )
        if estimator.frozen_at is not None:
            frozen = np.asarray(estimator.frozen_at, dtype=float)
            if not spec.box.contains(frozen):
                raise DomainError("frozen estimate outside the box")
            theta0 = frozen
        elif theta_seed is not None:
            theta0 = spec.box.project(np.asarray(theta_seed, dtype=float))
        else:
            theta0 = spec.box.midpoint()

        self.spec = spec
        self.estimator = estimator
        self.n_start = len(idx)
        self.n = len(idx)
        self.design = Design.empirical(idx)
        self.history: list[tuple[int, float | None]] = [(k, None) for k in idx]
        self.dataset = DataSet.empty(spec)
        self.theta_hat = theta0
        self.last_fit: FitResult | None = None
        self.diagnostics: list[StepDiagnostics] = []
        self._pending: list[int] = list(range(len(idx)))
        self._profile: np.ndarray | None = None

    # -- views ----------------------------------------------------------

    @property
    def n_observed(self) -> int:
        return self.dataset.n

    @property
    def pending_points(self) -> tuple[int, ...]:
        return tuple(self.history[i][0] for i in self._pending)

    def empirical_design(self) -> Design:
        return Design.empirical([k for k, _ in self.history])

    # -- core calls -----------------------------------------------------

    def _current_profile(self) -> np.ndarray:
        if self._profile is None:
            self._profile = sensitivity_profile(
                self.spec, self.design, self.theta_hat
            )
        return self._profile

    def next_point(self) -> int:
        """The suggested grid index at the current estimate.  Pure."""
        if self._pending:
            raise SequencingError(
                f"{len(self._pending)} starting response(s) still pending"
            )
        return _argmax_lowest(self._current_profile())

    def observe(self, k: int, y: float) -> "AdaptiveState":
        """Record a response for ``k`` and refresh estimate and design."""
        k = self.spec.region.check_index(k)
        if self._pending:
            slot = next(
                (i for i in self._pending if self.history[i][0] == k), None
            )
            if slot is None:
                raise SequencingError(
                    f"index {k} is not a pending starting point "
                    f"(pending: {sorted(set(self.pending_points))})"
                )
            self.dataset.append(k, y)  # validates support before any mutation
            self.history[slot] = (k, float(y))
            self._pending.remove(slot)
            if self._pending:
                return self
        else:
            expected = self.next_point()
            if k != expected:
                raise SequencingError(
                    f"expected a response for index {expected}, got {k}"
                )
            self.dataset.append(k, y)
            self.history.append((k, float(y)))
            self.design = update_design(self.design, k, self.n)
            self.n += 1
        self._profile = None
        self._refit()
        self._record_diagnostics()
        return self

    def _refit(self) -> None:
        cfg = self.estimator
        if cfg.frozen_at is not None:
            return
        since_start = self.dataset.n - self.n_start
        if since_start > 0 and since_start % cfg.refit_every != 0:
            return
        start = self.theta_hat if cfg.warm_start else None
        fit = fit_mle(self.dataset, cfg.solver, start=start)
        self.last_fit = fit
        self.theta_hat = fit.theta_array()

    def _record_diagnostics(self) -> None:
        M = information_matrix(self.spec, self.design, self.theta_hat)
        profile = self._current_profile()
        self.diagnostics.append(
            StepDiagnostics(
                n=self.n,
                theta_hat=tuple(float(v) for v in self.theta_hat),
                logdet=logdet(M),
                lambda_min=lambda_min(M),
                kw_gap=float(profile.max()) - self.spec.region.dim,
            )
        )


def adaptive_init(
    spec: ModelSpec,
    start_points,
    estimator: EstimatorConfig | None = None,
    theta_seed=None,
) -> AdaptiveState:
    """Fresh adaptive state; responses for the starting points are owed
    before the first suggestion."""
    if estimator is None:
        estimator = EstimatorConfig()
    return AdaptiveState(spec, start_points, estimator, theta_seed)


def next_point(state: AdaptiveState) -> int:
    return state.next_point()


def observe(state: AdaptiveState, k: int, y: float) -> AdaptiveState:
    return state.observe(k, y)


# ---------------------------------------------------------------------------
# response sources


def simulated_source(theta_bar):
    """Responses drawn from the model at a fixed true parameter."""

    def source(spec: ModelSpec, k: int, rng: np.random.Generator) -> float:
        if rng is None:
            raise DomainError("simulated responses need a generator")
        t = np.asarray(theta_bar, dtype=float)
        u = float(spec.region.fmatrix[k] @ t)
        fam = spec.response.family
        if spec.response.is_canonical:
            tau = u
        else:
            tau = fam.mean_to_canonical(float(spec.response.inverse_link(u)))
        return fam.sample(tau, rng)

    return source


def mean_source(theta_bar):
    """Deterministic responses equal to the model mean.

    Only usable where means lie in the response support (Gaussian
    always; Bernoulli and Poisson generally not).
    """

    def source(spec: ModelSpec, k: int, rng=None) -> float:
        return spec.mean_response(k, np.asarray(theta_bar, dtype=float))

    return source


# ---------------------------------------------------------------------------
# full runs


@dataclass(frozen=True)
class TrajectoryStep:
    n: int
    x_label: str | None
    y: float | None
    theta_hat: tuple[float, ...]
    logdet: float
    lambda_min: float
    kw_gap: float
    err_norm: float | None


@dataclass(frozen=True)
class Trajectory:
    start_points: tuple[int, ...]
    steps: tuple[TrajectoryStep, ...]
    final_design: Design
    final_theta: tuple[float, ...]
    theta_bar: tuple[float, ...] | None

    def to_csv(self) -> str:
        from .io import format_float

        p = len(self.final_theta)
        cols = ["n", "x_label", "y"]
        cols += [f"theta_{j}" for j in range(p)]
        cols += ["logdet", "lambda_min", "kw_gap"]
        with_err = self.theta_bar is not None
        if with_err:
            cols.append("err_norm")
        lines = [",".join(cols)]
        for s in self.steps:
            row = [
                str(s.n),
                s.x_label if s.x_label is not None else "",
                format_float(s.y) if s.y is not None else "",
            ]
            row += [format_float(v) for v in s.theta_hat]
            row += [
                format_float(s.logdet),
                format_float(s.lambda_min),
                format_float(s.kw_gap),
            ]
            if with_err:
                row.append(format_float(s.err_norm) if s.err_norm is not None else "")
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def run_adaptive(
    spec: ModelSpec,
    start_points,
    estimator: EstimatorConfig,
    response_source,
    horizon: int,
    rng: np.random.Generator | None = None,
    theta_bar=None,
) -> Trajectory:
    """Drive one adaptive run to ``horizon`` total design points.

    The source fills the starting responses first (in starting order),
    then each suggestion in turn.  When ``theta_bar`` is given the
    per-step estimate error is recorded too.
    """
    state = adaptive_init(spec, start_points, estimator)
    if horizon < state.n_start:
        raise DomainError(
            f"horizon {horizon} below the {state.n_start} starting points"
        )
    tbar = None if theta_bar is None else np.asarray(theta_bar, dtype=float)

    labels = state.spec.region.labels
    events: list[tuple[str | None, float | None]] = []
    for k in list(state.pending_points):
        y = response_source(spec, k, rng)
        state.observe(k, y)
    events.append((None, None))  # the start-completion record
    while state.n < horizon:
        k = state.next_point()
        y = response_source(spec, k, rng)
        state.observe(k, y)
        events.append((labels[k], float(y)))

    steps = []
    for (label, y), diag in zip(events, state.diagnostics):
        err = None
        if tbar is not None:
            err = float(np.linalg.norm(np.asarray(diag.theta_hat) - tbar))
        steps.append(
            TrajectoryStep(
                n=diag.n,
                x_label=label,
                y=y,
                theta_hat=diag.theta_hat,
                logdet=diag.logdet,
                lambda_min=diag.lambda_min,
                kw_gap=diag.kw_gap,
                err_norm=err,
            )
        )
    return Trajectory(
        start_points=tuple(k for k, _ in state.history[: state.n_start]),
        steps=tuple(steps),
        final_design=state.design,
        final_theta=tuple(float(v) for v in state.theta_hat),
        theta_bar=None if tbar is None else tuple(float(v) for v in tbar),
    )
