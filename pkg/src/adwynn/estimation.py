"""Maximum-likelihood estimation over the parameter box.

The log-likelihood drops the parameter-free carrier terms, so reported
values differ from the full likelihood by a data-dependent constant.
All computations aggregate rows by grid index: rows sharing an index
share a regressor, so per-index counts and response sums are sufficient
statistics and every evaluation is O(grid size), not O(sample size).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EstimationError, ResponseDomainError
from .model import ModelSpec

COND_CAP = 1e8
BOUNDARY_ATOL = 1e-10
ARMIJO = 1e-4
MAX_BACKTRACKS = 60


class DataSet:
    """Observed (grid index, response) rows for one model.

    Appending keeps the per-index aggregates current, and does so in the
    same order a fresh bincount over the full row list would use, so an
    incrementally built dataset is bit-identical to one built at once.
    """

    def __init__(self, spec: ModelSpec, indices=(), responses=()):
        self.spec = spec
        K = spec.region.size
        idx = np.asarray(indices, dtype=np.int64).ravel()
        y = np.asarray(responses, dtype=float).ravel()
        if idx.shape != y.shape:
            raise DomainError(
                f"got {idx.size} indices but {y.size} responses"
            )
        if idx.size:
            if idx.min() < 0 or idx.max() >= K:
                bad = idx[(idx < 0) | (idx >= K)][0]
                raise IndexError(f"grid index {int(bad)} out of range [0, {K})")
            ok = spec.response.family.support_mask(y)
            if not np.all(ok):
                row = int(np.argmin(ok))
                raise ResponseDomainError(
                    f"row {row}: response {y[row]!r} not in "
                    f"{spec.response.family.support_description()}"
                )
        self._idx: list[int] = [int(k) for k in idx]
        self._y: list[float] = [float(v) for v in y]
        # bincount yields an integer array when there are no rows yet;
        # force float so in-place append accumulation never truncates
        self._counts = np.bincount(idx, minlength=K).astype(float)
        self._ysums = np.bincount(idx, weights=y, minlength=K).astype(float)

    @classmethod
    def empty(cls, spec: ModelSpec) -> "DataSet":
        return cls(spec)

    def append(self, index: int, y: float) -> None:
        k = self.spec.region.check_index(index)
        yv = float(y)
        if not self.spec.response.family.support_contains(yv):
            raise ResponseDomainError(
                f"response {yv!r} not in "
                f"{self.spec.response.family.support_description()}"
            )
        self._idx.append(k)
        self._y.append(yv)
        self._counts[k] += 1.0
        self._ysums[k] += yv

    @property
    def n(self) -> int:
        return len(self._idx)

    def __len__(self) -> int:
        return len(self._idx)

    @property
    def indices(self) -> np.ndarray:
        return np.asarray(self._idx, dtype=np.int64)

    @property
    def responses(self) -> np.ndarray:
        return np.asarray(self._y, dtype=float)

    @property
    def counts(self) -> np.ndarray:
        """Per-grid-index row counts, length = grid size."""
        return self._counts.copy()

    @property
    def response_sums(self) -> np.ndarray:
        """Per-grid-index response sums, length = grid size."""
        return self._ysums.copy()

    def __repr__(self) -> str:  # pragma: no cover - display only
        return f"DataSet(n={self.n}, grid={self.spec.region.size})"


def _require_rows(data: DataSet) -> None:
    if data.n == 0:
        raise EstimationError("dataset is empty")


def _checked_theta(data: DataSet, theta) -> np.ndarray:
    t = np.asarray(theta, dtype=float)
    if not data.spec.box.contains(t):
        raise DomainError(f"parameter {t.tolist()} outside the box")
    return t


class _Aggregates:
    """Active-support view of a dataset: only indices with rows."""

    def __init__(self, data: DataSet):
        mask = data._counts > 0
        self.F = data.spec.region.fmatrix[mask]
        self.counts = data._counts[mask]
        self.ysums = data._ysums[mask]
        self.resp = data.spec.response
        self.family = data.spec.response.family

    def value(self, theta: np.ndarray) -> float:
        u = self.F @ theta
        if self.resp.is_canonical:
            b, _, _ = self.family.cumulant(u)
            return float(self.ysums @ u - self.counts @ b)
        tau = np.array([self.family.mean_to_canonical(g)
                        for g in np.atleast_1d(self.resp.inverse_link(u))])
        b, _, _ = self.family.cumulant(tau)
        return float(self.ysums @ tau - self.counts @ b)

    def value_grad(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        u = self.F @ theta
        if self.resp.is_canonical:
            b, bp, _ = self.family.cumulant(u)
            val = float(self.ysums @ u - self.counts @ b)
            grad = self.F.T @ (self.ysums - self.counts * bp)
            return val, grad
        mu = np.atleast_1d(self.resp.inverse_link(u))
        tau = np.array([self.family.mean_to_canonical(g) for g in mu])
        b, _, _ = self.family.cumulant(tau)
        val = float(self.ysums @ tau - self.counts @ b)
        H = np.atleast_1d(self.resp.score_weight(u))
        grad = self.F.T @ ((self.ysums - self.counts * mu) * H)
        return val, grad

    def neg_hessian(self, theta: np.ndarray) -> np.ndarray:
        u = self.F @ theta
        if self.resp.is_canonical:
            _, _, bpp = self.family.cumulant(u)
            w = self.counts * bpp
        else:
            # Expected-information surrogate: the residual term of the
            # exact Hessian needs the derivative of the score weight,
            # which vanishes for every link in the catalog.
            w = (self.counts * np.atleast_1d(self.resp.d_inverse_link(u))
                 * np.atleast_1d(self.resp.score_weight(u)))
        A = (self.F * w[:, None]).T @ self.F
        return 0.5 * (A + A.T)


def log_likelihood(data: DataSet, theta) -> float:
    """Carrier-free log-likelihood at ``theta``."""
    _require_rows(data)
    t = _checked_theta(data, theta)
    return _Aggregates(data).value(t)


def score(data: DataSet, theta) -> np.ndarray:
    """Gradient of the log-likelihood at ``theta``.

    At a box boundary this is the one-sided gradient of the smooth
    extension.
    """
    _require_rows(data)
    t = _checked_theta(data, theta)
    return _Aggregates(data).value_grad(t)[1]


def observed_information(data: DataSet, theta) -> np.ndarray:
    """Negative Hessian of the log-likelihood at ``theta``.

    Exact for canonical links; otherwise the expected-information
    surrogate (positive semidefinite either way).
    """
    _require_rows(data)
    t = _checked_theta(data, theta)
    return _Aggregates(data).neg_hessian(t)


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for fit_mle.

    n_starts=None means one start (box midpoint) for canonical links,
    where the likelihood is concave, and five (midpoint plus four
    uniform draws) otherwise.
    """

    grad_tol: float = 1e-8
    max_newton_iters: int = 100
    n_starts: int | None = None
    seed: int = 0
    keep_trace: bool = False

    def __post_init__(self):
        if not (self.grad_tol > 0 and np.isfinite(self.grad_tol)):
            raise DomainError("grad_tol must be positive and finite")
        if self.max_newton_iters < 1:
            raise DomainError("max_newton_iters must be at least 1")
        if self.n_starts is not None and self.n_starts < 1:
            raise DomainError("n_starts must be at least 1")


@dataclass(frozen=True)
class FitResult:
    theta: tuple[float, ...]
    loglik: float
    score_norm: float
    boundary_flags: tuple[bool, ...]
    converged: bool
    starts_used: int
    iterations: int
    trace: tuple[float, ...] = ()

    @property
    def at_boundary(self) -> bool:
        return any(self.boundary_flags)

    def theta_array(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=float)


def _projected_gradient(g: np.ndarray, theta: np.ndarray,
                        lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    pg = g.copy()
    pg[(theta >= upper) & (g > 0)] = 0.0
    pg[(theta <= lower) & (g < 0)] = 0.0
    return pg


def _damped_solve(A: np.ndarray, g: np.ndarray) -> np.ndarray:
    p = A.shape[0]
    eigs = np.linalg.eigvalsh(A)
    lmin, lmax = float(eigs[0]), float(eigs[-1])
    if lmax <= 0.0:
        return g.copy()
    shift = max(0.0, (lmax - COND_CAP * lmin) / (COND_CAP - 1.0))
    if shift > 0.0:
        A = A + shift * np.eye(p)
    return np.linalg.solve(A, g)


def _search(agg, box, theta, val, grad, delta):
    t = 1.0
    for _ in range(MAX_BACKTRACKS):
        cand = box.project(theta + t * delta)
        step = cand - theta
        if not np.any(step):
            t *= 0.5
            continue
        cand_val, cand_grad = agg.value_grad(cand)
        slope = float(grad @ step)
        if cand_val >= val + ARMIJO * max(slope, 0.0):
            return cand, cand_val, cand_grad
        t *= 0.5
    return None


def _ascend(agg: _Aggregates, box, theta0: np.ndarray, cfg: SolverConfig):
    lower, upper = box.lower, box.upper
    theta = box.project(theta0)
    val, grad = agg.value_grad(theta)
    trace = [val]
    converged = False
    iters = 0
    for _ in range(cfg.max_newton_iters):
        pg = _projected_gradient(grad, theta, lower, upper)
        if np.linalg.norm(pg) <= cfg.grad_tol * (1.0 + abs(val)):
            converged = True
            break
        iters += 1
        # Newton on the free coordinates only: a step built from the full
        # gradient points through an active bound and, once projected,
        # can stall at a corner that is not constrained-stationary
        free = pg != 0.0
        H = agg.neg_hessian(theta)
        delta = np.zeros_like(theta)
        delta[free] = _damped_solve(H[np.ix_(free, free)], grad[free])
        if not np.all(np.isfinite(delta)):
            break
        hit = _search(agg, box, theta, val, grad, delta)
        if hit is None:
            # steepest feasible ascent as a safeguard
            hit = _search(agg, box, theta, val, grad, pg)
        if hit is None:
            break
        theta, val, grad = hit
        trace.append(val)
    else:
        pg = _projected_gradient(grad, theta, lower, upper)
        converged = bool(np.linalg.norm(pg) <= cfg.grad_tol * (1.0 + abs(val)))
    return theta, val, grad, converged, iters, trace


def fit_mle(data: DataSet, cfg: SolverConfig | None = None,
            start=None) -> FitResult:
    """Box-constrained maximizer of the log-likelihood.

    Projected Newton with a condition-capped shift of the negative
    Hessian and backtracking line search; the best of the configured
    starts wins, ties by start order.  ``start`` overrides the start
    list with a single warm start (projected into the box).
    """
    _require_rows(data)
    if cfg is None:
        cfg = SolverConfig()
    spec = data.spec
    box = spec.box
    agg = _Aggregates(data)

    if start is not None:
        starts = [box.project(np.asarray(start, dtype=float))]
    else:
        n_starts = cfg.n_starts
        if n_starts is None:
            n_starts = 1 if spec.response.is_canonical else 5
        starts = [box.midpoint()]
        if n_starts > 1:
            rng = np.random.default_rng(cfg.seed)
            width = box.upper - box.lower
            for _ in range(n_starts - 1):
                starts.append(box.lower + width * rng.random(box.dim))

    best = None
    for theta0 in starts:
        out = _ascend(agg, box, theta0, cfg)
        if best is None or out[1] > best[1]:
            best = out
    theta, val, grad, converged, iters, trace = best

    flags = tuple(
        bool(abs(theta[j] - box.lower[j]) <= BOUNDARY_ATOL
             or abs(theta[j] - box.upper[j]) <= BOUNDARY_ATOL)
        for j in range(box.dim)
    )
    return FitResult(
        theta=tuple(float(v) for v in theta),
        loglik=float(val),
        score_norm=float(np.linalg.norm(grad)),
        boundary_flags=flags,
        converged=bool(converged),
        starts_used=len(starts),
        iterations=int(iters),
        trace=tuple(trace) if cfg.keep_trace else (),
    )
