"""Experimental setup: candidate grid, regressors, parameter box.

A model couples a finite grid of labeled candidate points (with their
regressor vectors), a response model from the family catalog, and a
compact axis-aligned parameter box.  Parameter-dependent regressors are
``f_theta(x) = phi(f(x)' theta) * f(x)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SpecError
from .families import LinkedResponse

__all__ = [
    "GridPoint",
    "ExperimentalRegion",
    "ParameterBox",
    "ModelSpec",
    "ModelConstants",
    "SpecReport",
    "validate_spec",
]

# Rank test: smallest singular value must exceed this times the largest.
RANK_RTOL = 1e-10

# Vertex enumeration is exponential in p; beyond this we refuse rather
# than silently subsample.
MAX_VERTEX_DIM = 16


@dataclass(frozen=True)
class GridPoint:
    """A labeled candidate point with raw coordinates and regressor."""

    label: str
    x: tuple[float, ...]
    f: tuple[float, ...]


class ExperimentalRegion:
    """Ordered finite candidate grid spanning the regressor space."""

    def __init__(self, points: list[GridPoint]):
        if not points:
            raise SpecError("grid must contain at least one point")
        labels = [pt.label for pt in points]
        if len(set(labels)) != len(labels):
            dupes = sorted({lb for lb in labels if labels.count(lb) > 1})
            raise SpecError(f"duplicate grid labels: {dupes}")
        p = len(points[0].f)
        if p == 0:
            raise SpecError("regressor vectors must have positive length")
        for pt in points:
            if len(pt.f) != p:
                raise SpecError(
                    f"grid point {pt.label!r} has regressor length {len(pt.f)}, expected {p}"
                )
        F = np.array([pt.f for pt in points], dtype=float)
        if not np.all(np.isfinite(F)):
            raise SpecError("regressor vectors must be finite")
        if len(points) < p:
            raise SpecError(
                f"grid has {len(points)} points but regressors have dimension {p}; need at least p"
            )
        svals = np.linalg.svd(F, compute_uv=False)
        if svals[-1] <= RANK_RTOL * svals[0]:
            raise SpecError(
                "grid regressors do not span the parameter space "
                f"(singular value ratio {svals[-1] / svals[0]:.3e})"
            )
        self.points = tuple(points)
        self.fmatrix = F
        self.fmatrix.setflags(write=False)
        self._label_index = {pt.label: i for i, pt in enumerate(points)}

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.fmatrix.shape[1]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(pt.label for pt in self.points)

    def index_of(self, label: str) -> int:
        try:
            return self._label_index[label]
        except KeyError:
            raise SpecError(f"unknown grid label {label!r}") from None

    def check_index(self, k: int) -> int:
        if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
            raise IndexError(f"grid index must be an integer, got {k!r}")
        k = int(k)
        if not 0 <= k < self.size:
            raise IndexError(f"grid index {k} out of range [0, {self.size})")
        return k


class ParameterBox:
    """Compact axis-aligned parameter region."""

    def __init__(self, lower, upper):
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise SpecError("box bounds must be 1-d vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise SpecError("box bounds must be finite")
        if np.any(lo > hi):
            raise SpecError("box lower bound exceeds upper bound in some coordinate")
        self.lower = lo.copy()
        self.upper = hi.copy()
        self.lower.setflags(write=False)
        self.upper.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, theta, atol: float = 1e-12) -> bool:
        t = np.asarray(theta, dtype=float)
        if t.shape != self.lower.shape or not np.all(np.isfinite(t)):
            return False
        return bool(np.all(t >= self.lower - atol) and np.all(t <= self.upper + atol))

    def strictly_contains(self, theta) -> bool:
        t = np.asarray(theta, dtype=float)
        if t.shape != self.lower.shape or not np.all(np.isfinite(t)):
            return False
        return bool(np.all(t > self.lower) and np.all(t < self.upper))

    def project(self, theta) -> np.ndarray:
        t = np.asarray(theta, dtype=float)
        if t.shape != self.lower.shape:
            raise DomainError(f"parameter has shape {t.shape}, expected ({self.dim},)")
        return np.clip(t, self.lower, self.upper)

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def vertices(self) -> np.ndarray:
        """All corner points, shape (2^p, p)."""
        if self.dim > MAX_VERTEX_DIM:
            raise SpecError(
                f"vertex enumeration limited to dimension {MAX_VERTEX_DIM}"
            )
        cols = [(self.lower[j], self.upper[j]) for j in range(self.dim)]
        return np.array(list(itertools.product(*cols)), dtype=float)


@dataclass(frozen=True)
class SpecReport:
    """Outcome of report-style validation; empty problems means valid."""

    problems: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.problems


@dataclass(frozen=True)
class ModelConstants:
    """Sampled global constants of a model.

    gamma is exact over the grid but sampled over the box; kappa_hat is a
    sampled approximation used only for diagnostics, never for control
    flow.  phi bounds are extrema of phi over the hull of the attained
    linear-predictor interval, evaluated densely.
    """

    gamma: float
    kappa_hat: float
    phi_min: float
    phi_max: float
    sphere_samples: int
    theta_samples: int


class ModelSpec:
    """Validated experimental model: grid + response + box."""

    def __init__(self, region: ExperimentalRegion, response: LinkedResponse, box: ParameterBox):
        if box.dim != region.dim:
            raise SpecError(
                f"box dimension {box.dim} does not match regressor dimension {region.dim}"
            )
        self.region = region
        self.response = response
        self.box = box
        lo, hi = self.predictor_hull()
        dom = response.predictor_domain
        if not (lo > dom.lo and hi < dom.hi):
            raise SpecError(
                f"linear predictor range [{lo}, {hi}] escapes the link domain {dom}"
            )

    # -- geometry -------------------------------------------------------

    def predictor_intervals(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-grid-point range of f(x)' theta over the box.

        Exact by linearity: coordinatewise interval arithmetic equals the
        min/max over the 2^p box vertices.
        """
        F = self.region.fmatrix
        lo_part = np.minimum(F * self.box.lower, F * self.box.upper)
        hi_part = np.maximum(F * self.box.lower, F * self.box.upper)
        return lo_part.sum(axis=1), hi_part.sum(axis=1)

    def predictor_hull(self) -> tuple[float, float]:
        lo, hi = self.predictor_intervals()
        return float(lo.min()), float(hi.max())

    # -- parameter-dependent regressors --------------------------------

    def _check_theta(self, theta) -> np.ndarray:
        t = np.asarray(theta, dtype=float)
        if not self.box.contains(t):
            raise DomainError(f"parameter {t.tolist()} outside the box")
        return t

    def f_theta(self, k: int, theta) -> np.ndarray:
        """phi(f(x_k)' theta) * f(x_k)."""
        k = self.region.check_index(k)
        t = self._check_theta(theta)
        f = self.region.fmatrix[k]
        u = float(f @ t)
        return float(self.response.phi(u)) * f

    def f_theta_matrix(self, theta) -> np.ndarray:
        """Stacked f_theta over the whole grid, shape (K, p).

        Skips the box check; hot path for the design loops, which only
        ever pass projected parameters.
        """
        F = self.region.fmatrix
        u = F @ np.asarray(theta, dtype=float)
        return np.asarray(self.response.phi(u))[:, None] * F

    def mean_response(self, k: int, theta) -> float:
        k = self.region.check_index(k)
        t = self._check_theta(theta)
        u = float(self.region.fmatrix[k] @ t)
        return float(self.response.inverse_link(u))

    # -- constants ------------------------------------------------------

    def model_constants(
        self,
        rng: np.random.Generator,
        sphere_samples: int = 512,
        theta_samples: int = 64,
    ) -> ModelConstants:
        if sphere_samples < 1 or theta_samples < 1:
            raise SpecError("sample counts must be at least 1")
        p = self.region.dim
        box = self.box
        thetas = [box.vertices(), box.midpoint()[None, :]]
        width = box.upper - box.lower
        thetas.append(box.lower + rng.random((theta_samples, p)) * width)
        theta_set = np.vstack(thetas)

        # Directions: standard basis first (attains axis-aligned minima),
        # then random points on the sphere.
        dirs = [np.eye(p)]
        raw = rng.standard_normal((sphere_samples, p))
        norms = np.linalg.norm(raw, axis=1)
        keep = norms > 1e-12
        dirs.append(raw[keep] / norms[keep, None])
        V = np.vstack(dirs)

        gamma = 0.0
        kappa = math.inf
        for t in theta_set:
            Ft = self.f_theta_matrix(t)
            gamma = max(gamma, float(np.linalg.norm(Ft, axis=1).max()))
            proj = (Ft @ V.T) ** 2
            kappa = min(kappa, float(proj.max(axis=0).min()))

        c1, c2 = self.predictor_hull()
        grid_u = np.linspace(c1, c2, 20001)
        phis = np.asarray(self.response.phi(grid_u))
        return ModelConstants(
            gamma=gamma,
            kappa_hat=kappa,
            phi_min=float(phis.min()),
            phi_max=float(phis.max()),
            sphere_samples=int(V.shape[0] - p),
            theta_samples=int(theta_samples),
        )


def validate_spec(spec: ModelSpec) -> SpecReport:
    """Re-check a built spec's numeric invariants, report style.

    Construction already enforces these, so a report with problems can
    only arise from out-of-band mutation of the arrays; kept as the
    non-raising counterpart used by the CLI after document parsing.
    """
    problems: list[str] = []
    F = spec.region.fmatrix
    svals = np.linalg.svd(F, compute_uv=False)
    if svals[-1] <= RANK_RTOL * svals[0]:
        problems.append("grid regressors do not span the parameter space")
    labels = spec.region.labels
    if len(set(labels)) != len(labels):
        problems.append("duplicate grid labels")
    if np.any(spec.box.lower > spec.box.upper):
        problems.append("box lower bound exceeds upper bound")
    lo, hi = spec.predictor_hull()
    dom = spec.response.predictor_domain
    if not (lo > dom.lo and hi < dom.hi):
        problems.append("linear predictor range escapes the link domain")
    return SpecReport(problems=tuple(problems))
