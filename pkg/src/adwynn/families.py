"""One-parameter exponential families and inverse-link response models.

A response family is parameterized by its canonical parameter ``tau`` and
has density ``K(y) * exp(tau * y - b(tau))`` with respect to a dominating
measure.  The cumulant ``b`` carries everything the rest of the package
needs: ``b'`` maps the canonical domain bijectively onto the mean domain
and ``b''`` is the response variance at ``tau``.

A :class:`LinkedResponse` couples a family with an inverse link ``G`` so
that the mean response at linear predictor ``u`` is ``G(u)``.  The induced
regressor weight is

    ``phi(u) = G'(u) / sqrt(b''(inv_bprime(G(u))))``

which is the scalar multiplying the raw regressor in the weighted design
vector.  For a canonical link ``G = b'`` this reduces to ``sqrt(G'(u))``
and the score weight ``H(u) = G'(u) / b''(inv_bprime(G(u)))`` is
identically one.

The catalog is fixed: ``bernoulli-logit``, ``poisson-log`` and
``gaussian-identity`` (unit variance).  All three use the canonical link.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EstimationError, SpecError

__all__ = [
    "Interval",
    "Family",
    "Bernoulli",
    "Poisson",
    "Gaussian",
    "BERNOULLI",
    "POISSON",
    "GAUSSIAN",
    "LinkedResponse",
    "LINK_CATALOG",
    "linked_response",
    "expit",
]


@dataclass(frozen=True)
class Interval:
    """An open interval of the real line, possibly unbounded."""

    lo: float
    hi: float

    def contains(self, value: float) -> bool:
        v = float(value)
        return math.isfinite(v) and self.lo < v < self.hi

    def __str__(self) -> str:  # pragma: no cover - display only
        return f"({self.lo}, {self.hi})"


REAL_LINE = Interval(-math.inf, math.inf)


def expit(u):
    """Numerically stable logistic function, elementwise."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    if out.ndim == 0:
        return float(out)
    return out


class Family:
    """A univariate exponential family in canonical form."""

    kind: str = ""
    canonical_domain: Interval = REAL_LINE
    mean_domain: Interval = REAL_LINE

    def cumulant(self, tau):
        """Return ``(b(tau), b'(tau), b''(tau))`` elementwise.

        Raises DomainError if any entry of ``tau`` is outside the
        canonical domain.
        """
        raise NotImplementedError

    def sample(self, tau: float, rng: np.random.Generator) -> float:
        """Draw one response at canonical parameter ``tau``.

        Reproducible: a given generator state yields the same draw.
        """
        raise NotImplementedError

    def support_contains(self, y: float) -> bool:
        """Whether ``y`` is a possible response value."""
        raise NotImplementedError

    def support_mask(self, y) -> np.ndarray:
        """Vectorized support membership."""
        raise NotImplementedError

    def support_description(self) -> str:
        raise NotImplementedError

    def mean_to_canonical(self, m: float) -> float:
        """Invert ``b'`` at the mean ``m``.

        Solves ``b'(tau) = m`` by bisection-safeguarded Newton with at
        most 200 iterations, targeting absolute residual 1e-12 on ``b'``.
        For means so large that float spacing of ``b'`` exceeds the
        target, iteration stops at spacing-level residual instead.
        """
        m = float(m)
        if not self.mean_domain.contains(m):
            raise DomainError(
                f"{self.kind}: mean {m!r} outside mean domain {self.mean_domain}"
            )
        tol = 1e-12 + 4.0 * np.finfo(float).eps * abs(m)

        def g(tau: float) -> tuple[float, float]:
            _, b1, b2 = self.cumulant(tau)
            return float(b1) - m, float(b2)

        # Bracket the root by doubling outward from 0.
        lo, hi = -1.0, 1.0
        glo, _ = g(lo)
        ghi, _ = g(hi)
        expansions = 0
        while glo > 0.0:
            lo *= 2.0
            glo, _ = g(lo)
            expansions += 1
            if expansions > 80:
                raise EstimationError(f"{self.kind}: failed to bracket mean {m!r}")
        while ghi < 0.0:
            hi *= 2.0
            ghi, _ = g(hi)
            expansions += 1
            if expansions > 160:
                raise EstimationError(f"{self.kind}: failed to bracket mean {m!r}")

        eps = np.finfo(float).eps
        tau = 0.5 * (lo + hi)
        for _ in range(200):
            gval, gder = g(tau)
            # Converged only when the residual is small at the b' scale AND the
            # Newton correction is at float spacing of tau, so tau itself
            # is accurate even where b'' is tiny.
            if abs(gval) <= tol:
                corr = abs(gval / gder) if gder > 0.0 else 0.0
                if corr <= 4.0 * eps * max(1.0, abs(tau)):
                    return tau
            if gval > 0.0:
                hi = tau
            else:
                lo = tau
            if gder > 0.0:
                step = tau - gval / gder
            else:
                step = math.nan
            # Newton step must stay strictly inside the bracket.
            if not (lo < step < hi):
                step = 0.5 * (lo + hi)
            if hi - lo <= abs(tau) * 4.0 * eps + 5e-324:
                return tau
            tau = step
        raise EstimationError(
            f"{self.kind}: mean inversion did not reach tolerance for m={m!r}"
        )


class Bernoulli(Family):
    """Bernoulli family; canonical parameter is the log odds."""

    kind = "bernoulli"
    canonical_domain = REAL_LINE
    mean_domain = Interval(0.0, 1.0)

    def cumulant(self, tau):
        tau = np.asarray(tau, dtype=float)
        self._check_domain(tau)
        b = np.logaddexp(0.0, tau)
        p = expit(tau)
        q = expit(-tau)
        return b, np.asarray(p), np.asarray(p) * np.asarray(q)

    def _check_domain(self, tau) -> None:
        if not np.all(np.isfinite(tau)):
            raise DomainError(f"{self.kind}: canonical parameter must be finite")

    def sample(self, tau: float, rng: np.random.Generator) -> float:
        p = expit(float(tau))
        return 1.0 if rng.random() < p else 0.0

    def support_contains(self, y: float) -> bool:
        return y == 0.0 or y == 1.0

    def support_mask(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return (y == 0.0) | (y == 1.0)

    def support_description(self) -> str:
        return "{0, 1}"


class Poisson(Family):
    """Poisson family; canonical parameter is the log mean."""

    kind = "poisson"
    canonical_domain = REAL_LINE
    mean_domain = Interval(0.0, math.inf)

    def cumulant(self, tau):
        tau = np.asarray(tau, dtype=float)
        if not np.all(np.isfinite(tau)):
            raise DomainError(f"{self.kind}: canonical parameter must be finite")
        mu = np.exp(tau)
        return mu, mu, mu

    def mean_to_canonical(self, m: float) -> float:
        # The generic solver works but log is exact; keep the solver
        # reachable through the base class for the other families.
        m = float(m)
        if not self.mean_domain.contains(m):
            raise DomainError(
                f"{self.kind}: mean {m!r} outside mean domain {self.mean_domain}"
            )
        return math.log(m)

    def sample(self, tau: float, rng: np.random.Generator) -> float:
        return float(rng.poisson(math.exp(float(tau))))

    def support_contains(self, y: float) -> bool:
        return math.isfinite(y) and y >= 0.0 and y == math.floor(y)

    def support_mask(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.isfinite(y) & (y >= 0.0) & (y == np.floor(y))

    def support_description(self) -> str:
        return "nonnegative integers"


class Gaussian(Family):
    """Gaussian family with unit variance; canonical parameter is the mean."""

    kind = "gaussian"
    canonical_domain = REAL_LINE
    mean_domain = REAL_LINE

    def cumulant(self, tau):
        tau = np.asarray(tau, dtype=float)
        if not np.all(np.isfinite(tau)):
            raise DomainError(f"{self.kind}: canonical parameter must be finite")
        return 0.5 * tau * tau, tau, np.ones_like(tau)

    def mean_to_canonical(self, m: float) -> float:
        m = float(m)
        if not math.isfinite(m):
            raise DomainError(f"{self.kind}: mean must be finite")
        return m

    def sample(self, tau: float, rng: np.random.Generator) -> float:
        return float(tau) + float(rng.standard_normal())

    def support_contains(self, y: float) -> bool:
        return math.isfinite(y)

    def support_mask(self, y) -> np.ndarray:
        return np.isfinite(np.asarray(y, dtype=float))

    def support_description(self) -> str:
        return "finite reals"


BERNOULLI = Bernoulli()
POISSON = Poisson()
GAUSSIAN = Gaussian()


class LinkedResponse:
    """A family paired with an inverse link ``G``.

    ``inverse_link`` and its derivatives operate elementwise.  Subclasses
    in the catalog all use the canonical link, so ``score_weight`` is
    identically one and ``phi(u) = sqrt(G'(u))`` holds; the closed forms
    below are the stable way to evaluate that.
    """

    name: str = ""
    family: Family = None  # type: ignore[assignment]
    predictor_domain: Interval = REAL_LINE
    is_canonical: bool = True

    def inverse_link(self, u):
        raise NotImplementedError

    def d_inverse_link(self, u):
        raise NotImplementedError

    def d2_inverse_link(self, u):
        raise NotImplementedError

    def phi(self, u):
        raise NotImplementedError

    def score_weight(self, u):
        """Weight multiplying the raw residual in the score; one for
        canonical links."""
        u = np.asarray(u, dtype=float)
        return np.ones_like(u)

    def check_predictor(self, u) -> None:
        u = np.asarray(u, dtype=float)
        lo, hi = self.predictor_domain.lo, self.predictor_domain.hi
        bad = ~np.isfinite(u) | (u <= lo) | (u >= hi)
        if np.any(bad):
            raise DomainError(
                f"{self.name}: linear predictor outside {self.predictor_domain}"
            )

    def __repr__(self) -> str:  # pragma: no cover - display only
        return f"LinkedResponse({self.name!r})"


class _BernoulliLogit(LinkedResponse):
    name = "bernoulli-logit"
    family = BERNOULLI

    def inverse_link(self, u):
        return expit(u)

    def d_inverse_link(self, u):
        u = np.asarray(u, dtype=float)
        return np.asarray(expit(u)) * np.asarray(expit(-u))

    def d2_inverse_link(self, u):
        u = np.asarray(u, dtype=float)
        p = np.asarray(expit(u))
        return p * np.asarray(expit(-u)) * (1.0 - 2.0 * p)

    def phi(self, u):
        # exp(u/2) / (1 + exp(u)) written overflow-free
        u = np.asarray(u, dtype=float)
        return 0.5 / np.cosh(0.5 * u)


class _PoissonLog(LinkedResponse):
    name = "poisson-log"
    family = POISSON

    def inverse_link(self, u):
        return np.exp(np.asarray(u, dtype=float))

    def d_inverse_link(self, u):
        return np.exp(np.asarray(u, dtype=float))

    def d2_inverse_link(self, u):
        return np.exp(np.asarray(u, dtype=float))

    def phi(self, u):
        return np.exp(0.5 * np.asarray(u, dtype=float))


class _GaussianIdentity(LinkedResponse):
    name = "gaussian-identity"
    family = GAUSSIAN

    def inverse_link(self, u):
        return np.asarray(u, dtype=float)

    def d_inverse_link(self, u):
        return np.ones_like(np.asarray(u, dtype=float))

    def d2_inverse_link(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))

    def phi(self, u):
        return np.ones_like(np.asarray(u, dtype=float))


LINK_CATALOG: dict[str, LinkedResponse] = {
    m.name: m for m in (_BernoulliLogit(), _PoissonLog(), _GaussianIdentity())
}


def linked_response(name: str) -> LinkedResponse:
    """Look up a catalog model by its ``family-link`` name."""
    try:
        return LINK_CATALOG[name]
    except KeyError:
        known = ", ".join(sorted(LINK_CATALOG))
        raise SpecError(f"unknown family_link {name!r}; expected one of: {known}") from None
