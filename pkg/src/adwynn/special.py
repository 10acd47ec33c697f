"""Internal chi-square tail arithmetic.

Self-contained so that coverage gates need no external statistics
tables: the regularized lower incomplete gamma by series or continued
fraction (whichever converges fast in the given region), then quantiles
by bisection.
"""

from __future__ import annotations

import math

from .errors import DomainError

_EPS = 1e-16
_MAX_TERMS = 500
_TINY = 1e-300


def regularized_gamma_p(a: float, x: float) -> float:
    """P(a, x), the regularized lower incomplete gamma function."""
    if not (a > 0 and math.isfinite(a)):
        raise DomainError(f"shape must be positive and finite, got {a!r}")
    if not (x >= 0 and math.isfinite(x)):
        raise DomainError(f"argument must be nonnegative and finite, got {x!r}")
    if x == 0.0:
        return 0.0
    log_prefix = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        # series expansion around zero
        term = 1.0 / a
        total = term
        denom = a
        for _ in range(_MAX_TERMS):
            denom += 1.0
            term *= x / denom
            total += term
            if abs(term) < abs(total) * _EPS:
                break
        return min(1.0, math.exp(log_prefix) * total)
    # modified Lentz continued fraction for the upper tail Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        factor = d * c
        h *= factor
        if abs(factor - 1.0) < _EPS:
            break
    q = math.exp(log_prefix) * h
    return max(0.0, 1.0 - q)


def chi_square_cdf(x: float, dof: int) -> float:
    if dof < 1:
        raise DomainError(f"degrees of freedom must be at least 1, got {dof}")
    if x < 0:
        return 0.0
    return regularized_gamma_p(0.5 * dof, 0.5 * x)


def chi_square_quantile(level: float, dof: int) -> float:
    """The ``level`` quantile of the chi-square law with ``dof`` degrees.

    Bisection on the CDF, run to float-width brackets; absolute error
    well below 1e-10 over the usual levels.
    """
    if not (0.0 < level < 1.0):
        raise DomainError(f"level must be in (0, 1), got {level!r}")
    if dof < 1:
        raise DomainError(f"degrees of freedom must be at least 1, got {dof}")
    lo = 0.0
    hi = float(max(dof, 1))
    for _ in range(200):
        if chi_square_cdf(hi, dof) >= level:
            break
        hi *= 2.0
    else:
        raise DomainError("quantile bracket did not close")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if chi_square_cdf(mid, dof) < level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
