"""Designs as finite-support probability measures, and matrix utilities.

The sensitivity function ``d(x, xi, theta) = f_theta(x)' M^{-1} f_theta(x)``
drives the exchange algorithm; its weighted average over the design is
exactly p, and its maximum over the grid is at least p whenever M is
positive definite, with equality characterizing D-optimality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DesignError, DomainError, SingularInformationError
from .model import ModelSpec

__all__ = [
    "Design",
    "information_matrix",
    "sensitivity",
    "sensitivity_profile",
    "update_design",
    "logdet",
    "lambda_min",
    "sym_inv_sqrt",
    "MatrixIdentityReport",
    "matrix_identity_report",
]

# Scale-invariant positive-definiteness gate.
PD_RTOL = 1e-12
# Support weights below this are pruned after merging.
PRUNE_TOL = 1e-15
MASS_TOL = 1e-12


@dataclass(frozen=True)
class Design:
    """Probability measure with finite support on grid indices.

    Support is kept sorted ascending; weights are positive and sum to
    one within 1e-12.  Instances are immutable value objects.
    """

    support: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.support) != len(self.weights) or not self.support:
            raise DesignError("support and weights must be non-empty and match")
        idx = [int(k) for k in self.support]
        w = [float(v) for v in self.weights]
        if any(k < 0 for k in idx):
            raise DesignError("support indices must be nonnegative")
        if len(set(idx)) != len(idx):
            raise DesignError("support indices must be unique")
        if not all(np.isfinite(w)) or any(v <= 0.0 for v in w):
            raise DesignError("weights must be positive and finite")
        total = sum(w)
        if abs(total - 1.0) > MASS_TOL:
            raise DesignError(f"weights sum to {total!r}, not 1")
        order = sorted(range(len(idx)), key=idx.__getitem__)
        object.__setattr__(self, "support", tuple(idx[i] for i in order))
        object.__setattr__(self, "weights", tuple(w[i] for i in order))

    @classmethod
    def uniform(cls, indices) -> "Design":
        idx = sorted({int(k) for k in indices})
        if not idx:
            raise DesignError("uniform design needs at least one index")
        w = 1.0 / len(idx)
        return cls(support=tuple(idx), weights=tuple(w for _ in idx))

    @classmethod
    def empirical(cls, sequence) -> "Design":
        """The measure (1/n) sum of point masses over an index sequence."""
        seq = [int(k) for k in sequence]
        if not seq:
            raise DesignError("empirical design needs at least one observation")
        counts: dict[int, int] = {}
        for k in seq:
            counts[k] = counts.get(k, 0) + 1
        n = len(seq)
        items = sorted(counts.items())
        return cls(
            support=tuple(k for k, _ in items),
            weights=tuple(c / n for _, c in items),
        )

    def weight_of(self, k: int) -> float:
        k = int(k)
        for i, s in enumerate(self.support):
            if s == k:
                return self.weights[i]
        return 0.0

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.support, dtype=int), np.asarray(self.weights, dtype=float)

    def max_index(self) -> int:
        return self.support[-1]


# ----------------------------------------------------------------------
# information matrices
# ----------------------------------------------------------------------

def _check_theta(spec: ModelSpec, theta) -> np.ndarray:
    t = np.asarray(theta, dtype=float)
    if not spec.box.contains(t):
        raise DomainError(f"parameter {t.tolist()} outside the box")
    return t


def _info_matrix(spec: ModelSpec, design: Design, theta) -> np.ndarray:
    idx, w = design.as_arrays()
    F = spec.region.fmatrix[idx]
    u = F @ np.asarray(theta, dtype=float)
    phi = np.asarray(spec.response.phi(u))
    Fw = phi[:, None] * F
    M = (Fw * w[:, None]).T @ Fw
    return 0.5 * (M + M.T)


def information_matrix(spec: ModelSpec, design: Design, theta) -> np.ndarray:
    """M(xi, theta) = sum over support of weight * f_theta f_theta'."""
    t = _check_theta(spec, theta)
    if design.max_index() >= spec.region.size:
        raise DesignError("design support index out of range for this grid")
    return _info_matrix(spec, design, t)


def _eig_range(M: np.ndarray) -> tuple[float, float]:
    evals = np.linalg.eigvalsh(0.5 * (M + M.T))
    return float(evals[0]), float(evals[-1])


def _require_pd(M: np.ndarray, what: str) -> tuple[float, float]:
    lo, hi = _eig_range(M)
    p = M.shape[0]
    if not (hi > 0.0 and lo > p * PD_RTOL * hi):
        raise SingularInformationError(
            f"{what}: information matrix numerically singular (lambda_min={lo:.6e})",
            lambda_min=lo,
        )
    return lo, hi


def sensitivity_profile(spec: ModelSpec, design: Design, theta) -> np.ndarray:
    """d(x, xi, theta) over the whole grid."""
    t = _check_theta(spec, theta)
    M = _info_matrix(spec, design, t)
    _require_pd(M, "sensitivity")
    Ft = spec.f_theta_matrix(t)
    sol = np.linalg.solve(M, Ft.T)
    return np.einsum("kp,pk->k", Ft, sol)


def sensitivity(spec: ModelSpec, design: Design, theta, k: int) -> float:
    k = spec.region.check_index(k)
    t = _check_theta(spec, theta)
    M = _info_matrix(spec, design, t)
    _require_pd(M, "sensitivity")
    fk = spec.f_theta(k, t)
    return float(fk @ np.linalg.solve(M, fk))


# ----------------------------------------------------------------------
# design update
# ----------------------------------------------------------------------

def update_design(design: Design, k: int, n: int) -> Design:
    """One exchange step: scale by n/(n+1), add 1/(n+1) at point k.

    ``n`` is the sample size the current design represents.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise DesignError(f"sample size n must be a positive integer, got {n!r}")
    k = int(k)
    if k < 0:
        raise DesignError("grid index must be nonnegative")
    idx, w = design.as_arrays()
    scale = n / (n + 1.0)
    w = w * scale
    if k in design.support:
        w[list(design.support).index(k)] += 1.0 / (n + 1.0)
        new_idx = idx
    else:
        new_idx = np.append(idx, k)
        w = np.append(w, 1.0 / (n + 1.0))
    w = w / w.sum()
    keep = w >= PRUNE_TOL
    if not np.all(keep):
        new_idx, w = new_idx[keep], w[keep]
        w = w / w.sum()
    return Design(support=tuple(int(i) for i in new_idx), weights=tuple(float(v) for v in w))


# ----------------------------------------------------------------------
# matrix utilities
# ----------------------------------------------------------------------

def logdet(M: np.ndarray) -> float:
    """log determinant of a positive definite symmetric matrix."""
    M = np.asarray(M, dtype=float)
    _require_pd(M, "logdet")
    chol = np.linalg.cholesky(0.5 * (M + M.T))
    return float(2.0 * np.sum(np.log(np.diag(chol))))


def lambda_min(M: np.ndarray) -> float:
    return _eig_range(np.asarray(M, dtype=float))[0]


def sym_inv_sqrt(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (M^{-1}, M^{1/2}) with both factors symmetric.

    M^{1/2} is the unique symmetric PSD square root.
    """
    M = np.asarray(M, dtype=float)
    _require_pd(M, "sym_inv_sqrt")
    evals, vecs = np.linalg.eigh(0.5 * (M + M.T))
    inv = (vecs / evals) @ vecs.T
    root = (vecs * np.sqrt(evals)) @ vecs.T
    return 0.5 * (inv + inv.T), 0.5 * (root + root.T)


# ----------------------------------------------------------------------
# randomized matrix-identity checks
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class MatrixIdentityReport:
    """Max relative violations of the four quadratic-form/determinant
    identities the design theory rests on."""

    trials: int
    loewner_monotonicity: float
    convex_combination_bound: float
    inverse_form_maximum: float
    gram_det_factorization: float

    @property
    def max_violation(self) -> float:
        return max(
            self.loewner_monotonicity,
            self.convex_combination_bound,
            self.inverse_form_maximum,
            self.gram_det_factorization,
        )


def _pinv_psd(A: np.ndarray) -> np.ndarray:
    evals, vecs = np.linalg.eigh(0.5 * (A + A.T))
    cutoff = max(evals[-1], 0.0) * 1e-12
    inv = np.where(evals > cutoff, 1.0 / np.where(evals > cutoff, evals, 1.0), 0.0)
    return (vecs * inv) @ vecs.T


def _check_loewner(rng: np.random.Generator, p: int) -> float:
    # A <= B in Loewner order, z in range(A): z'A^-z >= z'B^-z
    r = int(rng.integers(1, p + 1))
    X = rng.standard_normal((r, p))
    A = X.T @ X
    q = int(rng.integers(1, p + 1))
    Y = rng.standard_normal((q, p))
    B = A + Y.T @ Y
    z = A @ rng.standard_normal(p)
    qa = float(z @ _pinv_psd(A) @ z)
    qb = float(z @ _pinv_psd(B) @ z)
    return max(0.0, qb - qa) / max(1.0, qa)


def _check_convex_bound(rng: np.random.Generator, p: int) -> float:
    # (sum w_j a_j)' (sum w_j a_j a_j')^- (sum w_j a_j) <= sum_j w_j * 1 <= 1
    m = int(rng.integers(1, 2 * p + 2))
    a = rng.standard_normal((m, p))
    lam = rng.uniform(0.1, 1.0, size=m)
    lam = lam / lam.sum()
    Mw = (a * lam[:, None]).T @ a
    c = lam @ a
    left = float(c @ _pinv_psd(Mw) @ c)
    mid = 0.0
    for j in range(m):
        aj = a[j]
        nrm2 = float(aj @ aj)
        if nrm2 > 0.0:
            outer_pinv = np.outer(aj, aj) / (nrm2 * nrm2)
            mid += lam[j] * float(aj @ outer_pinv @ aj)
    return max(0.0, left - mid, mid - 1.0)


def _check_inverse_form_max(rng: np.random.Generator, p: int) -> float:
    # v'M^{-1}v = max{1/(b'Mb) : v'b = 1}, attained at b0 = M^{-1}v / (v'M^{-1}v)
    evals = rng.uniform(0.1, 10.0, size=p)
    Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    M = (Q * evals) @ Q.T
    v = rng.standard_normal(p)
    while np.linalg.norm(v) < 1e-8:
        v = rng.standard_normal(p)
    q = float(v @ np.linalg.solve(M, v))
    b0 = np.linalg.solve(M, v) / q
    viol = abs(1.0 / float(b0 @ M @ b0) - q) / max(1.0, q)
    for _ in range(3):
        w = rng.standard_normal(p)
        s = float(v @ w)
        while abs(s) < 1e-6 * np.linalg.norm(v) * max(np.linalg.norm(w), 1e-12):
            w = rng.standard_normal(p)
            s = float(v @ w)
        b = w / s
        viol = max(viol, (1.0 / float(b @ M @ b) - q) / max(1.0, q))
    return viol


def _check_gram_factorization(rng: np.random.Generator, p: int) -> float:
    # det(A'A) equals the product of squared distances of each column to
    # the span of the preceding ones
    q = int(rng.integers(1, p + 1))
    A = rng.standard_normal((p, q))
    det = float(np.linalg.det(A.T @ A))
    basis: list[np.ndarray] = []
    prod = 1.0
    for j in range(q):
        res = A[:, j].copy()
        for b in basis:
            res -= (b @ res) * b
        for b in basis:  # second pass keeps orthogonality tight
            res -= (b @ res) * b
        d2 = float(res @ res)
        prod *= d2
        nrm = np.sqrt(d2)
        if nrm > 1e-12 * max(1.0, np.linalg.norm(A[:, j])):
            basis.append(res / nrm)
    return abs(det - prod) / max(1.0, abs(det), abs(prod))


def matrix_identity_report(
    rng: np.random.Generator, trials: int = 10_000, dims=(1, 2, 3, 4, 5)
) -> MatrixIdentityReport:
    """Randomized verification of the four matrix identities.

    Each trial draws a dimension from ``dims`` and exercises one identity
    (round robin), so ``trials`` counts total randomized cases.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    checks = (
        _check_loewner,
        _check_convex_bound,
        _check_inverse_form_max,
        _check_gram_factorization,
    )
    worst = [0.0, 0.0, 0.0, 0.0]
    dims = tuple(int(d) for d in dims)
    for t in range(trials):
        p = dims[int(rng.integers(len(dims)))]
        which = t % 4
        worst[which] = max(worst[which], checks[which](rng, p))
    return MatrixIdentityReport(
        trials=trials,
        loewner_monotonicity=worst[0],
        convex_combination_bound=worst[1],
        inverse_form_maximum=worst[2],
        gram_det_factorization=worst[3],
    )
