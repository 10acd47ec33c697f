"""Likelihood, score, and box-constrained fitting.

Oracle helpers live at the top: finite-difference derivatives of the
log-likelihood, an order-free batch likelihood evaluator, and brute
grid scans.  The implementation is checked against these, never against
itself.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adwynn.errors import (
    DomainError,
    EstimationError,
    ResponseDomainError,
)
from adwynn.estimation import (
    DataSet,
    FitResult,
    SolverConfig,
    fit_mle,
    log_likelihood,
    observed_information,
    score,
)
from adwynn.model import ExperimentalRegion, GridPoint, ModelSpec, ParameterBox
from adwynn.families import linked_response

from conftest import make_line_spec


# ---------------------------------------------------------------------------
# oracles


def fd_gradient(fun, theta, h=1e-6):
    theta = np.asarray(theta, dtype=float)
    g = np.zeros_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        g[j] = (fun(theta + e) - fun(theta - e)) / (2.0 * h)
    return g


def fd_hessian(fun, theta, h=1e-4):
    theta = np.asarray(theta, dtype=float)
    p = theta.size
    H = np.zeros((p, p))
    for i in range(p):
        for j in range(i, p):
            ei = np.zeros(p)
            ej = np.zeros(p)
            ei[i] = h
            ej[j] = h
            H[i, j] = (
                fun(theta + ei + ej)
                - fun(theta + ei - ej)
                - fun(theta - ei + ej)
                + fun(theta - ei - ej)
            ) / (4.0 * h * h)
            H[j, i] = H[i, j]
    return H


def batch_loglik(data, thetas):
    """Likelihood at many parameters, straight from the definition.

    Canonical links only: the canonical parameter equals the linear
    predictor, so the value is sum_k [ysum_k * u_k - count_k * b(u_k)].
    """
    spec = data.spec
    U = np.asarray(thetas, dtype=float) @ spec.region.fmatrix.T
    b, _, _ = spec.response.family.cumulant(U)
    return U @ data.response_sums - b @ data.counts


def draw_responses(link_name, size, rng):
    if link_name == "bernoulli-logit":
        return rng.integers(0, 2, size=size).astype(float)
    if link_name == "poisson-log":
        return rng.poisson(2.0, size=size).astype(float)
    return rng.normal(0.0, 1.0, size=size)


def random_dataset(spec, rng, n=30):
    idx = rng.integers(0, spec.region.size, size=n)
    y = draw_responses(spec.response.name, n, rng)
    return DataSet(spec, idx, y)


def interior_theta(spec, rng, margin=0.02):
    lo = spec.box.lower + margin
    hi = spec.box.upper - margin
    return lo + (hi - lo) * rng.random(spec.box.dim)


SPEC_MAKERS = {
    "bernoulli-logit": lambda: make_line_spec(
        "bernoulli-logit", [-1.0, -0.5, 0.0, 0.5, 1.0], [-2.0, -2.0], [2.0, 2.0]
    ),
    "poisson-log": lambda: make_line_spec(
        "poisson-log", [-1.0, -0.5, 0.0, 0.5, 1.0], [-1.5, -1.5], [1.5, 1.5]
    ),
    "gaussian-identity": lambda: make_line_spec(
        "gaussian-identity", [-1.0, -0.5, 0.0, 0.5, 1.0], [-1.0, -1.0], [1.0, 1.0]
    ),
}


# ---------------------------------------------------------------------------
# dataset plumbing


class TestDataSet:
    def test_empty_start(self, bern_line5):
        d = DataSet.empty(bern_line5)
        assert d.n == 0 and len(d) == 0
        assert d.counts.sum() == 0.0

    def test_append_matches_bulk_construction(self, bern_line5):
        rows = [(0, 1.0), (2, 0.0), (2, 1.0), (4, 1.0), (0, 0.0)]
        bulk = DataSet(bern_line5, [r[0] for r in rows], [r[1] for r in rows])
        inc = DataSet.empty(bern_line5)
        for k, y in rows:
            inc.append(k, y)
        assert np.array_equal(bulk.counts, inc.counts)
        assert np.array_equal(bulk.response_sums, inc.response_sums)
        th = (0.3, -0.7)
        assert log_likelihood(bulk, th) == log_likelihood(inc, th)

    def test_append_keeps_fractional_responses(self, gauss_line5):
        # regression: sums must stay float even when the first rows
        # arrive one at a time into an initially empty dataset
        inc = DataSet.empty(gauss_line5)
        inc.append(1, 0.75)
        inc.append(1, -0.25)
        assert inc.response_sums[1] == pytest.approx(0.5, abs=1e-15)
        bulk = DataSet(gauss_line5, [1, 1], [0.75, -0.25])
        assert np.array_equal(bulk.response_sums, inc.response_sums)

    def test_rejects_bad_bernoulli_response(self, bern_line5):
        with pytest.raises(ResponseDomainError):
            DataSet(bern_line5, [0], [0.5])
        d = DataSet.empty(bern_line5)
        with pytest.raises(ResponseDomainError):
            d.append(0, 2.0)
        assert d.n == 0

    def test_rejects_bad_poisson_response(self, pois_line5):
        with pytest.raises(ResponseDomainError):
            DataSet(pois_line5, [1], [-1.0])
        with pytest.raises(ResponseDomainError):
            DataSet(pois_line5, [1], [2.5])

    def test_rejects_nonfinite_gaussian_response(self, gauss_line5):
        with pytest.raises(ResponseDomainError):
            DataSet(gauss_line5, [0], [float("inf")])

    def test_rejects_bad_index(self, bern_line5):
        with pytest.raises(IndexError):
            DataSet(bern_line5, [7], [1.0])
        with pytest.raises(IndexError):
            DataSet(bern_line5, [-1], [1.0])
        d = DataSet.empty(bern_line5)
        with pytest.raises(IndexError):
            d.append(5, 1.0)

    def test_length_mismatch(self, bern_line5):
        with pytest.raises(DomainError):
            DataSet(bern_line5, [0, 1], [1.0])


# ---------------------------------------------------------------------------
# likelihood and score values


class TestLogLikelihood:
    def test_single_bernoulli_row_at_origin(self, bern_line5):
        # f = (1, 0) at x = 0, theta = 0: tau = 0, so 1*0 - log(1+1)
        d = DataSet(bern_line5, [2], [1.0])
        assert log_likelihood(d, (0.0, 0.0)) == pytest.approx(
            -math.log(2.0), abs=1e-12
        )

    def test_gaussian_quadratic_identity(self, gauss_line5):
        rng = np.random.default_rng(11)
        F = gauss_line5.region.fmatrix
        for _ in range(200):
            d = random_dataset(gauss_line5, rng, n=25)
            th = interior_theta(gauss_line5, rng)
            resid = d.responses - F[d.indices] @ th
            expected = -0.5 * np.sum(resid**2) + 0.5 * np.sum(d.responses**2)
            assert log_likelihood(d, th) == pytest.approx(expected, abs=1e-12, rel=1e-12)

    def test_hessian_negative_semidefinite_all_families(self):
        rng = np.random.default_rng(23)
        cases = (
            ["bernoulli-logit"] * 40 + ["poisson-log"] * 30 + ["gaussian-identity"] * 30
        )
        for name in cases:
            spec = SPEC_MAKERS[name]()
            d = random_dataset(spec, rng, n=60)
            th = interior_theta(spec, rng)
            H = fd_hessian(lambda t: log_likelihood(d, t), th, h=1e-4)
            assert np.linalg.eigvalsh(H)[-1] <= 1e-10

    def test_observed_information_matches_fd(self, bern_line5):
        rng = np.random.default_rng(29)
        for _ in range(20):
            d = random_dataset(bern_line5, rng, n=40)
            th = interior_theta(bern_line5, rng)
            H = fd_hessian(lambda t: log_likelihood(d, t), th, h=1e-4)
            I = observed_information(d, th)
            assert np.allclose(I, -H, atol=1e-5, rtol=1e-5)

    def test_empty_data_raises(self, bern_line5):
        d = DataSet.empty(bern_line5)
        with pytest.raises(EstimationError):
            log_likelihood(d, (0.0, 0.0))
        with pytest.raises(EstimationError):
            score(d, (0.0, 0.0))
        with pytest.raises(EstimationError):
            observed_information(d, (0.0, 0.0))
        with pytest.raises(EstimationError):
            fit_mle(d)

    def test_theta_outside_box_raises(self, bern_line5):
        d = DataSet(bern_line5, [0], [1.0])
        with pytest.raises(DomainError):
            log_likelihood(d, (5.0, 0.0))


class TestScore:
    def test_gaussian_residual_form(self, gauss_line5):
        rng = np.random.default_rng(37)
        F = gauss_line5.region.fmatrix
        for _ in range(100):
            d = random_dataset(gauss_line5, rng, n=20)
            th = interior_theta(gauss_line5, rng)
            resid = d.responses - F[d.indices] @ th
            expected = F[d.indices].T @ resid
            assert np.allclose(score(d, th), expected, atol=1e-12, rtol=1e-12)

    def test_exact_fit_means_zero_score(self, gauss_line41):
        rng = np.random.default_rng(41)
        spec = gauss_line41
        F = spec.region.fmatrix
        for _ in range(25):
            th = interior_theta(spec, rng)
            idx = rng.integers(0, spec.region.size, size=30)
            d = DataSet(spec, idx, F[idx] @ th)
            assert np.linalg.norm(score(d, th)) <= 1e-12

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(43)
        names = list(SPEC_MAKERS)
        checked = 0
        for trial in range(1000):
            spec = SPEC_MAKERS[names[trial % 3]]()
            d = random_dataset(spec, rng, n=30)
            th = interior_theta(spec, rng)
            g = score(d, th)
            fd = fd_gradient(lambda t: log_likelihood(d, t), th, h=1e-6)
            assert np.linalg.norm(g - fd) <= 1e-6 * (1.0 + np.linalg.norm(fd))
            checked += 1
        assert checked == 1000

    def test_permutation_invariance(self, pois_line5):
        rng = np.random.default_rng(47)
        idx = rng.integers(0, 5, size=40)
        y = rng.poisson(2.0, size=40).astype(float)
        perm = rng.permutation(40)
        a = DataSet(pois_line5, idx, y)
        b = DataSet(pois_line5, idx[perm], y[perm])
        th = (0.4, -0.9)
        assert log_likelihood(a, th) == pytest.approx(log_likelihood(b, th), abs=1e-12)
        assert np.allclose(score(a, th), score(b, th), atol=1e-12)
        fa, fb = fit_mle(a), fit_mle(b)
        assert np.allclose(fa.theta, fb.theta, atol=1e-12)


# ---------------------------------------------------------------------------
# fitting


class TestFitMLE:
    def test_gaussian_exact_fit_recovery(self, gauss_line5):
        rng = np.random.default_rng(53)
        spec = gauss_line5
        F = spec.region.fmatrix
        for _ in range(10):
            th = interior_theta(spec, rng, margin=0.1)
            idx = rng.integers(0, spec.region.size, size=40)
            d = DataSet(spec, idx, F[idx] @ th)
            fit = fit_mle(d)
            assert fit.converged
            assert np.allclose(fit.theta, th, atol=1e-8)
            assert fit.score_norm <= 1e-8 * (1.0 + abs(fit.loglik))
            assert not fit.at_boundary

    def test_all_successes_push_to_upper_bound(self):
        # p = 1, single design point, every response 1: the likelihood
        # is strictly increasing in theta, so the box cap is the argmax.
        spec = ModelSpec(
            ExperimentalRegion([GridPoint(label="x0", x=(1.0,), f=(1.0,))]),
            linked_response("bernoulli-logit"),
            ParameterBox([-4.0], [4.0]),
        )
        d = DataSet(spec, [0] * 20, [1.0] * 20)
        # brute-scan oracle first: L along the box is monotone up
        grid = np.linspace(-4.0, 4.0, 2001)
        vals = [log_likelihood(d, (t,)) for t in grid]
        assert np.all(np.diff(vals) > 0)
        fit = fit_mle(d)
        assert fit.theta == (4.0,)
        assert fit.boundary_flags == (True,)
        assert fit.converged

    def test_theta_inside_box_inclusive(self):
        rng = np.random.default_rng(59)
        for trial in range(60):
            name = list(SPEC_MAKERS)[trial % 3]
            spec = SPEC_MAKERS[name]()
            d = random_dataset(spec, rng, n=12)
            fit = fit_mle(d)
            t = np.asarray(fit.theta)
            assert np.all(t >= spec.box.lower) and np.all(t <= spec.box.upper)

    def test_interior_converged_fits_meet_gradient_tolerance(self, bern_line5):
        rng = np.random.default_rng(61)
        for _ in range(30):
            d = random_dataset(bern_line5, rng, n=50)
            fit = fit_mle(d)
            if fit.converged and not fit.at_boundary:
                assert fit.score_norm <= 1e-8 * (1.0 + abs(fit.loglik))

    def test_trace_is_monotone(self, pois_line5):
        rng = np.random.default_rng(67)
        cfg = SolverConfig(keep_trace=True)
        for _ in range(25):
            d = random_dataset(pois_line5, rng, n=35)
            fit = fit_mle(d, cfg)
            assert len(fit.trace) >= 1
            assert np.all(np.diff(fit.trace) >= 0.0)

    def test_canonical_global_optimality(self):
        rng = np.random.default_rng(71)
        names = list(SPEC_MAKERS)
        for trial in range(100):
            spec = SPEC_MAKERS[names[trial % 3]]()
            d = random_dataset(spec, rng, n=15)
            fit = fit_mle(d)
            probes = spec.box.lower + (spec.box.upper - spec.box.lower) * rng.random(
                (10_000, spec.box.dim)
            )
            assert fit.loglik >= batch_loglik(d, probes).max() - 1e-9

    def test_warm_start_agrees_with_cold(self, bern_line5):
        rng = np.random.default_rng(73)
        for _ in range(20):
            d = random_dataset(bern_line5, rng, n=60)
            cold = fit_mle(d)
            warm = fit_mle(d, start=interior_theta(bern_line5, rng))
            assert warm.starts_used == 1
            assert np.allclose(warm.theta, cold.theta, atol=1e-7)

    def test_deterministic_repeat(self, bern_line5):
        rng = np.random.default_rng(79)
        d = random_dataset(bern_line5, rng, n=45)
        assert fit_mle(d) == fit_mle(d)

    def test_explicit_start_count(self, bern_line5):
        rng = np.random.default_rng(83)
        d = random_dataset(bern_line5, rng, n=30)
        fit = fit_mle(d, SolverConfig(n_starts=3))
        assert fit.starts_used == 3

    def test_config_validation(self):
        with pytest.raises(DomainError):
            SolverConfig(grad_tol=0.0)
        with pytest.raises(DomainError):
            SolverConfig(max_newton_iters=0)
        with pytest.raises(DomainError):
            SolverConfig(n_starts=0)

    def test_monte_carlo_recovery_at_balanced_two_point_design(self):
        # Two symmetric design points near the classic logistic optimum,
        # even split, theta = (0, 1), n = 500.
        spec = make_line_spec(
            "bernoulli-logit", [-1.5434, 1.5434], [-3.0, -3.0], [3.0, 3.0]
        )
        truth = np.array([0.0, 1.0])
        u = spec.region.fmatrix @ truth
        prob = 1.0 / (1.0 + np.exp(-u))
        hits = 0
        for seed in range(100):
            rng = np.random.default_rng(1000 + seed)
            idx = np.repeat([0, 1], 250)
            y = (rng.random(500) < prob[idx]).astype(float)
            fit = fit_mle(DataSet(spec, idx, y))
            if np.linalg.norm(np.asarray(fit.theta) - truth) <= 0.25:
                hits += 1
        assert hits >= 90


@settings(max_examples=40, deadline=None)
@given(
    rows=st.lists(
        st.tuples(st.integers(min_value=0, max_value=4), st.sampled_from([0.0, 1.0])),
        min_size=1,
        max_size=25,
    )
)
def test_fit_properties_hold_for_arbitrary_binary_data(rows):
    spec = SPEC_MAKERS["bernoulli-logit"]()
    d = DataSet(spec, [r[0] for r in rows], [r[1] for r in rows])
    fit = fit_mle(d, SolverConfig(keep_trace=True))
    t = np.asarray(fit.theta)
    assert np.all(t >= spec.box.lower) and np.all(t <= spec.box.upper)
    assert np.all(np.diff(fit.trace) >= 0.0)
