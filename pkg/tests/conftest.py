"""Shared fixtures: small line models used throughout the suite."""

from __future__ import annotations

import numpy as np
import pytest

from adwynn.families import linked_response
from adwynn.model import ExperimentalRegion, GridPoint, ModelSpec, ParameterBox


def make_line_spec(family_link: str, xs, lower, upper) -> ModelSpec:
    """A one-covariate model with regressor f(x) = (1, x)."""
    points = [
        GridPoint(label=f"x{i}", x=(float(x),), f=(1.0, float(x)))
        for i, x in enumerate(xs)
    ]
    return ModelSpec(
        ExperimentalRegion(points),
        linked_response(family_link),
        ParameterBox(lower, upper),
    )


@pytest.fixture
def gauss_line3() -> ModelSpec:
    return make_line_spec("gaussian-identity", [-1.0, 0.0, 1.0], [-1.0, -1.0], [1.0, 1.0])


@pytest.fixture
def gauss_line5() -> ModelSpec:
    return make_line_spec(
        "gaussian-identity", [-1.0, -0.5, 0.0, 0.5, 1.0], [-1.0, -1.0], [1.0, 1.0]
    )


@pytest.fixture
def gauss_line41() -> ModelSpec:
    return make_line_spec(
        "gaussian-identity", np.linspace(-1.0, 1.0, 41), [-1.0, -1.0], [1.0, 1.0]
    )


@pytest.fixture
def bern_line5() -> ModelSpec:
    return make_line_spec(
        "bernoulli-logit", [-1.0, -0.5, 0.0, 0.5, 1.0], [-2.0, -2.0], [2.0, 2.0]
    )


@pytest.fixture
def bern_line161() -> ModelSpec:
    return make_line_spec(
        "bernoulli-logit", np.linspace(-4.0, 4.0, 161), [-3.0, -3.0], [3.0, 3.0]
    )


@pytest.fixture
def pois_line5() -> ModelSpec:
    return make_line_spec(
        "poisson-log", [-1.0, -0.5, 0.0, 0.5, 1.0], [-1.5, -1.5], [1.5, 1.5]
    )
