"""Shared fixtures: small models and grids reused across test modules."""

import numpy as np
import pytest

from refprior.core import GridDensity, ParamSpace, make_grid, normalize
from refprior.models import gaussian_scale_model, twopiece_model


@pytest.fixture(scope="session")
def scale_model():
    return gaussian_scale_model(window=(0.1, 10.0))


@pytest.fixture(scope="session")
def scale_jeffreys(scale_model):
    """Normalized 1/sigma density on the bounded scale window, 101 nodes."""
    grid = make_grid(scale_model.param_space, nodes_per_axis=101)
    vals = 1.0 / grid[0]
    return normalize(GridDensity.from_values(scale_model.param_space, grid, vals))


@pytest.fixture(scope="session")
def tp_model():
    return twopiece_model((-8.0, 8.0))


@pytest.fixture
def unit_space():
    return ParamSpace.box([(0.0, 1.0)])
