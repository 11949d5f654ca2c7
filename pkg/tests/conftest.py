"""Shared fixtures: tiny graphs with hand-checkable numbers."""

import numpy as np
import pytest

from segrelax.graph import SeedSet, SuperpixelGraph


@pytest.fixture
def chain21():
    """Chain 0-1-2 with weights (2, 1); the free middle node makes every
    solver's answer computable by hand."""
    return SuperpixelGraph(np.zeros((3, 1)), [[0, 1], [1, 2]], [2.0, 1.0])


@pytest.fixture
def chain21_seeds():
    return SeedSet.of({0}, {2})


@pytest.fixture
def grid4(rng):
    from segrelax.diagnostics import random_grid_graph

    return random_grid_graph(4, rng)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
