# -*- coding: utf-8 -*-

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import core  # noqa: E402


@pytest.fixture(autouse=True)
def runtime():
    """ 64-bit mode and fresh counters for every test.
    """
    core.init('float64')
    yield
    core.init('float64')


@pytest.fixture
def rng():
    return np.random.default_rng(42)
