"""Shared fixtures: canonical parameter sets and cached oracle textures."""

import numpy as np
import pytest

import noisyqah as nq


@pytest.fixture(scope="session")
def weak_params():
    return nq.QahParams(xi0=1.0, xi_so=0.2, mz=1.2)


@pytest.fixture(scope="session")
def weak_noise():
    return nq.NoiseStrengths(wx=0.05, wy=0.0, wz=0.01)


@pytest.fixture(scope="session")
def type1_noise():
    return nq.NoiseStrengths(wx=0.1, wy=0.05, wz=0.45)


@pytest.fixture(scope="session")
def type1_params():
    return nq.QahParams(xi0=1.0, xi_so=0.2, mz=1.2)


@pytest.fixture(scope="session")
def type2_params():
    return nq.QahParams(xi0=1.0, xi_so=2.0, mz=1.2)


@pytest.fixture(scope="session")
def type2_noise():
    return nq.NoiseStrengths(wx=1.6, wy=0.0, wz=0.8)


@pytest.fixture(scope="session")
def window_axis():
    """15-point momentum axis covering the default analysis window."""
    return np.linspace(-1.8, 1.8, 15)


@pytest.fixture(scope="session")
def weak_texture(weak_params, weak_noise, window_axis):
    """Exact-route spin texture of the weak-noise quench, 15 x 15 window."""
    return nq.oracle_texture(weak_params, weak_noise, window_axis, window_axis)


@pytest.fixture(scope="session")
def weak_dbis(weak_texture):
    curves = nq.extract_dbis(weak_texture)
    assert len(curves) == 1
    return curves[0]
