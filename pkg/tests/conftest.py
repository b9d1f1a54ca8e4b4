"""Shared fixtures: boundaries, angular grids, and one phantom sinogram.

Session scope on the expensive objects; every test that mutates data works
on copies.
"""
import numpy as np
import pytest

from aradon.geometry import make_boundary
from aradon.harmonics import AngularGrid, ModeTrace, project_minus
from aradon.xray import forward_sinogram, phantom


@pytest.fixture(scope="session")
def disk256():
    return make_boundary("disk", 256)


@pytest.fixture(scope="session")
def disk512():
    return make_boundary("disk", 512)


@pytest.fixture(scope="session")
def ellipse256():
    return make_boundary("ellipse", 256, a=2.0, b=1.0)


@pytest.fixture(scope="session")
def ang64():
    return AngularGrid(64)


@pytest.fixture(scope="session")
def ang128():
    return AngularGrid(128)


@pytest.fixture(scope="session")
def polybump_sino(disk512, ang128):
    """Non-attenuated boundary data of the radial bump on the unit disk."""
    f = phantom("poly-bump", disk512)
    a = phantom("zero", disk512)
    return forward_sinogram(f, a, disk512, ang128)


@pytest.fixture(scope="session")
def polybump_trace(polybump_sino):
    return project_minus(polybump_sino, 32)


def algebraic_trace(boundary, n_modes, rows):
    """ModeTrace with row k set to rows[k](w) over complex boundary nodes."""
    w = boundary.complex_nodes()
    data = np.zeros((n_modes + 1, boundary.n_nodes), dtype=complex)
    for k, func in rows.items():
        data[k] = func(w)
    return ModeTrace(boundary, n_modes, data)
