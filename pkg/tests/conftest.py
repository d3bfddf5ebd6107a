import numpy as np
import pytest

from ffdmesh import BasisKind, build_lattice, parameterize
from ffdmesh.data import sample_face_mesh


@pytest.fixture(scope="session")
def small_face():
    return sample_face_mesh(2000)


@pytest.fixture(scope="session")
def small_mesh(small_face):
    return small_face.mesh


@pytest.fixture(scope="session")
def small_scheme(small_face):
    return small_face.landmark_scheme()


@pytest.fixture(scope="session")
def pm_small(small_mesh):
    grid = build_lattice(small_mesh, (4, 6, 4), BasisKind("bspline", 3), 0.05)
    return parameterize(small_mesh, grid)


@pytest.fixture(scope="session")
def pm_small_bernstein(small_mesh):
    grid = build_lattice(small_mesh, (4, 6, 4), BasisKind("bernstein"), 0.05)
    return parameterize(small_mesh, grid)


@pytest.fixture(scope="session")
def big_face():
    return sample_face_mesh()


@pytest.fixture(scope="session")
def pm_big(big_face):
    grid = build_lattice(big_face.mesh, (6, 19, 4), BasisKind("bspline", 3),
                         0.05)
    return parameterize(big_face.mesh, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240614)


def make_box_mesh(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)):
    """Axis-aligned box with 8 corner vertices and 12 triangles."""
    from ffdmesh import Mesh

    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    corners = np.array([[x, y, z]
                        for x in (lo[0], hi[0])
                        for y in (lo[1], hi[1])
                        for z in (lo[2], hi[2])])
    faces = np.array([
        [0, 1, 3], [0, 3, 2], [4, 6, 7], [4, 7, 5],
        [0, 4, 5], [0, 5, 1], [2, 3, 7], [2, 7, 6],
        [0, 2, 6], [0, 6, 4], [1, 5, 7], [1, 7, 3],
    ])
    return Mesh(corners, faces)
