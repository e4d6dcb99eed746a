"""Shared fixtures: synthetic meshes and cached pipeline stages."""

import numpy as np
import pytest
from hypothesis import settings

from autorig.distance import compute_edm
from autorig.fixtures import (
    grid_from_occupancy,
    make_barbell,
    make_biped,
    make_capsule,
    make_quadruped,
    make_star,
)
from autorig.medial import extract_dms
from autorig.mesh import write_mesh
from autorig.pathtree import build_path_tree, find_extreme_points, find_heart
from autorig.voxel import voxelize

settings.register_profile("ci", deadline=None, max_examples=25)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def star_mesh():
    return make_star()


@pytest.fixture(scope="session")
def star_rig(star_mesh):
    """Star mesh taken through Method 1 up to the path tree, at resolution 48."""
    grid = voxelize(star_mesh, 48)
    field = compute_edm(grid)
    dms = extract_dms(field, 2.0)
    heart = find_heart(dms)
    extremes = find_extreme_points(dms, heart)
    tree = build_path_tree(dms, heart, extremes, 4.0)
    return {"mesh": star_mesh, "grid": grid, "field": field, "dms": dms,
            "heart": heart, "extremes": extremes, "tree": tree}


@pytest.fixture(scope="session")
def barbell_mesh():
    return make_barbell()


@pytest.fixture(scope="session")
def capsule_mesh():
    return make_capsule(length=2.0, radius=0.4)


@pytest.fixture(scope="session")
def biped_mesh():
    return make_biped()


@pytest.fixture(scope="session")
def quadruped_mesh():
    return make_quadruped()


@pytest.fixture(scope="session")
def quadruped_obj(quadruped_mesh, tmp_path_factory):
    path = tmp_path_factory.mktemp("meshes") / "quadruped.obj"
    write_mesh(quadruped_mesh, path)
    return path


@pytest.fixture(scope="session")
def star_obj(star_mesh, tmp_path_factory):
    path = tmp_path_factory.mktemp("meshes") / "star.obj"
    write_mesh(star_mesh, path)
    return path


@pytest.fixture(scope="session")
def biped_obj(biped_mesh, tmp_path_factory):
    path = tmp_path_factory.mktemp("meshes") / "biped.obj"
    write_mesh(biped_mesh, path)
    return path


def solid_block(shape, at, size):
    """Boolean grid with a solid box of `size` starting at `at`."""
    occ = np.zeros(shape, dtype=bool)
    sl = tuple(slice(a, a + s) for a, s in zip(at, size))
    occ[sl] = True
    return occ


@pytest.fixture()
def block5_field():
    """5x5x5 solid block in a 7^3 grid (unit cells)."""
    occ = solid_block((7, 7, 7), (1, 1, 1), (5, 5, 5))
    return compute_edm(grid_from_occupancy(occ))


def voxel_star_occupancy():
    """Three single-voxel rods joined on a 3^3 hub, inside a padded grid."""
    occ = np.zeros((17, 17, 7), dtype=bool)
    c = (8, 8, 3)
    occ[c[0] - 1:c[0] + 2, c[1] - 1:c[1] + 2, c[2] - 1:c[2] + 2] = True
    occ[c[0] + 2:c[0] + 8, c[1], c[2]] = True          # +x arm
    occ[c[0] - 7:c[0] - 1, c[1], c[2]] = True          # -x arm
    occ[c[0], c[1] + 2:c[1] + 8, c[2]] = True          # +y arm
    return occ
