from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from autorig.errors import MeshIndexError, MeshParseError, MeshTopologyError
from autorig.fixtures import make_cube, make_open_box, make_tetrahedron
from autorig.mesh import TriangleMesh, load_mesh, write_mesh

TETRA_OBJ = """\
# smallest closed mesh
v 0 0 0
v 1 0 0
v 0 1 0
v 0 0 1
f 1 3 2
f 1 2 4
f 1 4 3
f 2 3 4
"""


def test_load_tetrahedron(tmp_path):
    p = tmp_path / "tet.obj"
    p.write_text(TETRA_OBJ)
    mesh = load_mesh(p)
    assert len(mesh.vertices) == 4
    assert len(mesh.triangles) == 4
    assert mesh.watertight


def test_face_index_out_of_range(tmp_path):
    p = tmp_path / "bad.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 5\n")
    with pytest.raises(MeshIndexError):
        load_mesh(p)


def test_cube_every_edge_shared_by_two_faces(tmp_path):
    cube = make_cube()
    p = tmp_path / "cube.obj"
    write_mesh(cube, p)
    mesh = load_mesh(p)
    assert mesh.watertight
    # brute-force incidence count
    counts = Counter()
    for a, b, c in mesh.triangles:
        for e in ((a, b), (b, c), (c, a)):
            counts[tuple(sorted(map(int, e)))] += 1
    assert len(counts) == 18
    assert all(n == 2 for n in counts.values())


def test_non_triangle_face_rejected(tmp_path):
    p = tmp_path / "quad.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(MeshTopologyError):
        load_mesh(p)


def test_degenerate_face_rejected(tmp_path):
    p = tmp_path / "degen.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 1 2\n")
    with pytest.raises(MeshTopologyError):
        load_mesh(p)


def test_parse_error_carries_line_number(tmp_path):
    p = tmp_path / "mangled.obj"
    p.write_text("v 0 0 0\nv 1 0\n")
    with pytest.raises(MeshParseError) as exc:
        load_mesh(p)
    assert exc.value.lineno == 2


def test_bad_coordinate(tmp_path):
    p = tmp_path / "mangled.obj"
    p.write_text("v 0 0 zero\n")
    with pytest.raises(MeshParseError):
        load_mesh(p)


def test_slash_suffixes_ignored(tmp_path):
    p = tmp_path / "slashes.obj"
    p.write_text(
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
        "f 1/1 3/2/1 2//3\nf 1 2 4\nf 1 4 3\nf 2 3 4\n"
    )
    mesh = load_mesh(p)
    assert mesh.watertight
    assert (mesh.triangles[0] == [0, 2, 1]).all()


def test_round_trip_tetrahedron(tmp_path):
    tet = make_tetrahedron(scale=1.2345)
    p = tmp_path / "tet.obj"
    write_mesh(tet, p)
    back = load_mesh(p)
    assert np.array_equal(back.triangles, tet.triangles)
    assert np.abs(back.vertices - tet.vertices).max() < 1e-6


def test_empty_mesh_round_trip(tmp_path):
    empty = TriangleMesh(vertices=np.zeros((0, 3)), triangles=np.zeros((0, 3), dtype=int),
                         name="empty")
    p = tmp_path / "empty.obj"
    write_mesh(empty, p)
    back = load_mesh(p)
    assert len(back.vertices) == 0
    assert len(back.triangles) == 0


def test_write_is_byte_stable(tmp_path):
    cube = make_cube(edge=0.3, origin=(-0.1, 0.2, 0.7))
    a, b = tmp_path / "a.obj", tmp_path / "b.obj"
    write_mesh(cube, a)
    write_mesh(load_mesh(a), b)
    assert a.read_bytes() == b.read_bytes()
    b2 = tmp_path / "b2.obj"
    write_mesh(load_mesh(b), b2)
    assert b.read_bytes() == b2.read_bytes()


def test_open_box_is_not_watertight():
    assert not make_open_box().watertight


def test_constructor_rejects_bad_indices():
    with pytest.raises(MeshIndexError):
        TriangleMesh(vertices=np.zeros((3, 3)), triangles=np.array([[0, 1, 3]]))


coords = st.floats(min_value=-100, max_value=100, allow_nan=False, width=32)


@given(
    verts=st.lists(st.tuples(coords, coords, coords), min_size=3, max_size=12),
    data=st.data(),
)
def test_round_trip_random_meshes(tmp_path_factory, verts, data):
    n = len(verts)
    tris = data.draw(st.lists(
        st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.integers(0, n - 1))
        .filter(lambda t: len(set(t)) == 3),
        min_size=1, max_size=20,
    ))
    mesh = TriangleMesh(vertices=np.array(verts, dtype=np.float64),
                        triangles=np.array(tris), name="random")
    p = tmp_path_factory.mktemp("rt") / "m.obj"
    write_mesh(mesh, p)
    back = load_mesh(p)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.abs(back.vertices - mesh.vertices).max() < 1e-6
