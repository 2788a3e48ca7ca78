import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from silrender.geometry import (ObjParseError, Rect, ScreenMesh, TriangleMesh, connected_components,
                                edge_face_map, euler_characteristic, face_bounding_box, format_obj, load_obj,
                                save_obj, signed_area)

coord = st.floats(-1e3, 1e3, allow_nan=False)
point = st.tuples(coord, coord)

CUBE = """\
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 4 3
f 1 3 2
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
"""


def test_signed_area_examples():
    assert signed_area((0, 0), (1, 0), (0, 1)) == 0.5
    assert signed_area((0, 0), (0, 1), (1, 0)) == -0.5
    assert signed_area((0, 0), (1, 1), (2, 2)) == 0.0


def test_signed_area_vectorised():
    a = np.array([[0, 0], [0, 0]])
    b = np.array([[1, 0], [0, 1]])
    c = np.array([[0, 1], [1, 0]])
    np.testing.assert_array_equal(signed_area(a, b, c), [0.5, -0.5])


@given(point, point, point)
def test_signed_area_antisymmetric(a, b, c):
    s = signed_area(a, b, c)
    assert signed_area(b, a, c) == pytest.approx(-s, abs=1e-6)
    assert signed_area(a, c, b) == pytest.approx(-s, abs=1e-6)
    assert signed_area(c, b, a) == pytest.approx(-s, abs=1e-6)


def test_bounding_box_examples():
    assert face_bounding_box((0, 0), (2, 0), (0, 2)) == Rect(0, 0, 2, 2)
    assert face_bounding_box((-1, -1), (5, 1), (2, 7)) == Rect(-1, -1, 5, 7)
    box = face_bounding_box((0, 0), (1, 1), (2, 2))
    assert box.area == 2.0 * 2.0 and not box.is_empty
    assert face_bounding_box((0, 0), (0, 1), (0, 2)).is_empty


@given(point, point, point)
def test_bounding_box_contains_points(a, b, c):
    box = face_bounding_box(a, b, c)
    for x, y in (a, b, c):
        assert box.x_min <= x <= box.x_max and box.y_min <= y <= box.y_max
    assert box.x_min == min(a[0], b[0], c[0]) and box.y_max == max(a[1], b[1], c[1])


def test_pixel_rect():
    assert Rect.pixel(2, 5) == Rect(5, 2, 6, 3)
    assert Rect.pixel(0, 0).area == 1.0


def test_mesh_validation():
    v = np.eye(3)
    TriangleMesh(v, [[0, 1, 2]])
    with pytest.raises(IndexError):
        TriangleMesh(v, [[0, 1, 3]])
    with pytest.raises(ValueError):
        TriangleMesh(v, [[0, 1, 1]])
    with pytest.raises(ValueError):
        TriangleMesh(v[:2], [[0, 1, 0]])
    with pytest.raises(ValueError):
        TriangleMesh(v, np.zeros((0, 3), dtype=int))
    with pytest.raises(ValueError):
        TriangleMesh([[0, 0, np.nan], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])


def test_mesh_is_read_only():
    m = TriangleMesh(np.eye(3), [[0, 1, 2]])
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 5.0
    moved = m.with_vertices(m.vertices + 1.0)
    np.testing.assert_array_equal(moved.faces, m.faces)
    assert moved.vertices[0, 0] == 2.0


def test_screen_mesh():
    s = ScreenMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
    np.testing.assert_array_equal(s.face_areas(), [0.5])
    assert s.triangles().shape == (1, 3, 2)
    empty = ScreenMesh([[0, 0], [1, 0], [0, 1]], np.zeros((0, 3), dtype=int))
    assert empty.face_areas().shape == (0,)


def test_load_cube(tmp_path):
    p = tmp_path / "cube.obj"
    p.write_text(CUBE)
    m = load_obj(p)
    assert m.num_vertices == 8 and m.num_faces == 12
    assert euler_characteristic(m) == 2
    assert len(edge_face_map(m.faces)) == 18


def test_load_fan_and_slashes(tmp_path):
    p = tmp_path / "quad.obj"
    p.write_text("# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3//1 4\n")
    m = load_obj(p)
    np.testing.assert_array_equal(m.faces, [[0, 1, 2], [0, 2, 3]])
    p.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nf -3 -2 -1\n")
    np.testing.assert_array_equal(load_obj(p).faces, [[0, 1, 2]])


def test_load_errors(tmp_path):
    p = tmp_path / "bad.obj"
    p.write_text(CUBE + "f 1 2 99\n")
    with pytest.raises(IndexError, match=":21:"):
        load_obj(p)
    p.write_text("v 0 0 0\nv 1 x 0\n")
    with pytest.raises(ObjParseError, match=":2:"):
        load_obj(p)
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n")
    with pytest.raises(ObjParseError, match="1-based"):
        load_obj(p)
    with pytest.raises(OSError):
        load_obj(tmp_path / "missing.obj")


def test_obj_round_trip(tmp_path, rng):
    m = TriangleMesh(rng.normal(size=(10, 3)), [[0, 1, 2], [3, 4, 5], [6, 7, 8], [9, 0, 5]])
    save_obj(m, tmp_path / "m.obj")
    back = load_obj(tmp_path / "m.obj")
    np.testing.assert_array_equal(back.vertices, m.vertices)
    np.testing.assert_array_equal(back.faces, m.faces)
    assert format_obj(back) == format_obj(m)


def test_connected_components():
    faces = np.array([[0, 1, 2], [3, 4, 5], [2, 1, 6]])
    labels = connected_components(faces, 7)
    assert len(set(labels)) == 2
    assert labels[0] == labels[6] and labels[0] != labels[3]
