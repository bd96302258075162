import numpy as np
import pytest

from anisphere.mesh import build_icosphere, read_obj, write_obj


def test_icosahedron_counts():
    m = build_icosphere(0)
    assert m.n_vertices == 12
    assert m.n_faces == 20


def test_vertex_count_formula():
    m = build_icosphere(3)
    assert m.n_vertices == 10 * 4 ** 3 + 2
    assert m.n_faces == 20 * 4 ** 3


def test_subdivision_range():
    with pytest.raises(ValueError):
        build_icosphere(-1)
    with pytest.raises(ValueError):
        build_icosphere(9)


def test_unit_vertices(mesh):
    r = np.linalg.norm(mesh.vertices, axis=1)
    assert np.abs(r - 1.0).max() <= 1e-12


def test_quadrature_weights(mesh):
    assert mesh.weights.min() > 0
    total = mesh.weights.sum()
    assert abs(total - 4 * np.pi) / (4 * np.pi) <= 1e-10


def test_frames_orthonormal(mesh):
    e1, e2 = mesh.frames[:, 0], mesh.frames[:, 1]
    n = mesh.vertices
    assert np.abs(np.einsum("ij,ij->i", e1, e1) - 1).max() <= 1e-12
    assert np.abs(np.einsum("ij,ij->i", e2, e2) - 1).max() <= 1e-12
    assert np.abs(np.einsum("ij,ij->i", e1, e2)).max() <= 1e-12
    assert np.abs(np.einsum("ij,ij->i", e1, n)).max() <= 1e-12
    assert np.abs(np.einsum("ij,ij->i", e2, n)).max() <= 1e-12


def test_faces_oriented_outward(mesh):
    v = mesh.vertices
    f = mesh.faces
    vol6 = np.einsum("ij,ij->i", v[f[:, 0]], np.cross(v[f[:, 1]], v[f[:, 2]]))
    assert np.all(vol6 > 0)


def test_stencils_kill_constants(mesh):
    ones = np.ones(mesh.n_vertices)
    ops = mesh.ops
    for key in ("g1", "g2", "h11", "h12", "h22"):
        assert np.abs(ops[key] @ ones).max() <= 1e-10


def test_locate_and_interpolate(mesh, rng):
    dirs = rng.normal(size=(200, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    f, b = mesh.locate(dirs)
    assert (f >= 0).all()
    assert (b >= -1e-9).all()
    assert np.abs(b.sum(axis=1) - 1).max() <= 1e-12
    # the ray through each direction meets its face
    tri = mesh.vertices[mesh.faces[f]]
    hit = np.einsum("ijk,ij->ik", tri, b)
    hit /= np.linalg.norm(hit, axis=1, keepdims=True)
    assert np.abs(hit - dirs).max() <= 1e-9
    # interpolation is exact at vertices
    vals = rng.normal(size=mesh.n_vertices)
    got = mesh.interpolate(vals, mesh.vertices[:50])
    assert np.abs(got - vals[:50]).max() <= 1e-9


def test_obj_roundtrip(tmp_path, mesh3):
    path = tmp_path / "sphere.obj"
    write_obj(path, mesh3.vertices, mesh3.faces)
    v, f = read_obj(path)
    assert np.abs(v - mesh3.vertices).max() <= 1e-15
    assert (f == mesh3.faces).all()
