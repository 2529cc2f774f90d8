import numpy as np
import pytest

from symhdiv.mesh import (GeometryError, build_geometry, build_mesh, entity_frames, read_mesh,
                          uniform_square_mesh)


@pytest.mark.parametrize("n,cells,verts,edges", [(1, 2, 4, 5), (2, 8, 9, 16), (128, 32768, 16641, 49408)])
def test_uniform_counts(n, cells, verts, edges):
    mesh = uniform_square_mesh(n)
    assert (mesh.n_cells, mesh.n_vertices, mesh.n_edges) == (cells, verts, edges)


@pytest.mark.parametrize("n", range(1, 9))
def test_structured_counts_and_euler(n):
    mesh = uniform_square_mesh(n)
    assert mesh.n_cells == 2 * n * n
    assert mesh.n_vertices == (n + 1) ** 2
    assert mesh.n_edges + 1 == mesh.n_vertices + mesh.n_cells
    assert np.all(build_geometry(mesh).measure > 0)
    # every edge appears once
    assert len({tuple(e) for e in mesh.edges}) == mesh.n_edges


def test_reference_triangle_geometry():
    mesh = build_mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
    g = build_geometry(mesh, 0)
    np.testing.assert_allclose(g.grad_lambda, [[-1, -1], [1, 0], [0, 1]], atol=1e-15)
    assert g.measure == pytest.approx(0.5)
    assert g.c[0, 1] == pytest.approx(-1.0)
    assert g.c[1, 2] == pytest.approx(0.0, abs=1e-15)
    assert g.c[1, 1] == pytest.approx(1.0)
    t12 = g.t[1, 2]
    assert t12 @ g.grad_lambda[2] == pytest.approx(1.0)
    assert t12 @ g.grad_lambda[1] == pytest.approx(-1.0)


def test_barycentric_identities_random_cells():
    rng = np.random.default_rng(3)
    verts = rng.uniform(size=(30, 2))
    from scipy.spatial import Delaunay
    mesh = build_mesh(verts, Delaunay(verts).simplices)
    g = build_geometry(mesh)
    np.testing.assert_allclose(g.grad_lambda.sum(axis=1), 0.0, atol=1e-11)
    # lambda_i(v_j) = delta_ij, with lambda_i affine: lambda_i(x) = 1{i=0} + grad_i . (x - v_0)
    rel = g.vertices - g.vertices[:, :1]
    lam = np.einsum("tjc,tic->tji", rel, g.grad_lambda)
    lam[:, :, 0] += 1.0
    np.testing.assert_allclose(lam, np.broadcast_to(np.eye(3), lam.shape), atol=1e-11)
    # identity t_ij . grad lambda_l = delta_jl - delta_il
    ident = np.einsum("tijc,tlc->tijl", g.t, g.grad_lambda)
    eye = np.eye(3)
    expect = eye[None, None, :, :] - eye[None, :, None, :]
    np.testing.assert_allclose(ident, np.broadcast_to(expect, ident.shape), atol=1e-11)
    # t_jk . t_ki = 4 |K|^2 c_ij for (i, j, k) cyclic
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        lhs = np.einsum("tc,tc->t", g.t[:, j, k], g.t[:, k, i])
        np.testing.assert_allclose(lhs, 4 * g.measure ** 2 * g.c[:, i, j], rtol=1e-10, atol=1e-14)


def test_positive_orientation_enforced():
    mesh = build_mesh([[0, 0], [1, 0], [0, 1]], [[0, 2, 1]])
    assert build_geometry(mesh, 0).measure > 0
    assert np.linalg.det(np.array([mesh.vertices[c] - mesh.vertices[mesh.cells[0, 0]]
                                   for c in mesh.cells[0, 1:]])) > 0


def test_degenerate_cell_rejected():
    with pytest.raises(GeometryError):
        build_mesh([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]])


def test_edge_frame_convention():
    mesh = build_mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
    fr = entity_frames(mesh)
    e = [k for k, (a, b) in enumerate(mesh.edges) if {a, b} == {0, 1}][0]
    np.testing.assert_allclose(fr.face_tangent[e], [1, 0])
    np.testing.assert_allclose(fr.face_normal[e], [0, -1])


def test_frames_entity_owned():
    # the shared edge is seen with opposite local orientation by the two cells
    mesh = build_mesh([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1, 2], [0, 2, 3]])
    fr = entity_frames(mesh)
    shared = np.intersect1d(mesh.cell_edges[0], mesh.cell_edges[1])
    assert len(shared) == 1
    again = entity_frames(build_mesh([[0, 0], [1, 0], [1, 1], [0, 1]], [[2, 0, 1], [3, 0, 2]]))
    np.testing.assert_array_equal(fr.face_normal, again.face_normal)
    np.testing.assert_array_equal(fr.face_tangent, again.face_tangent)


def test_3d_edge_frames_orthonormal_and_deterministic():
    verts = [[0, 0, 0], [1, 1, 1], [1, 0, 0], [0, 1, 0]]
    m1 = build_mesh(verts, [[0, 1, 2, 3]])
    m2 = build_mesh(verts, [[0, 1, 2, 3]])
    f1, f2 = entity_frames(m1), entity_frames(m2)
    e = [k for k, (a, b) in enumerate(m1.edges) if {a, b} == {0, 1}][0]
    np.testing.assert_allclose(f1.edge_tangent[e], np.ones(3) / np.sqrt(3))
    frame = np.vstack([f1.edge_tangent[e], *f1.edge_normals[e]])
    np.testing.assert_allclose(frame @ frame.T, np.eye(3), atol=1e-14)
    np.testing.assert_allclose(np.cross(*f1.edge_normals[e]), f1.edge_tangent[e], atol=1e-14)
    np.testing.assert_array_equal(f1.edge_normals, f2.edge_normals)
    np.testing.assert_array_equal(f1.face_tangent, f2.face_tangent)


def test_interior_edges_shared_by_two_cells():
    mesh = uniform_square_mesh(4)
    counts = np.bincount(mesh.cell_edges.ravel(), minlength=mesh.n_edges)
    assert set(counts) == {1, 2}
    assert np.sum(counts == 1) == 16
    assert len(mesh.boundary_faces()) == 16


def test_read_mesh(tmp_path):
    p = tmp_path / "sq.mesh"
    p.write_text("vertices\n0 0\n1 0\n1 1\n0 1\ncells\n0 1 2\n0 2 3\n")
    mesh = read_mesh(p)
    assert (mesh.n_vertices, mesh.n_cells, mesh.n_edges) == (4, 2, 5)
