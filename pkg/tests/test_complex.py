import numpy as np
import pytest

from symhdiv import polybasis as pb
from symhdiv.discrete_complex import (BellSpace, airy_of_bell, certify_exactness, divergence_matrix,
                                      injection_matrix)
from symhdiv.mesh import uniform_square_mesh
from symhdiv.spaces import DisplacementSpace, StressSpace


def _bell_vector(mesh, q, qx, qy, qxx, qxy, qyy):
    """Bell DoF vector (value, gradient, Hessian per vertex) of a global polynomial."""
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    return np.stack([f(x, y) for f in (q, qx, qy, qxx, qxy, qyy)], axis=1).ravel()


@pytest.fixture(scope="module")
def n2():
    mesh = uniform_square_mesh(2)
    space = StressSpace(mesh, "full")
    return mesh, space, BellSpace(mesh, space.geom)


def test_airy_of_quadratic_is_constant(n2):
    mesh, space, bell = n2
    one, zero = (lambda x, y: np.ones_like(x)), (lambda x, y: np.zeros_like(x))
    w = _bell_vector(mesh, lambda x, y: x * x + 3 * x * y, lambda x, y: 2 * x + 3 * y, lambda x, y: 3 * x,
                     lambda x, y: 2 * one(x, y), lambda x, y: 3 * one(x, y), zero)
    chk = airy_of_bell(space, bell, w)
    assert chk.mismatch < 1e-12 and chk.membership < 1e-12 and chk.div < 1e-12
    tau = space.local(chk.coef)
    vals = np.moveaxis(pb.evaluate(tau, np.full((1, 3), 1 / 3), 2), -1, 1)[:, 0]
    expect = np.array([[0.0, -3.0], [-3.0, 2.0]])  # [[q_yy, -q_xy], [-q_xy, q_xx]]
    np.testing.assert_allclose(vals, np.broadcast_to(expect, vals.shape), atol=1e-12)


def test_airy_of_affine_is_zero(n2):
    mesh, space, bell = n2
    zero = lambda x, y: np.zeros_like(x)  # noqa: E731
    w = _bell_vector(mesh, lambda x, y: 1 + 2 * x - y, lambda x, y: 2 + zero(x, y),
                     lambda x, y: -1 + zero(x, y), zero, zero, zero)
    chk = airy_of_bell(space, bell, w)
    assert np.abs(chk.coef).max() < 1e-12


def test_airy_of_random_bell_vector(n2):
    _, space, bell = n2
    w = np.random.default_rng(0).standard_normal(bell.dim)
    chk = airy_of_bell(space, bell, w)
    assert chk.membership < 1e-10 and chk.div < 1e-10 and chk.mismatch < 1e-10


def test_exactness_n1_counts():
    rep = certify_exactness(uniform_square_mesh(1), "full")
    assert rep.dim_Sigma == 33 and rep.dim_V == 12 and rep.nullity_div == 21
    assert rep.passed, rep.checks


@pytest.mark.parametrize("variant", ["full", "reduced"])
@pytest.mark.parametrize("n", [2, 4])
def test_exactness(variant, n):
    rep = certify_exactness(uniform_square_mesh(n), variant)
    assert rep.passed, rep.to_text()
    if n == 2:
        assert rep.nullity_div == 51
        if variant == "reduced":
            assert rep.dim_V == 24 and rep.rank_div == 24


def test_injection_commutes_with_divergence():
    mesh = uniform_square_mesh(2)
    red, full = StressSpace(mesh, "reduced"), StressSpace(mesh, "full")
    J, err = injection_matrix(red, full)
    assert err < 1e-10
    Br = divergence_matrix(red, DisplacementSpace(mesh, "reduced", red.geom))
    Bf = divergence_matrix(full, DisplacementSpace(mesh, "full", full.geom))
    # div of a reduced field is a rigid motion; compare as functions through the full P1 space
    x = np.random.default_rng(1).standard_normal(red.dim)
    dr = np.einsum("tl,tlcn->tcn", red.dofmap.gather(x), red.div_coef)
    df = np.einsum("tl,tlcn->tcn", full.dofmap.gather(J @ x), full.div_coef)
    np.testing.assert_allclose(dr, df, atol=1e-10)
    assert Br.shape[0] == 24 and Bf.shape[0] == 48


def test_report_serializes():
    rep = certify_exactness(uniform_square_mesh(1), "reduced")
    assert '"passed": true' in rep.to_json()
    assert "PASS" in rep.to_text()
