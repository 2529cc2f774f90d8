import math

import numpy as np
import pytest

from conftest import RandomTensorField, jittered_square_mesh
from symhdiv import polybasis as pb
from symhdiv.exact import ExactSolution
from symhdiv.interp import (DiscreteField, SmoothField, _div_moments, commuting_residual, div_coefficients,
                            interp_Ih, interp_Ihb, interp_Pih, project_Qh, projection_residual,
                            stress_L2_error)
from symhdiv.mesh import uniform_square_mesh
from symhdiv.quadrature import quad_simplex, to_cartesian
from symhdiv.spaces import DisplacementSpace, StressSpace

EXACT = ExactSolution(1.0)
SIGMA = SmoothField(EXACT.sigma, "tensor", EXACT.div_sigma)


def _spaces(mesh, variant="full"):
    space = StressSpace(mesh, variant)
    return space, DisplacementSpace(mesh, variant, space.geom)


def _quadratic_field(rng):
    c = rng.standard_normal((3, 6))  # coefficients of 1, x, y, x^2, xy, y^2

    def comp(k, x):
        X, Y = x[..., 0], x[..., 1]
        return np.einsum("k,k...->...", c[k], np.stack([np.ones_like(X), X, Y, X * X, X * Y, Y * Y]))

    def func(x):
        out = np.empty(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = comp(0, x)
        out[..., 1, 1] = comp(1, x)
        out[..., 0, 1] = out[..., 1, 0] = comp(2, x)
        return out
    return func


def _values_at_random_points(space, field, rng, n=4):
    bpts = rng.dirichlet(np.ones(3), size=n)
    vals = np.moveaxis(pb.evaluate(field.local(), bpts, 2), -1, 1)
    return vals, to_cartesian(bpts, space.geom.vertices)


def test_Qh_reproduces_affine_and_rigid_motions():
    mesh = uniform_square_mesh(3)
    vspace = DisplacementSpace(mesh, "full")
    aff = lambda x: np.stack([1 + 2 * x[..., 0] - x[..., 1], 0.5 * x[..., 1] - 3], axis=-1)  # noqa: E731
    Q = project_Qh(vspace, aff)
    rng = np.random.default_rng(0)
    bpts = rng.dirichlet(np.ones(3), size=5)
    vals = np.moveaxis(pb.evaluate(Q.local(), bpts, 2), -1, 1)
    np.testing.assert_allclose(vals, aff(to_cartesian(bpts, vspace.geom.vertices)), atol=1e-13)
    rspace = DisplacementSpace(mesh, "reduced")
    rot = lambda x: np.stack([-x[..., 1], x[..., 0]], axis=-1)  # noqa: E731
    Qr = project_Qh(rspace, rot)
    vals = np.moveaxis(pb.evaluate(Qr.local(), bpts, 2), -1, 1)
    np.testing.assert_allclose(vals, rot(to_cartesian(bpts, rspace.geom.vertices)), atol=1e-13)


def test_Qh_orthogonality_and_idempotence():
    vspace = DisplacementSpace(uniform_square_mesh(4), "full")
    Q = project_Qh(vspace, EXACT.u)
    assert projection_residual(vspace, EXACT.u, Q) < 1e-12
    QQ = project_Qh(vspace, Q)
    np.testing.assert_allclose(QQ.coef, Q.coef, atol=1e-13)


def test_Ih_reproduces_global_quadratics():
    rng = np.random.default_rng(1)
    mesh = jittered_square_mesh(3, rng)
    space = StressSpace(mesh, "full")
    tau = _quadratic_field(rng)
    res = interp_Ih(space, tau)
    assert res.mismatch < 1e-12
    vals, xs = _values_at_random_points(space, res.field, rng)
    np.testing.assert_allclose(vals, tau(xs), atol=1e-11)
    Pi = interp_Pih(space, tau)
    vals, xs = _values_at_random_points(space, Pi, rng)
    np.testing.assert_allclose(vals, tau(xs), atol=1e-11)


def _rm_moments_of_div(space, field_or_div):
    """(div tau, r)_K for r in {(1,0), (0,1), (-(y-yc), x-xc)} by cell quadrature."""
    rule = quad_simplex(2, 16)
    geom = space.geom
    if isinstance(field_or_div, DiscreteField):
        d = np.moveaxis(pb.evaluate(div_coefficients(field_or_div), rule.points, 2), -1, 1)
    else:
        d = field_or_div(to_cartesian(rule.points, geom.vertices))
    x = to_cartesian(rule.points, geom.vertices) - geom.barycenter()[:, None, :]
    r = np.stack([np.broadcast_to([1.0, 0.0], x.shape), np.broadcast_to([0.0, 1.0], x.shape),
                  np.stack([-x[..., 1], x[..., 0]], axis=-1)], axis=1)  # (T, 3, q, 2)
    w = geom.measure[:, None] * rule.weights
    return np.einsum("tq,tqc,trqc->tr", w, d, r)


def test_Ih_preserves_rigid_motion_moments_of_divergence():
    # h = 1/8 keeps the edge-quadrature error of the trigonometric moments near roundoff
    space = StressSpace(uniform_square_mesh(8), "full")
    Ih = interp_Ih(space, SIGMA).field
    a = _rm_moments_of_div(space, EXACT.div_sigma)
    b = _rm_moments_of_div(space, Ih)
    assert np.abs(a - b).max() < 1e-12 * np.abs(a).max()


def test_Ih_error_order_three():
    errs = []
    for lv in (2, 3, 4, 5):
        space = StressSpace(uniform_square_mesh(2 ** lv), "full")
        errs.append(stress_L2_error(space, SIGMA, interp_Ih(space, SIGMA).field))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders[-1] == pytest.approx(3.0, abs=0.2)


def test_Ihb_vanishes_for_divergence_free_fields():
    # airy of phi = sin(x) cos(2y) is divergence free
    def airy(x):
        X, Y = x[..., 0], x[..., 1]
        out = np.empty(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = -4 * np.sin(X) * np.cos(2 * Y)   # phi_yy
        out[..., 1, 1] = -np.sin(X) * np.cos(2 * Y)       # phi_xx
        out[..., 0, 1] = out[..., 1, 0] = 2 * np.cos(X) * np.sin(2 * Y)  # -phi_xy
        return out
    space = StressSpace(uniform_square_mesh(3), "full")
    corr = interp_Ihb(space, airy)
    assert np.abs(corr.coef).max() < 1e-12


def test_Ihb_matches_divergence_moments():
    rng = np.random.default_rng(2)
    space = StressSpace(jittered_square_mesh(3, rng), "full")
    tau = RandomTensorField(rng)
    corr = interp_Ihb(space, tau)
    a = _div_moments(space, tau)
    b = _div_moments(space, corr)
    assert np.abs(a - b).max() < 1e-11 * np.abs(a).max()
    # and the correction has no rigid-motion divergence moments
    assert np.abs(_rm_moments_of_div(space, corr)).max() < 1e-12 * np.abs(a).max()


def test_Ihb_scaling_constant_bounded():
    rng = np.random.default_rng(3)
    tau = RandomTensorField(rng)
    consts = []
    for n in (2, 4, 8, 16):
        space = StressSpace(jittered_square_mesh(n, rng), "full")
        corr = interp_Ihb(space, tau)
        rule = quad_simplex(2, 16)
        geom = space.geom
        w = geom.measure[:, None] * rule.weights
        vals = np.moveaxis(pb.evaluate(corr.local(), rule.points, 2), -1, 1)
        num = np.sqrt(np.einsum("tq,tqab,tqab->t", w, vals, vals))
        dv = tau.div(to_cartesian(rule.points, geom.vertices))
        den = geom.diameter * np.sqrt(np.einsum("tq,tqc,tqc->t", w, dv, dv))
        consts.append(float(np.max(num / den)))
    assert max(consts) < 1.0
    assert max(consts) / min(consts) < 3.0


def test_Pih_commutes_on_exact_stress():
    mesh = uniform_square_mesh(8)
    space, vspace = _spaces(mesh)
    res, Pi = commuting_residual(space, vspace, SIGMA, EXACT.div_sigma)
    assert res < 1e-10
    x, mismatch = space.assemble_dofs(space.local_dofs(Pi.local()))
    assert mismatch < 1e-12
    np.testing.assert_allclose(x, Pi.coef, atol=1e-10 * np.abs(Pi.coef).max())


@pytest.mark.parametrize("seed", range(3))
def test_Pih_commutes_on_random_fields(seed):
    rng = np.random.default_rng(100 + seed)
    mesh = jittered_square_mesh(4, rng)
    space, vspace = _spaces(mesh)
    tau = RandomTensorField(rng)
    res, _ = commuting_residual(space, vspace, tau, tau.div)
    assert res < 1e-9


def test_Pih_error_order_three():
    errs = [stress_L2_error(s, SIGMA, interp_Pih(s, SIGMA))
            for s in (StressSpace(uniform_square_mesh(2 ** lv), "full") for lv in (3, 4, 5))]
    assert math.log2(errs[-2] / errs[-1]) == pytest.approx(3.0, abs=0.2)


def test_discrete_field_checks_length():
    space = StressSpace(uniform_square_mesh(1), "full")
    with pytest.raises(ValueError):
        DiscreteField(space, np.zeros(3))
    assert DiscreteField(space, np.zeros(space.dim)).tag == "Sigma_h"
