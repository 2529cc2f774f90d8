import math

import numpy as np
import pytest

from symhdiv import polybasis as pb
from symhdiv.discrete_complex import divergence_matrix, numerical_rank
from symhdiv.exact import ExactSolution
from symhdiv.interp import project_Qh
from symhdiv.mesh import uniform_square_mesh
from symhdiv.quadrature import quad_simplex, to_cartesian
from symhdiv.solver import (Material, assemble, compliance_apply, error_norms, run_level, solve,
                            trace_functional)
from symhdiv.spaces import DisplacementSpace, StressSpace

EXACT = ExactSolution(1.0)


def _spaces(n, variant):
    mesh = uniform_square_mesh(n)
    space = StressSpace(mesh, variant)
    return space, DisplacementSpace(mesh, variant, space.geom)


def test_compliance_examples():
    I = np.eye(2)
    np.testing.assert_allclose(compliance_apply(Material(1.0, math.inf), I), 0.0, atol=1e-15)
    np.testing.assert_allclose(compliance_apply(Material(1.0, 1.0), I), I / 4)
    dev = np.array([[1.0, 2.0], [2.0, -1.0]])
    for lam in (1.0, 1e3, math.inf):
        np.testing.assert_allclose(compliance_apply(Material(1.0, lam), dev), dev / 2)


def test_material_rejects_bad_parameters():
    with pytest.raises(ValueError):
        Material(1.0, -1.0)
    with pytest.raises(ValueError):
        Material(0.0, 1.0)


@pytest.mark.parametrize("variant", ["full", "reduced"])
def test_zero_load_gives_zero_solution(variant):
    space, vspace = _spaces(2, variant)
    system = assemble(space, vspace, Material(1.0, 1.0), lambda x: np.zeros(x.shape))
    sigma, u = solve(system)
    assert np.abs(sigma).max() == 0 and np.abs(u).max() == 0


@pytest.mark.parametrize("variant", ["full", "reduced"])
@pytest.mark.parametrize("n", [1, 2, 4])
def test_divergence_surjective(variant, n):
    space, vspace = _spaces(n, variant)
    rank, _ = numerical_rank(divergence_matrix(space, vspace))
    assert rank == vspace.dim


@pytest.mark.parametrize("variant", ["full", "reduced"])
def test_discrete_divergence_equals_minus_projected_load(variant):
    space, vspace = _spaces(4, variant)
    system = assemble(space, vspace, Material(1.0, 1.0), EXACT.f)
    sigma, _ = solve(system)
    div = np.einsum("tl,tlcn->tcn", space.dofmap.gather(sigma), space.div_coef)
    Qf = project_Qh(vspace, EXACT.f)
    target = -pb.elevate(vspace.local(Qf.coef), 2, 2)
    assert np.abs(div - target).max() < 1e-9 * np.abs(target).max()


def test_residual_small():
    space, vspace = _spaces(2, "full")
    system = assemble(space, vspace, Material(1.0, 1.0), EXACT.f)
    sigma, u = solve(system)
    x = np.concatenate([sigma, u])
    assert np.linalg.norm(system.K @ x - system.rhs) < 1e-10 * np.linalg.norm(system.rhs)


def _constant_identity(space):
    tau = np.zeros((space.mesh.n_cells, 2, 2, 1))
    tau[:, 0, 0] = tau[:, 1, 1] = 1.0
    x, mismatch = space.assemble_dofs(space.local_dofs(pb.elevate(tau, 2, 3)))
    assert mismatch < 1e-13
    return x


def test_infinite_lambda_null_vector_without_border():
    space, vspace = _spaces(2, "full")
    system = assemble(space, vspace, Material(1.0, math.inf), EXACT.f, border=False)
    x = np.concatenate([_constant_identity(space), np.zeros(vspace.dim)])
    assert np.abs(system.K @ x).max() < 1e-12
    bordered = assemble(space, vspace, Material(1.0, math.inf), EXACT.f)
    assert bordered.bordered and bordered.K.shape[0] == system.K.shape[0] + 1


def test_infinite_lambda_solution_has_zero_mean_trace():
    space, vspace = _spaces(2, "full")
    system = assemble(space, vspace, Material(1.0, math.inf), EXACT.f)
    sigma, _ = solve(system)
    assert abs(trace_functional(space) @ sigma) < 1e-10


def test_stress_matrix_symmetric_and_psd():
    space, vspace = _spaces(2, "full")
    for lam in (1.0, math.inf):
        system = assemble(space, vspace, Material(1.0, lam), EXACT.f)
        A = system.A
        assert abs(A - A.T).max() == 0
        ev = np.linalg.eigvalsh(A.toarray())
        assert ev.min() > -1e-12 * ev.max()
        if lam == 1.0:
            assert ev.min() > 0


def test_galerkin_orthogonality_independent_quadrature():
    """Re-evaluate both equations with point quadrature, not the assembled blocks."""
    space, vspace = _spaces(2, "full")
    mat = Material(1.0, 1.0)
    system = assemble(space, vspace, mat, EXACT.f)
    sigma, u = solve(system)
    rule = quad_simplex(2, 12)
    geom = space.geom
    w = geom.measure[:, None] * rule.weights  # (T, q)
    sig = np.moveaxis(pb.evaluate(space.local(sigma), rule.points, 2), -1, 1)  # (T, q, 2, 2)
    Asig = compliance_apply(mat, sig)
    uh = np.moveaxis(pb.evaluate(vspace.local(u), rule.points, 2), -1, 1)  # (T, q, 2)
    phi = np.moveaxis(pb.evaluate(space.basis.coef, rule.points, 2), -1, 2)  # (T, l, q, 2, 2)
    dphi = np.moveaxis(pb.evaluate(space.div_coef, rule.points, 2), -1, 2)  # (T, l, q, 2)
    local = (np.einsum("tq,tqab,tlqab->tl", w, Asig, phi) + np.einsum("tq,tqc,tlqc->tl", w, uh, dphi))
    r1 = np.zeros(space.dim)
    np.add.at(r1, space.dofmap.cell_dofs, local * space.dofmap.signs)
    rule16 = quad_simplex(2, 16)
    fq = EXACT.f(to_cartesian(rule16.points, geom.vertices))
    w16 = geom.measure[:, None] * rule16.weights
    div16 = np.moveaxis(pb.evaluate(np.einsum("tl,tlcn->tcn", space.dofmap.gather(sigma), space.div_coef),
                                    rule16.points, 2), -1, 1)
    psi = np.moveaxis(pb.evaluate(vspace.basis, rule16.points, 2), -1, 2)  # (T, l, q, 2)
    r2 = np.einsum("tq,tqc,tlqc->tl", w16, div16 + fq, psi)
    scale = np.abs(fq).max() * geom.measure.max()
    assert np.abs(r1).max() < 1e-9
    assert np.abs(r2).max() < 1e-9 * scale


def test_projected_displacement_has_zero_seminorm_error():
    space, vspace = _spaces(4, "full")
    u_h = project_Qh(vspace, EXACT.u).coef
    sigma_h = np.zeros(space.dim)
    rep = error_norms(space, vspace, sigma_h, u_h, EXACT)
    assert rep.Qhu_1h < 1e-14 and rep.Qhu_L2 < 1e-14


def test_table_values_level3_full_and_level4_reduced():
    rep, _ = run_level(uniform_square_mesh(8), "full", Material(1.0, 1.0), EXACT)
    assert rep.sigma_L2 == pytest.approx(7.5474e-02, rel=0.02)
    rep, _ = run_level(uniform_square_mesh(16), "reduced", Material(1.0, 1.0), EXACT)
    assert rep.Qhu_L2 == pytest.approx(5.1084e-03, rel=0.02)


def _sig4(x):
    return float(f"{x:.3e}")


@pytest.mark.parametrize("variant", ["full", "reduced"])
def test_large_lambda_matches_infinite_lambda(variant):
    mesh = uniform_square_mesh(8)
    a, _ = run_level(mesh, variant, Material(1.0, 1e6), EXACT)
    b, _ = run_level(mesh, variant, Material(1.0, math.inf), EXACT)
    for col in ("sigma_L2", "Qhu_L2", "Qhu_1h"):
        assert _sig4(getattr(a, col)) == _sig4(getattr(b, col))


def test_lambda_robust_stress_error():
    mesh = uniform_square_mesh(8)
    errs = [run_level(mesh, "full", Material(1.0, lam), EXACT)[0].sigma_L2 for lam in (1.0, 1e3, 1e6, math.inf)]
    assert (max(errs) - min(errs)) / min(errs) < 0.05


def test_exact_solution_divergence_free():
    rng = np.random.default_rng(0)
    x = rng.uniform(size=(10_000, 2))
    assert np.abs(EXACT.div_u(x)).max() < 1e-12
    s = EXACT.sigma(x)
    np.testing.assert_allclose(s, np.swapaxes(s, -1, -2))
    assert np.abs(np.trace(s, axis1=-2, axis2=-1)).max() < 1e-12


def test_exact_load_symbolic():
    sp = pytest.importorskip("sympy")
    X, Y, mu = sp.symbols("x y mu")
    u = sp.Matrix([sp.pi * sp.sin(sp.pi * X) ** 2 * sp.sin(sp.pi * Y) * sp.cos(sp.pi * Y),
                   -sp.pi * sp.sin(sp.pi * X) * sp.cos(sp.pi * X) * sp.sin(sp.pi * Y) ** 2])
    grad = u.jacobian([X, Y])
    sigma = mu * (grad + grad.T)
    f = -sp.Matrix([sp.diff(sigma[0, 0], X) + sp.diff(sigma[0, 1], Y),
                    sp.diff(sigma[1, 0], X) + sp.diff(sigma[1, 1], Y)])
    fn = sp.lambdify((X, Y, mu), f, "numpy")
    sn = sp.lambdify((X, Y, mu), sigma, "numpy")
    pts = np.random.default_rng(1).uniform(size=(50, 2))
    ex = ExactSolution(2.5)
    for p in pts:
        np.testing.assert_allclose(np.asarray(fn(*p, 2.5), float).ravel(), ex.f(p), atol=1e-11)
        np.testing.assert_allclose(np.asarray(sn(*p, 2.5), float), ex.sigma(p), atol=1e-11)


def test_exact_load_finite_difference():
    x = np.random.default_rng(2).uniform(0.1, 0.9, size=(20, 2))
    h = 1e-3
    # fourth-order central differences of sigma
    def d(axis):
        e = np.zeros(2)
        e[axis] = h
        return (-EXACT.sigma(x + 2 * e) + 8 * EXACT.sigma(x + e) - 8 * EXACT.sigma(x - e)
                + EXACT.sigma(x - 2 * e)) / (12 * h)
    div = d(0)[:, :, 0] + d(1)[:, :, 1]
    assert np.abs(div + EXACT.f(x)).max() < 1e-8
