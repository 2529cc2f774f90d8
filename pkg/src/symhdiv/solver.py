"""Assembly, solution and error evaluation for the mixed elasticity scheme.

Find ``(sigma_h, u_h)`` in ``Sigma_h x V_h`` with

    (A sigma_h, tau) + (div tau, u_h) = 0
    (div sigma_h, v)                  = -(f, v)

The compliance ``A`` degenerates to a scaled deviatoric projector at
``lambda = inf``; then ``(I, 0)`` solves the homogeneous system and the
matrix is bordered with one multiplier that fixes ``int tr sigma_h = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from . import polybasis as pb
from .mesh import SimplicialMesh
from .quadrature import gauss_line, quad_simplex, to_cartesian
from .spaces import DisplacementSpace, StressSpace

INF = math.inf


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Material:
    mu: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.lam > 0:
            raise ValueError("lambda must be positive or inf")

    def trace_coefficient(self, d: int = 2) -> float:
        """``lambda / (d lambda + 2 mu)``, and its limit ``1/d``."""
        if math.isinf(self.lam):
            return 1.0 / d
        return self.lam / (d * self.lam + 2 * self.mu)


def compliance_apply(material: Material, sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, float)
    d = sigma.shape[-1]
    tr = np.trace(sigma, axis1=-2, axis2=-1)[..., None, None]
    return (sigma - material.trace_coefficient(d) * tr * np.eye(d)) / (2 * material.mu)


@dataclass
class SaddleSystem:
    K: sps.csc_matrix
    rhs: np.ndarray
    n_sigma: int
    n_u: int
    bordered: bool
    A: sps.csr_matrix = field(repr=False)
    B: sps.csr_matrix = field(repr=False)
    residual: float = math.nan


def _scatter(rows: np.ndarray, cols: np.ndarray, vals: np.ndarray, shape) -> sps.csr_matrix:
    R = np.broadcast_to(rows[:, :, None], vals.shape).ravel()
    C = np.broadcast_to(cols[:, None, :], vals.shape).ravel()
    return sps.coo_matrix((vals.ravel(), (R, C)), shape=shape).tocsr()


def local_stress_mass(space: StressSpace, material: Material) -> np.ndarray:
    """``(A phi_l, phi_k)_K`` for all cells, ``(T, nloc, nloc)``."""
    coef = space.basis.coef
    G = pb.gram(2, 3, 3)
    X = coef @ G  # (T, l, a, b, m)
    full = np.einsum("tkabm,tlabm->tkl", coef, X)
    tr = np.einsum("tkaam->tkm", coef)
    trX = np.einsum("tlaam->tlm", X)
    trace = np.einsum("tkm,tlm->tkl", tr, trX)
    c = material.trace_coefficient(2)
    M = space.geom.measure[:, None, None] * (full - c * trace) / (2 * material.mu)
    return 0.5 * (M + np.swapaxes(M, 1, 2))


def local_divergence(space: StressSpace, vspace: DisplacementSpace) -> np.ndarray:
    """``(div phi_l, v_m)_K``, ``(T, nv, nloc)``."""
    G = pb.gram(2, 2, 1)
    return space.geom.measure[:, None, None] * np.einsum(
        "tlcn,nm,tvcm->tvl", space.div_coef, G, vspace.basis)


def load_vector(vspace: DisplacementSpace, f, degree: int = 16) -> np.ndarray:
    """``(f, v_m)`` for every displacement basis function, global vector."""
    rule = quad_simplex(2, degree)
    geom = vspace.geom
    pts = to_cartesian(rule.points, geom.vertices)  # (T, q, 2)
    fv = f(pts)
    phi = pb.evaluate(vspace.basis, rule.points, 2)  # (T, nv, 2, q)
    loc = geom.measure[:, None] * np.einsum("tvcq,tqc,q->tv", phi, fv, rule.weights)
    out = np.zeros(vspace.dim)
    np.add.at(out, vspace.dofmap.cell_dofs, loc)
    return out


def trace_functional(space: StressSpace) -> np.ndarray:
    """``int_Omega tr phi_l`` for each global stress basis function."""
    w = pb.mean_weights(2, 3)
    loc = space.geom.measure[:, None] * np.einsum("tlaan,n->tl", space.basis.coef, w)
    out = np.zeros(space.dim)
    np.add.at(out, space.dofmap.cell_dofs, loc * space.dofmap.signs)
    return out


def assemble(space: StressSpace, vspace: DisplacementSpace, material: Material, f,
             quad_degree: int = 16, border: bool | None = None) -> SaddleSystem:
    """Build the (possibly bordered) saddle-point matrix and right-hand side."""
    if border is None:
        border = math.isinf(material.lam)
    sd, vd = space.dofmap, vspace.dofmap
    Aloc = local_stress_mass(space, material)
    Aloc = Aloc * sd.signs[:, :, None] * sd.signs[:, None, :]
    A = _scatter(sd.cell_dofs, sd.cell_dofs, Aloc, (sd.n_dofs, sd.n_dofs))
    A = (0.5 * (A + A.T)).tocsr()
    Bloc = local_divergence(space, vspace) * sd.signs[:, None, :]
    B = _scatter(vd.cell_dofs, sd.cell_dofs, Bloc, (vd.n_dofs, sd.n_dofs))
    blocks = [[A, B.T], [B, None]]
    rhs = [np.zeros(sd.n_dofs), -load_vector(vspace, f, quad_degree)]
    if border:
        c = sps.csr_matrix(trace_functional(space)[None, :])
        blocks = [[A, B.T, c.T], [B, None, None], [c, None, None]]
        rhs.append(np.zeros(1))
    K = sps.bmat(blocks, format="csc")
    return SaddleSystem(K, np.concatenate(rhs), sd.n_dofs, vd.n_dofs, border, A, B)


def solve(system: SaddleSystem, tol: float = 1e-10, delta: float = 1e-8,
          max_refine: int = 30) -> tuple[np.ndarray, np.ndarray]:
    """Direct solve of the saddle-point system.

    The matrix is shifted to the quasi-definite form ``[[A + d I, B^T], [B, -d I]]``
    with ``d = delta * max diag(A)``, which can be factorized with a symmetric
    fill-reducing ordering and no pivoting. Iterative refinement against the
    unshifted matrix then removes the shift from the solution.
    """
    K = system.K
    n = K.shape[0]
    shift = delta * float(np.abs(system.A.diagonal()).max())
    sign = np.ones(n)
    sign[system.n_sigma:] = -1.0
    Kr = (K + sps.diags(shift * sign)).tocsc()
    try:
        lu = spla.splu(Kr, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                       options=dict(SymmetricMode=True))
    except RuntimeError as exc:
        raise SolverError(f"factorization failed: {exc}") from exc
    bnorm = np.linalg.norm(system.rhs)
    bnorm = bnorm if bnorm > 0 else 1.0
    x = lu.solve(system.rhs)
    x = _refine(K, lu, system.rhs, x, bnorm, tol, max_refine)
    res = np.linalg.norm(system.rhs - K @ x) / bnorm
    if res > tol:
        # the shift is too large relative to the smallest modes of A (nearly
        # incompressible materials): use the factorization as a preconditioner
        M = spla.LinearOperator(K.shape, matvec=lu.solve)
        x, _ = spla.gmres(K, system.rhs, x0=x, M=M, rtol=1e-3 * tol, atol=0.0,
                          restart=50, maxiter=20)
        x = _refine(K, lu, system.rhs, x, bnorm, tol, max_refine)
        res = np.linalg.norm(system.rhs - K @ x) / bnorm
    system.residual = float(res)
    if not np.isfinite(res) or res > tol:
        raise SolverError(f"relative residual {res:.3e} exceeds {tol:g}")
    return x[:system.n_sigma], x[system.n_sigma:system.n_sigma + system.n_u]


def _refine(K, lu, b, x, bnorm, tol, steps):
    """Iterative refinement; stops once the residual is below tol and stagnates."""
    best, best_x = np.inf, x
    for _ in range(steps):
        r = b - K @ x
        res = np.linalg.norm(r) / bnorm
        if not np.isfinite(res):
            break
        if res < best:
            best, best_x = res, x
        elif res > 0.5 * best:
            break
        if res < 1e-3 * tol:
            break
        x = x + lu.solve(r)
    return best_x


# ---------------------------------------------------------------------------
# errors


@dataclass
class ErrorReport:
    h: float
    sigma_L2: float
    sigma_0h: float
    sigma_Hdiv: float
    u_L2: float
    Qhu_L2: float
    Qhu_1h: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def project_local(vspace: DisplacementSpace, u, degree: int = 16) -> np.ndarray:
    """Local coefficients ``(T, nloc)`` of the elementwise L2 projection of ``u``."""
    rule = quad_simplex(2, degree)
    geom = vspace.geom
    pts = to_cartesian(rule.points, geom.vertices)
    phi = pb.evaluate(vspace.basis, rule.points, 2)
    rhs = geom.measure[:, None] * np.einsum("tvcq,tqc,q->tv", phi, u(pts), rule.weights)
    return np.linalg.solve(vspace.mass, rhs[..., None])[..., 0]


def _strain_of_linear(vpoly: np.ndarray, geom) -> np.ndarray:
    """Constant symmetric gradient ``(T, 2, 2)`` of linear vector polys ``(T, 2, 3)``."""
    g = np.einsum("tci,tid->tcd", vpoly, geom.grad_lambda)
    return 0.5 * (g + np.swapaxes(g, 1, 2))


def broken_h1(vspace: DisplacementSpace, w_local: np.ndarray) -> float:
    """``|w|_{1,h}`` of a piecewise linear field given by local coefficients.

    Jumps are taken on every edge; on boundary edges the jump is the trace.
    """
    mesh, geom = vspace.mesh, vspace.geom
    poly = np.einsum("tl,tlcn->tcn", w_local, vspace.basis)
    eps = _strain_of_linear(poly, geom)
    total = np.sum(geom.measure * np.einsum("tab,tab->t", eps, eps))
    rule = gauss_line(4)
    V = mesh.vertices
    # trace of each cell on each of its edges, parametrized from the lower global vertex
    acc = np.zeros((mesh.n_edges, len(rule), 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        gj, gk = mesh.cells[:, j], mesh.cells[:, k]
        lo_is_j = gj < gk
        bpts = np.zeros((mesh.n_cells, len(rule), 3))
        s0, s1 = rule.points[:, 0], rule.points[:, 1]
        bpts[:, :, j] = np.where(lo_is_j[:, None], s0, s1)
        bpts[:, :, k] = np.where(lo_is_j[:, None], s1, s0)
        vals = np.einsum("tcn,tqn->tqc", poly, bpts)  # linear: monomials are lambda_n
        e = mesh.cell_edges[:, i]
        owner_first = mesh.face_cells[e, 0] == np.arange(mesh.n_cells)
        sgn = np.where(owner_first, 1.0, -1.0)[:, None, None]
        np.add.at(acc, e, sgn * vals)
    ends = mesh.edges
    length = np.linalg.norm(V[ends[:, 1]] - V[ends[:, 0]], axis=1)
    jump2 = np.einsum("eqc,eqc,q->e", acc, acc, rule.weights) * length
    total += np.sum(jump2 / length)
    return float(np.sqrt(total))


def error_norms(space: StressSpace, vspace: DisplacementSpace, sigma_h: np.ndarray, u_h: np.ndarray,
                exact, cell_degree: int = 16, face_degree: int = 10) -> ErrorReport:
    geom = space.geom
    mesh = space.mesh
    rule = quad_simplex(2, cell_degree)
    pts = to_cartesian(rule.points, geom.vertices)  # (T, q, 2)
    w = geom.measure[:, None] * rule.weights[None, :]

    tau = space.local(sigma_h)  # (T, 2, 2, 10)
    sh = np.moveaxis(pb.evaluate(tau, rule.points, 2), -1, 1)  # (T, q, 2, 2)
    es = exact.sigma(pts) - sh
    sigma_L2 = np.sqrt(np.sum(w * np.einsum("tqab,tqab->tq", es, es)))

    divh = np.moveaxis(pb.evaluate(_local_div(space, sigma_h), rule.points, 2), -1, 1)
    ed = exact.div_sigma(pts) - divh
    div_L2sq = np.sum(w * np.einsum("tqc,tqc->tq", ed, ed))

    # face term of ||.||_{0,h}: sum_F h_F ||(sigma - sigma_h) n||_F^2, from the first owner
    frule = gauss_line(face_degree)
    face_sq = 0.0
    for i in range(3):
        e = mesh.cell_edges[:, i]
        own = mesh.face_cells[e, 0] == np.arange(mesh.n_cells)
        if not np.any(own):
            continue
        j, k = (i + 1) % 3, (i + 2) % 3
        bpts = np.zeros((len(frule), 3))
        bpts[:, j], bpts[:, k] = frule.points[:, 0], frule.points[:, 1]
        xp = to_cartesian(bpts, geom.vertices[own])
        vals = np.moveaxis(pb.evaluate(tau[own], bpts, 2), -1, 1)
        n = space.frames.normal[own, i]
        r = np.einsum("tqab,tb->tqa", exact.sigma(xp) - vals, n)
        hF = geom.face_measure[own, i]
        face_sq += np.sum(hF * hF * np.einsum("tqa,tqa,q->t", r, r, frule.weights))
    sigma_0h = np.sqrt(sigma_L2 ** 2 + face_sq)

    uh = vspace.local(u_h)  # (T, 2, 3)
    uvals = np.moveaxis(pb.evaluate(uh, rule.points, 2), -1, 1)
    eu = exact.u(pts) - uvals
    u_L2 = np.sqrt(np.sum(w * np.einsum("tqc,tqc->tq", eu, eu)))

    Qu = project_local(vspace, exact.u, cell_degree)
    diff = Qu - vspace.dofmap.gather(u_h)
    Qhu_L2 = np.sqrt(np.sum(np.einsum("tk,tkl,tl->t", diff, vspace.mass, diff)))
    Qhu_1h = broken_h1(vspace, diff)
    h = float(geom.diameter.max())
    return ErrorReport(h, float(sigma_L2), float(sigma_0h), float(np.sqrt(sigma_L2 ** 2 + div_L2sq)),
                       float(u_L2), float(Qhu_L2), Qhu_1h)


def _local_div(space: StressSpace, x: np.ndarray) -> np.ndarray:
    return np.einsum("tl,tlcn->tcn", space.dofmap.gather(x), space.div_coef)


@dataclass
class StudyResult:
    level: int
    report: ErrorReport
    n_sigma: int
    n_u: int
    residual: float


def run_level(mesh: SimplicialMesh, variant: str, material: Material, exact,
              cell_degree: int = 16, face_degree: int = 10):
    """Assemble, solve and measure one mesh; returns the report and the solution."""
    space = StressSpace(mesh, variant)
    vspace = DisplacementSpace(mesh, variant, space.geom)
    system = assemble(space, vspace, material, exact.f, cell_degree)
    sigma_h, u_h = solve(system)
    report = error_norms(space, vspace, sigma_h, u_h, exact, cell_degree, face_degree)
    return report, (space, vspace, system, sigma_h, u_h)
