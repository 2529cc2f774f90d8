"""Element-local construction of the stress elements on d-simplices, d >= 3.

The full space is ``P2(K; S) + B^nn`` where the normal-normal face bubbles are
found as null spaces: inside ``b_F P1(F) n n^T + sum_{i<j} l_i l_j P_{d-1} t_ij t_ij^T``
we impose that the interior DoFs vanish, namely ``div tau`` orthogonal to
``P_d / RM`` and ``tau`` orthogonal to ``ker(. x) ∩ P_{d-1}(K; S)``.
The reduced space is the subspace of the full one with ``div tau in RM`` and
affine normal-normal components on every edge.

Everything is built for a single cell. Polynomials are full ``(d, d, N)``
coefficient blocks of degree ``d + 1``. Only d = 3 is exercised.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from . import polybasis as pb
from .mesh import CellGeom, build_geometry, build_mesh, entity_frames
from .quadrature import gauss_line

SVD_TOL = 1e-9


class ConstructionError(RuntimeError):
    def __init__(self, message: str, singular_values=None):
        super().__init__(message)
        self.singular_values = singular_values


def null_space(C: np.ndarray, expected: int | None = None, what: str = "") -> np.ndarray:
    """Orthonormal null-space basis (columns) with relative threshold ``SVD_TOL``."""
    Cn = C / np.maximum(np.linalg.norm(C, axis=1, keepdims=True), 1e-300)
    _, s, vh = np.linalg.svd(Cn)
    smax = s[0] if s.size else 1.0
    rank = int(np.sum(s > SVD_TOL * smax))
    Z = vh[rank:].T
    if expected is not None and Z.shape[1] != expected:
        raise ConstructionError(f"{what}: null space has dimension {Z.shape[1]}, expected {expected}", s)
    return Z


# ---------------------------------------------------------------------------
# cells and frames


@dataclass(frozen=True)
class Cell:
    """A single simplex with its geometry and entity-owned frames, indexed locally."""

    geom: CellGeom
    edges: list  # local vertex pairs, sorted by global index
    faces: list  # face i opposite vertex i, local vertex tuples sorted by global index
    face_normal: np.ndarray  # (d+1, d)
    face_tangents: np.ndarray  # (d+1, d-1, d)
    edge_tangent: np.ndarray  # (nE, d)
    edge_normals: np.ndarray  # (nE, d-1, d)

    @property
    def d(self) -> int:
        return self.geom.d


def make_cell(vertices) -> Cell:
    vertices = np.asarray(vertices, float)
    d = vertices.shape[1]
    if d != 3:
        raise ValueError("frames are provided for d = 3 only")
    mesh = build_mesh(vertices, [list(range(d + 1))])
    geom = build_geometry(mesh, 0)
    fr = entity_frames(mesh)
    loc = {int(g): i for i, g in enumerate(mesh.cells[0])}
    edges = [tuple(loc[int(g)] for g in mesh.edges[e]) for e in mesh.cell_edges[0]]
    faces = [tuple(loc[int(g)] for g in mesh.faces[f]) for f in mesh.cell_faces[0]]
    return Cell(geom, edges, faces, fr.face_normal[mesh.cell_faces[0]],
                fr.face_tangent[mesh.cell_faces[0]], fr.edge_tangent[mesh.cell_edges[0]],
                fr.edge_normals[mesh.cell_edges[0]])


def random_tetrahedron(rng: np.random.Generator, jitter: float = 0.25, min_quality: float = 0.2) -> np.ndarray:
    """Perturbed regular tetrahedron with a bounded shape-regularity ratio."""
    base = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float) / np.sqrt(8.0)
    while True:
        v = base + jitter * rng.standard_normal(base.shape)
        vol = abs(np.linalg.det(v[1:] - v[0])) / 6.0
        h = max(np.linalg.norm(v[i] - v[j]) for i, j in combinations(range(4), 2))
        # ratio against the regular tetrahedron of the same diameter
        if vol / (h ** 3 / (6 * np.sqrt(2))) > min_quality:
            return v


# ---------------------------------------------------------------------------
# polynomial helpers


def _deg(d: int) -> int:
    return d + 1


def _n(d: int, k: int | None = None) -> int:
    return pb.n_monomials(d, _deg(d) if k is None else k)


def _lam_prod(d: int, idx, k: int) -> np.ndarray:
    alpha = [0] * (d + 1)
    for i in idx:
        alpha[i] += 1
    return pb.elevate(pb.monomial(alpha), d, k)


def _outer(u, v):
    return np.multiply.outer(u, v)


def _sym(u, v):
    return 0.5 * (_outer(u, v) + _outer(v, u))


def _tensor(p: np.ndarray, M: np.ndarray) -> np.ndarray:
    return M[:, :, None] * p[None, None, :]


def linear_field(values_at_vertices: np.ndarray) -> np.ndarray:
    """Affine vector field from its vertex values ``(d+1, d)`` -> ``(d, d+1)`` coefficients."""
    return np.asarray(values_at_vertices, float).T.copy()


def rm_basis(geom: CellGeom, k: int) -> np.ndarray:
    """Rigid motions ``(n_rm, d, N_k)`` about the barycenter, degree-k coefficients."""
    d = geom.d
    rel = geom.vertices - geom.barycenter()
    out = []
    for c in range(d):
        out.append(np.zeros((d, d + 1)))
        out[-1][c] = 1.0
    for p, q in combinations(range(d), 2):
        vals = np.zeros((d + 1, d))
        vals[:, p] = rel[:, q]
        vals[:, q] = -rel[:, p]
        out.append(linear_field(vals))
    return pb.elevate(np.array(out), d, k)


def p2_sym_basis(d: int, k: int) -> np.ndarray:
    """Basis of ``P2(K; S)`` as ``(dim, d, d, N_k)``: monomial times symmetric unit."""
    out = []
    for alpha in pb.multi_indices(d, 2):
        m = pb.elevate(pb.monomial(alpha), d, k)
        for a, b in pb.vech_pairs(d):
            E = np.zeros((d, d))
            E[a, b] = E[b, a] = 1.0
            out.append(_tensor(m, E))
    return np.array(out)


def div_matrix(funcs: np.ndarray, geom: CellGeom) -> np.ndarray:
    """Divergence coefficients ``(m, d, N_{k-1})``."""
    g = pb.gradient(funcs, geom.grad_lambda, geom.d)
    return np.einsum("...abbn->...an", g)


def rm_complement_projector(geom: CellGeom, k: int) -> np.ndarray:
    """``I - P_RM`` acting on flattened degree-k vector coefficients (L2-orthogonal)."""
    d = geom.d
    G = np.kron(np.eye(d), pb.gram(d, k, k))
    R = rm_basis(geom, k).reshape(-1, d * _n(d, k)).T
    P = R @ np.linalg.solve(R.T @ G @ R, R.T @ G)
    return np.eye(len(G)) - P


def kernel_dot_x(geom: CellGeom) -> np.ndarray:
    """Basis of ``{q in P_{d-1}(K; S): q(x) (x - x_K) = 0}``, as ``(m, d, d, N_{d-1})``."""
    d = geom.d
    k = d - 1
    basis = _sym_basis_degree(d, k)
    xfield = linear_field(geom.vertices - geom.barycenter())  # (d, d+1)
    rows = []
    for f in basis:
        v = np.zeros((d, _n(d, k + 1)))
        for a in range(d):
            for b in range(d):
                v[a] += pb.multiply(f[a, b], xfield[b], d)
        rows.append(v.ravel())
    Z = null_space(np.array(rows).T, what="ker(.x)")
    return np.einsum("mj,mabn->jabn", Z, basis)


def _sym_basis_degree(d: int, k: int) -> np.ndarray:
    out = []
    for alpha in pb.multi_indices(d, k):
        m = pb.monomial(alpha)
        for a, b in pb.vech_pairs(d):
            E = np.zeros((d, d))
            E[a, b] = E[b, a] = 1.0
            out.append(_tensor(m, E))
    return np.array(out)


def interior_constraints(funcs: np.ndarray, geom: CellGeom) -> np.ndarray:
    """Rows: ``(div tau, q)`` for q spanning ``P_d / RM`` and ``(tau, q)`` for
    q in ``ker(. x) ∩ P_{d-1}(K; S)``. Columns: the candidate functions."""
    d = geom.d
    k = pb.degree_of(funcs.shape[-1], d)
    divs = div_matrix(funcs, geom).reshape(len(funcs), -1).T  # (d N_{k-1}, m)
    c1 = rm_complement_projector(geom, k - 1) @ divs
    Q = kernel_dot_x(geom)
    G = pb.gram(d, k, d - 1)
    c2 = np.einsum("mabn,nq,jabq->jm", funcs, G, Q)
    return np.vstack([c1, c2])


# ---------------------------------------------------------------------------
# face rigid motions


def nd0_face_basis(cell: Cell, f: int) -> np.ndarray:
    """Rigid motions of face ``f`` as tangential affine fields ``(dim, d, d+1)``:
    the tangents, then ``skw(t_a x t_b) (x - x_F)`` for ``a < b``."""
    d = cell.d
    T = cell.face_tangents[f]
    xF = cell.geom.vertices[list(cell.faces[f])].mean(axis=0)
    rel = cell.geom.vertices - xF
    out = []
    for a in range(d - 1):
        out.append(linear_field(np.tile(T[a], (d + 1, 1))))
    for a, b in combinations(range(d - 1), 2):
        S = 0.5 * (_outer(T[a], T[b]) - _outer(T[b], T[a]))
        out.append(linear_field(rel @ S.T))
    return np.array(out)


def face_projector(n: np.ndarray) -> np.ndarray:
    return np.eye(len(n)) - _outer(n, n)


def rm_face_residual(cell: Cell, f: int, npts: int = 12, seed: int = 0) -> float:
    """Largest least-squares residual of ``Pi_F r`` in the ND0(F) basis, r over RM."""
    d = cell.d
    pts = _face_points(cell, f, npts, seed)
    B = pb.evaluate(nd0_face_basis(cell, f), pts, d)  # (m, d, q)
    A = B.reshape(len(B), -1).T
    P = face_projector(cell.face_normal[f])
    worst = 0.0
    for r in rm_basis(cell.geom, 1):
        vals = P @ pb.evaluate(r, pts, d)  # (d, q)
        y = vals.ravel()
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        worst = max(worst, float(np.abs(A @ coef - y).max()))
    return worst


def _face_points(cell: Cell, f: int, npts: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(cell.d), size=npts)
    pts = np.zeros((npts, cell.d + 1))
    pts[:, list(cell.faces[f])] = w
    return pts


# ---------------------------------------------------------------------------
# face bubbles


def _face_bubble(d: int, face, k: int) -> np.ndarray:
    return _lam_prod(d, face, k)


def bubble_nn(cell: Cell, f: int) -> np.ndarray:
    """Basis of ``B_F^nn`` (``d`` functions), dual to the face nn-moments on ``F``."""
    d = cell.d
    k = _deg(d)
    geom = cell.geom
    n = cell.face_normal[f]
    face = cell.faces[f]
    cand = []
    bF = _face_bubble(d, face, d)
    for a in face:
        p = pb.multiply(bF, pb.bary(d, a), d)
        cand.append(_tensor(p, _outer(n, n)))
    cand += list(div_bubbles(geom, k))
    cand = np.array(cand)
    Z = null_space(interior_constraints(cand, geom), d, f"B_F^nn on face {f}")
    funcs = np.einsum("mj,mabn->jabn", Z, cand)
    M = face_nn_moments(cell, f, funcs)
    return np.einsum("mabn,ml->labn", funcs, np.linalg.inv(M))


def div_bubbles(geom: CellGeom, k: int) -> np.ndarray:
    """``l_i l_j P_{k-2}(K) t_ij t_ij^T`` over all edges: zero normal trace."""
    d = geom.d
    out = []
    for i, j in combinations(range(d + 1), 2):
        tt = _outer(geom.t[i, j], geom.t[i, j])
        bij = _lam_prod(d, (i, j), 2)
        for alpha in pb.multi_indices(d, k - 2):
            out.append(_tensor(pb.multiply(bij, pb.monomial(alpha), d), tt))
    return np.array(out)


def bubble_tn(cell: Cell, f: int) -> np.ndarray:
    """Basis of ``B_F^tn`` (``dim ND0(F)`` functions), dual to the face tn-moments on ``F``."""
    d = cell.d
    k = _deg(d)
    geom = cell.geom
    n = cell.face_normal[f]
    face = cell.faces[f]
    cand = list(div_bubbles(geom, k))
    for i, j in combinations(face, 2):
        te = geom.t[i, j] / np.linalg.norm(geom.t[i, j])
        cand.append(_tensor(_lam_prod(d, (i, j), k), _sym(te, n)))
    cand = np.array(cand)
    m = len(nd0_face_basis(cell, f))
    Z = null_space(interior_constraints(cand, geom), m, f"B_F^tn on face {f}")
    funcs = np.einsum("mj,mabn->jabn", Z, cand)
    M = face_tn_moments(cell, f, funcs)
    return np.einsum("mabn,ml->labn", funcs, np.linalg.inv(M))


# ---------------------------------------------------------------------------
# degrees of freedom


def _vertex_index(d: int, i: int, k: int) -> int:
    alpha = [0] * (d + 1)
    alpha[i] = k
    return pb.monomial_index(alpha)


def vertex_dofs(cell: Cell, funcs: np.ndarray, v: int) -> np.ndarray:
    d = cell.d
    k = pb.degree_of(funcs.shape[-1], d)
    vals = funcs[..., _vertex_index(d, v, k)]
    return np.array([vals[:, a, b] for a, b in pb.vech_pairs(d)])


def edge_nn_dofs(cell: Cell, funcs: np.ndarray, e: int) -> np.ndarray:
    """``(1/|e|)(n_i^T tau n_j, 1)_e`` for ``i <= j``."""
    d = cell.d
    k = pb.degree_of(funcs.shape[-1], d)
    w = pb.facet_mean_weights(d, k, tuple(cell.edges[e]))
    N = cell.edge_normals[e]
    rows = []
    for i in range(d - 1):
        for j in range(i, d - 1):
            rows.append(np.einsum("mabn,a,b,n->m", funcs, N[i], N[j], w))
    return np.array(rows)


def face_nn_moments(cell: Cell, f: int, funcs: np.ndarray) -> np.ndarray:
    """``(1/|F|)(n^T tau n, l_a)_F`` for the face vertices ``a`` -> ``(d, m)``."""
    d = cell.d
    k = pb.degree_of(funcs.shape[-1], d)
    n = cell.face_normal[f]
    s = np.einsum("mabn,a,b->mn", funcs, n, n)
    prod = pb.product_tensor(d, k, 1)
    W = pb.facet_mean_weights(d, k + 1, tuple(cell.faces[f]))
    return np.array([s @ (W @ (prod @ pb.bary(d, a))) for a in cell.faces[f]])


def face_tn_moments(cell: Cell, f: int, funcs: np.ndarray) -> np.ndarray:
    """``(1/|F|)(Pi_F tau n, q)_F`` for q in ND0(F) -> ``(dim ND0, m)``."""
    d = cell.d
    k = pb.degree_of(funcs.shape[-1], d)
    n = cell.face_normal[f]
    tn = np.einsum("mabn,b->man", funcs, n)  # (m, d, N_k)
    Q = nd0_face_basis(cell, f)  # tangential, so Pi_F is implicit
    W = pb.facet_mean_weights(d, k + 1, tuple(cell.faces[f]))
    prod = pb.product_tensor(d, k, 1)
    return np.einsum("pnj,man,qaj,p->qm", prod, tn, Q, W)


def cell_dofs(cell: Cell, funcs: np.ndarray) -> np.ndarray:
    d = cell.d
    k = pb.degree_of(funcs.shape[-1], d)
    means = funcs @ pb.mean_weights(d, k)
    return np.array([means[:, a, b] for a, b in pb.vech_pairs(d)])


def full_dofs(cell: Cell, funcs: np.ndarray) -> np.ndarray:
    """All DoFs of the full element, rows grouped: vertices, edges, face nn, face tn, cell."""
    d = cell.d
    rows = [vertex_dofs(cell, funcs, v) for v in range(d + 1)]
    rows += [edge_nn_dofs(cell, funcs, e) for e in range(len(cell.edges))]
    rows += [face_nn_moments(cell, f, funcs) for f in range(d + 1)]
    rows += [face_tn_moments(cell, f, funcs) for f in range(d + 1)]
    rows.append(cell_dofs(cell, funcs))
    return np.vstack(rows)


def reduced_dofs(cell: Cell, funcs: np.ndarray) -> np.ndarray:
    d = cell.d
    rows = [vertex_dofs(cell, funcs, v) for v in range(d + 1)]
    rows += [face_nn_moments(cell, f, funcs) for f in range(d + 1)]
    rows += [face_tn_moments(cell, f, funcs) for f in range(d + 1)]
    return np.vstack(rows)


def dof_count_full(d: int) -> int:
    return (d * (d + 1) * (d * d + 3 * d + 6)) // 4


def dof_count_reduced(d: int) -> int:
    return d * (d + 1) ** 2


# ---------------------------------------------------------------------------
# spaces


def sigma_spanning_set(cell: Cell) -> tuple[np.ndarray, np.ndarray]:
    """``P2(K; S)`` followed by ``B^nn`` (all faces); also returns the B^nn block."""
    d = cell.d
    Bnn = np.concatenate([bubble_nn(cell, f) for f in range(d + 1)])
    return np.concatenate([p2_sym_basis(d, _deg(d)), Bnn]), Bnn


def edge_quadratic_constraints(cell: Cell, funcs: np.ndarray) -> np.ndarray:
    """Quadratic Legendre moment of each edge normal-normal component."""
    d = cell.d
    rule = gauss_line(6)
    s = rule.points[:, 1]
    L2 = 1.5 * (2 * s - 1) ** 2 - 0.5
    rows = []
    for e, (i, j) in enumerate(cell.edges):
        pts = np.zeros((len(rule), d + 1))
        pts[:, i], pts[:, j] = rule.points[:, 0], rule.points[:, 1]
        vals = pb.evaluate(funcs, pts, d)  # (m, d, d, q)
        N = cell.edge_normals[e]
        for a in range(d - 1):
            for b in range(a, d - 1):
                comp = np.einsum("mxyq,x,y->mq", vals, N[a], N[b])
                rows.append(comp @ (rule.weights * L2))
    return np.array(rows)


def reduced_space(cell: Cell, span: np.ndarray) -> np.ndarray:
    """Reduced shape functions as combinations of the spanning set."""
    geom = cell.geom
    k = pb.degree_of(span.shape[-1], cell.d)
    divs = div_matrix(span, geom).reshape(len(span), -1).T
    c_div = rm_complement_projector(geom, k - 1) @ divs
    C = np.vstack([c_div, edge_quadratic_constraints(cell, span)])
    Z = null_space(C, dof_count_reduced(cell.d), "reduced space")
    return np.einsum("mj,mabn->jabn", Z, span)


def normal_trace_on_face(cell: Cell, f: int, funcs: np.ndarray, npts: int = 15) -> np.ndarray:
    pts = _face_points(cell, f, npts, seed=f)
    vals = pb.evaluate(funcs, pts, cell.d)
    return np.einsum("mabq,b->maq", vals, cell.face_normal[f])


# ---------------------------------------------------------------------------
# certification


@dataclass
class NDReport:
    d: int
    dim_Bnn: int
    dim_Sigma: int
    n_dofs_full: int
    n_dofs_reduced: int
    cond_full: float
    cond_reduced: float
    max_residuals: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> str:
        d = asdict(self)
        d["passed"] = self.passed
        return json.dumps(d, indent=2, sort_keys=True)


def unisolvence_nd(vertices, seed: int = 0) -> NDReport:
    """Build both elements on one simplex and run the element-level checks."""
    cell = make_cell(vertices)
    d = cell.d
    rng = np.random.default_rng(seed)
    span, Bnn = sigma_spanning_set(cell)
    res: dict = {}

    # B^nn: traces
    tang = 0.0
    nn_other = 0.0
    for f in range(d + 1):
        for g in range(d + 1):
            tr = normal_trace_on_face(cell, g, Bnn[d * f:d * (f + 1)])
            n = cell.face_normal[g]
            tang = max(tang, float(np.abs(tr - np.einsum("maq,a->mq", tr, n)[:, None, :] * n[None, :, None]).max()))
            if g != f:
                nn_other = max(nn_other, float(np.abs(np.einsum("maq,a->mq", tr, n)).max()))
    res["Bnn tangential trace"] = tang
    res["Bnn nn trace off its face"] = nn_other
    divs = div_matrix(Bnn, cell.geom).reshape(len(Bnn), -1).T
    res["Bnn div outside RM"] = float(np.abs(rm_complement_projector(cell.geom, d) @ divs).max())

    # P2 ∩ B^nn = {0}
    P2 = p2_sym_basis(d, _deg(d))
    stacked = np.concatenate([P2, Bnn]).reshape(len(P2) + len(Bnn), -1).T
    s = np.linalg.svd(stacked, compute_uv=False)
    rank_span = int(np.sum(s > SVD_TOL * s[0]))

    D = full_dofs(cell, span)
    cond_full = float(np.linalg.cond(D))
    red = reduced_space(cell, span)
    Dr = reduced_dofs(cell, red)
    cond_red = float(np.linalg.cond(Dr))

    # vanishing face DoFs force zero normal trace on that face
    nodal = np.einsum("mabn,ml->labn", span, np.linalg.inv(D))
    face_trace = 0.0
    for f in range(d + 1):
        keep = _face_dof_mask(cell, f)
        coef = rng.standard_normal(len(span)) * ~keep
        tau = np.einsum("l,labn->abn", coef, nodal)[None]
        face_trace = max(face_trace, float(np.abs(normal_trace_on_face(cell, f, tau)).max()))
    res["face trace with zero face DoFs"] = face_trace

    res["Pi_F RM in ND0(F)"] = max(rm_face_residual(cell, f) for f in range(d + 1))

    # B^tn
    tn_ok = True
    tn_div = 0.0
    for f in range(d + 1):
        Btn = bubble_tn(cell, f)
        M = face_tn_moments(cell, f, Btn)
        tn_ok &= bool(np.allclose(M, np.eye(len(M)), atol=1e-9))
        dv = div_matrix(Btn, cell.geom).reshape(len(Btn), -1).T
        tn_div = max(tn_div, float(np.abs(rm_complement_projector(cell.geom, d) @ dv).max()))
    res["Btn div outside RM"] = tn_div

    # div: Sigma(K) ∩ H0(div) onto P1 / RM
    interior = nodal[-(d * (d + 1)) // 2:]
    dv = div_matrix(interior, cell.geom).reshape(len(interior), -1).T
    dv = rm_complement_projector(cell.geom, d) @ dv
    s = np.linalg.svd(dv, compute_uv=False)
    div_rank = int(np.sum(s > SVD_TOL * s[0]))
    n_p1_rm = d * (d + 1) - d * (d + 1) // 2

    checks = {
        "dim B^nn = d(d+1)": len(Bnn) == d * (d + 1),
        "dim Sigma(K) = d(d+1)(d^2+3d+6)/4": len(span) == dof_count_full(d) and rank_span == len(span),
        "full DoF count": D.shape == (dof_count_full(d), dof_count_full(d)),
        "reduced DoF count = d(d+1)^2": Dr.shape == (dof_count_reduced(d), dof_count_reduced(d)),
        "full DoF matrix invertible": cond_full < 1e10,
        "reduced DoF matrix invertible": cond_red < 1e10,
        "B^nn traces": tang < 1e-10 and nn_other < 1e-10,
        "div B^nn in RM": res["Bnn div outside RM"] < 1e-9,
        "zero face DoFs force zero trace (< 1e-9)": face_trace < 1e-9,
        "Pi_F RM = ND0(F) (< 1e-12)": res["Pi_F RM in ND0(F)"] < 1e-12,
        "B^tn tn-moments invertible": tn_ok,
        "div B^tn in RM": tn_div < 1e-9,
        "div onto P1/RM on bubbles": div_rank == n_p1_rm,
    }
    return NDReport(d, len(Bnn), len(span), D.shape[0], Dr.shape[0], cond_full, cond_red, res, checks)


def _face_dof_mask(cell: Cell, f: int) -> np.ndarray:
    """Boolean mask of full-element DoFs attached to face ``f`` (its vertices,
    edges and the face itself)."""
    d = cell.d
    nsym = d * (d + 1) // 2
    nedge = comb(d, 2)
    face = set(cell.faces[f])
    mask = []
    for v in range(d + 1):
        mask += [v in face] * nsym
    for e in cell.edges:
        mask += [set(e) <= face] * nedge
    for g in range(d + 1):
        mask += [g == f] * d
    for g in range(d + 1):
        mask += [g == f] * len(nd0_face_basis(cell, g))
    mask += [False] * nsym
    return np.array(mask)
