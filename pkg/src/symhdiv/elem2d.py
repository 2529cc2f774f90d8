"""Two-dimensional elements: the full stress element (21 DoFs), the reduced
stress element (18 DoFs) and the Bell element used by the Airy map.

All shape functions are degree-3 symmetric tensor polynomials stored as full
``(2, 2, 10)`` coefficient blocks over the homogeneous cubic barycentric
monomials. Every routine accepts a single cell or a batch of cells along the
leading axes of the geometry arrays.

Local DoF order (full element; the reduced element drops the last three):

* 0-8   vertex values, vertex ``i`` -> ``3*i + (xx, yy, xy)``
* 9-14  normal-normal moments on edge ``i`` against the barycentric
        coordinates of its two end points, lower global index first
* 15-17 tangential-normal mean on edge ``i``
* 18-20 cell means of ``xx, yy, xy``

Edge ``i`` is opposite local vertex ``i``. Edge frames are owned by the
global edge, so a DoF evaluated from either neighbouring cell is the same
functional.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import polybasis as pb
from .mesh import CellGeom, SimplicialMesh, build_geometry, build_mesh, entity_frames, local_edges

D = 2
DEG = 3
NMON = pb.n_monomials(D, DEG)
N_FULL = 21
N_REDUCED = 18
N_BELL = 18

E11 = np.array([[1.0, 0.0], [0.0, 0.0]])
E22 = np.array([[0.0, 0.0], [0.0, 1.0]])
S12 = np.array([[0.0, 1.0], [1.0, 0.0]])
# weights w with tau_xx, tau_yy, tau_xy = sum(w * tau)
COMPONENT_WEIGHTS = np.stack([E11, E22, 0.5 * S12])


class ElementError(RuntimeError):
    """A per-cell construction failed (ill-conditioned or singular local system)."""

    def __init__(self, message: str, cells=None):
        super().__init__(message)
        self.cells = cells


@dataclass(frozen=True)
class EdgeFrames:
    """Per-cell view of the entity-owned edge frames."""

    ends: np.ndarray  # (..., 3, 2) local vertex ids of edge i, lower global id first
    normal: np.ndarray  # (..., 3, 2)
    tangent: np.ndarray  # (..., 3, 2)


def cell_edge_frames(mesh: SimplicialMesh, cell=None) -> EdgeFrames:
    frames = entity_frames(mesh)
    idx = slice(None) if cell is None else cell
    cells = mesh.cells[idx]
    ce = mesh.cell_edges[idx]
    le = np.array(local_edges(D))
    a, b = le[:, 0], le[:, 1]
    ga = cells[..., a]
    gb = cells[..., b]
    swap = ga > gb
    ends = np.stack([np.where(swap, b, a), np.where(swap, a, b)], axis=-1)
    return EdgeFrames(ends, frames.face_normal[ce], frames.face_tangent[ce])


def reference_cell(vertices) -> tuple[CellGeom, EdgeFrames]:
    """Geometry and frames of a standalone triangle (vertex ids 0, 1, 2)."""
    mesh = build_mesh(np.asarray(vertices, float), [[0, 1, 2]])
    return build_geometry(mesh, 0), cell_edge_frames(mesh, 0)


# ---------------------------------------------------------------------------
# polynomial building blocks


def _mono(i0: int, i1: int, i2: int) -> np.ndarray:
    return pb.elevate(pb.monomial((i0, i1, i2)), D, DEG)


def _lam(*idx: int) -> np.ndarray:
    """Product of barycentric coordinates, e.g. ``_lam(1, 2, 2)`` = l1 l2^2, as a cubic."""
    alpha = [0, 0, 0]
    for i in idx:
        alpha[i] += 1
    return _mono(*alpha)


def _outer(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., :, None] * v[..., None, :]


def _sym(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return 0.5 * (_outer(u, v) + _outer(v, u))


def _tensor(scalar: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """scalar poly (..., N) times matrix (..., 2, 2) -> (..., 2, 2, N)."""
    return matrix[..., :, :, None] * scalar[..., None, None, :]


def _cyclic(i: int) -> tuple[int, int, int]:
    return i, (i + 1) % 3, (i + 2) % 3


def eval_psi(geom: CellGeom, i: int) -> pb.SymTensorPoly:
    """The cubic tensor ``psi_i`` attached to edge ``i``, term by term."""
    i, j, k = _cyclic(i)
    c = geom.c
    cij = c[..., i, j][..., None]
    cik = c[..., i, k][..., None]
    t = geom.t
    TT_ki = _outer(t[..., k, i, :], t[..., k, i, :])
    TT_ij = _outer(t[..., i, j, :], t[..., i, j, :])
    TT_jk = _outer(t[..., j, k, :], t[..., j, k, :])

    term1 = -10 * cik * _lam(j, k, k)
    term2 = -10 * cij * (_lam(k, j, k) + _lam(i, j, k))
    term3 = (6 * cij - 9 * cik) * _lam(j, j, k) + (9 * cij - 6 * cik) * _lam(j, k, k)
    term4 = (6 * cij - 9 * cik) * _lam(j, k, i) + (2 * cik - 3 * cij) * _lam(k, k, i)
    term5 = (3 * cik - 2 * cij) * _lam(j, i, j) + (9 * cij - 6 * cik) * _lam(k, i, j)

    full = (_tensor(term1 + term4, TT_ki) + _tensor(term2 + term5, TT_ij)
            + _tensor(term3, TT_jk))
    return pb.SymTensorPoly.from_full(full, D)


def _unit_edge_frames(geom: CellGeom) -> tuple[np.ndarray, np.ndarray]:
    """Cell-local unit tangent/normal of each edge (signs irrelevant here)."""
    tans = []
    for i in range(3):
        _, j, k = _cyclic(i)
        tv = geom.t[..., j, k, :]
        tans.append(tv / np.linalg.norm(tv, axis=-1, keepdims=True))
    tan = np.stack(tans, axis=-2)
    nor = np.stack([tan[..., 1], -tan[..., 0]], axis=-1)
    return tan, nor


def spanning_set_sigma(geom: CellGeom) -> np.ndarray:
    """The 21 explicit functions in DoF order, as full blocks ``(..., 21, 2, 2, 10)``."""
    batch = geom.measure.shape
    tan, nor = _unit_edge_frames(geom)
    funcs = []
    for i in range(3):
        sq = np.broadcast_to(_lam(i, i), batch + (NMON,))
        for M in (E11, E22, S12):
            funcs.append(_tensor(sq, np.broadcast_to(M, batch + (2, 2))))
    psi = [eval_psi(geom, i).full() for i in range(3)]
    for i in range(3):
        _, j, k = _cyclic(i)
        nn = _outer(nor[..., i, :], nor[..., i, :])
        bjk = np.broadcast_to(_lam(j, k), batch + (NMON,))
        funcs.append(36 * _tensor(bjk, nn) - 6 * psi[i])
        funcs.append(-24 * _tensor(bjk, nn) + 6 * psi[i])
    for i in range(3):
        _, j, k = _cyclic(i)
        bjk = np.broadcast_to(_lam(j, k), batch + (NMON,))
        funcs.append(_tensor(bjk, _sym(tan[..., i, :], nor[..., i, :])))
    funcs.extend(interior_bubble_basis(geom))
    return np.stack(funcs, axis=-4)


def interior_bubble_basis(geom: CellGeom) -> list[np.ndarray]:
    """``l1 l2 t0 x t0``, ``l2 l0 t1 x t1``, ``l0 l1 t2 x t2`` (zero normal trace)."""
    batch = geom.measure.shape
    tan, _ = _unit_edge_frames(geom)
    out = []
    for i in range(3):
        _, j, k = _cyclic(i)
        bjk = np.broadcast_to(_lam(j, k), batch + (NMON,))
        out.append(_tensor(bjk, _outer(tan[..., i, :], tan[..., i, :])))
    return out


# ---------------------------------------------------------------------------
# degrees of freedom


def _edge_moment_weights(i: int, a: int, k: int = DEG) -> np.ndarray:
    """``(1/|e_i|) int_{e_i} lambda**alpha lambda_a`` for degree-k monomials."""
    _, j, kk = _cyclic(i)
    lam_a = pb.bary(D, a)
    prod = pb.product_tensor(D, k, 1) @ lam_a  # (N_{k+1}, N_k)
    return pb.facet_mean_weights(D, k + 1, (j, kk)) @ prod


def _edge_mean_weights(i: int, k: int = DEG) -> np.ndarray:
    _, j, kk = _cyclic(i)
    return np.asarray(pb.facet_mean_weights(D, k, (j, kk)))


def _vertex_index(i: int, k: int = DEG) -> int:
    alpha = [0, 0, 0]
    alpha[i] = k
    return pb.monomial_index(alpha)


def apply_dofs(tau: np.ndarray, geom: CellGeom, frames: EdgeFrames, n_dofs: int = N_FULL) -> np.ndarray:
    """DoF values of full tensor polys ``tau`` of shape ``(..., m, 2, 2, N)`` -> ``(..., n_dofs, m)``.

    ``tau`` may be of any degree; moments are taken in closed form.
    """
    k = pb.degree_of(tau.shape[-1], D)
    rows = []
    for i in range(3):
        vals = tau[..., _vertex_index(i, k)]  # (..., m, 2, 2)
        for W in COMPONENT_WEIGHTS:
            rows.append(np.einsum("...ab,ab->...", vals, W))
    nn = _outer(frames.normal, frames.normal)  # (..., 3, 2, 2)
    tn = _sym(frames.tangent, frames.normal)
    for i in range(3):
        s = np.einsum("...mabn,...ab->...mn", tau, nn[..., i, :, :])
        for slot in range(2):
            a = frames.ends[..., i, slot]
            w = np.stack([_edge_moment_weights(i, aa, k) for aa in range(3)])[a]  # (..., N)
            rows.append(np.einsum("...mn,...n->...m", s, w))
    for i in range(3):
        s = np.einsum("...mabn,...ab->...mn", tau, tn[..., i, :, :])
        rows.append(s @ _edge_mean_weights(i, k))
    if n_dofs == N_FULL:
        means = pb.mean_weights(D, k)
        for W in COMPONENT_WEIGHTS:
            rows.append(np.einsum("...mabn,ab,n->...m", tau, W, means))
    return np.stack(rows, axis=-2)




# ---------------------------------------------------------------------------
# nodal bases


@dataclass(frozen=True)
class ElementBasis2D:
    """Nodal basis, ``coef[..., l, a, b, n]`` is component ``ab`` of function ``l``."""

    variant: str
    coef: np.ndarray
    condition: np.ndarray

    def __len__(self) -> int:
        return self.coef.shape[-4]

    def values(self, points) -> np.ndarray:
        """``(..., nbasis, npts, 2, 2)`` at barycentric points."""
        vals = pb.evaluate(self.coef, points, D)
        return np.moveaxis(vals, -1, -3)

    def div(self, geom: CellGeom) -> np.ndarray:
        """Divergence coefficients ``(..., nbasis, 2, 6)`` over quadratic monomials."""
        return tensor_div(self.coef, geom)


def tensor_div(coef: np.ndarray, geom: CellGeom) -> np.ndarray:
    g = pb.gradient(coef, geom.grad_lambda, D)  # (..., a, b, c, n)
    return np.einsum("...abbn->...an", g)


def _invert(Dmat: np.ndarray, what: str, max_cond: float = 1e8) -> tuple[np.ndarray, np.ndarray]:
    cond = np.linalg.cond(Dmat)
    bad = ~(cond < max_cond)
    if np.any(bad):
        cells = np.flatnonzero(np.atleast_1d(bad))
        raise ElementError(f"{what}: DoF matrix condition above {max_cond:g} on cells {cells[:10]}", cells)
    return np.linalg.inv(Dmat), cond


def _combine(funcs: np.ndarray, mix: np.ndarray) -> np.ndarray:
    """``out[l] = sum_m funcs[m] mix[m, l]``."""
    return np.einsum("...mabn,...ml->...labn", funcs, mix)


def reduced_functions(geom: CellGeom, span: np.ndarray | None = None) -> np.ndarray:
    """The 18 corrected functions with divergence in RM (3x3 solve per cell)."""
    if span is None:
        span = spanning_set_sigma(geom)
    divs = tensor_div(span, geom)  # (..., 21, 2, 6)
    G2 = pb.gram(D, 2, 2)
    ip = np.einsum("...ian,nm,...jam->...ij", divs, G2, divs[..., 18:, :, :])  # (..., 21, 3)
    gram_b = ip[..., 18:, :]
    rhs = -np.swapaxes(ip[..., :18, :], -1, -2)  # (..., 3, 18)
    alpha = np.linalg.solve(gram_b, rhs)  # (..., 3, 18)
    return span[..., :18, :, :, :] + _combine(span[..., 18:, :, :, :], alpha)


def nodal_basis(geom: CellGeom, frames: EdgeFrames, variant: str = "full") -> ElementBasis2D:
    if variant == "full":
        span = spanning_set_sigma(geom)
        inv, cond = _invert(apply_dofs(span, geom, frames, N_FULL), "full element")
        return ElementBasis2D("full", _combine(span, inv), cond)
    if variant == "reduced":
        funcs = reduced_functions(geom)
        inv, cond = _invert(apply_dofs(funcs, geom, frames, N_REDUCED), "reduced element")
        return ElementBasis2D("reduced", _combine(funcs, inv), cond)
    if variant == "bell":
        return bell_basis(geom)
    raise ValueError(f"unknown variant {variant!r}")


# ---------------------------------------------------------------------------
# Bell element


BELL_DEG = 5


@dataclass(frozen=True)
class BellBasis:
    """Scalar quintic nodal basis ``coef[..., l, n]``; DoFs per vertex:
    ``q, q_x, q_y, q_xx, q_xy, q_yy``."""

    coef: np.ndarray
    condition: np.ndarray
    variant: str = "bell"

    def __len__(self) -> int:
        return self.coef.shape[-2]


def _legendre4(s: np.ndarray) -> np.ndarray:
    x = 2 * s - 1
    return (35 * x ** 4 - 30 * x ** 2 + 3) / 8


def bell_edge_constraints(coef: np.ndarray, geom: CellGeom) -> np.ndarray:
    """Quartic Legendre moment of the normal derivative on each edge -> ``(..., m, 3)``."""
    from .quadrature import gauss_line

    rule = gauss_line(9)
    _, nor = _unit_edge_frames(geom)
    grad = pb.gradient(coef, geom.grad_lambda, D)  # (..., m, 2, N4)
    out = []
    for i in range(3):
        _, j, k = _cyclic(i)
        pts = np.zeros((len(rule), 3))
        pts[:, j] = rule.points[:, 0]
        pts[:, k] = rule.points[:, 1]
        vals = pb.evaluate(grad, pts, D)  # (..., m, 2, q)
        dn = np.sum(vals * nor[..., i, None, :, None], axis=-2)
        out.append(dn @ (rule.weights * _legendre4(rule.points[:, 1])))
    return np.stack(out, axis=-1)


def bell_dofs(coef: np.ndarray, geom: CellGeom) -> np.ndarray:
    """Vertex DoFs of scalar polys ``(..., m, N)`` -> ``(..., 18, m)``."""
    g = pb.gradient(coef, geom.grad_lambda, D)
    H = pb.gradient(g, geom.grad_lambda, D)
    k = pb.degree_of(coef.shape[-1], D)
    rows = []
    for i in range(3):
        rows.append(coef[..., _vertex_index(i, k)])
        gi = g[..., _vertex_index(i, k - 1)]
        rows += [gi[..., 0], gi[..., 1]]
        Hi = H[..., _vertex_index(i, k - 2)]
        rows += [Hi[..., 0, 0], Hi[..., 0, 1], Hi[..., 1, 1]]
    return np.stack(rows, axis=-2)


def bell_basis(geom: CellGeom) -> BellBasis:
    batch = geom.measure.shape
    n5 = pb.n_monomials(D, BELL_DEG)
    monos = np.broadcast_to(np.eye(n5), batch + (n5, n5))
    C = np.swapaxes(bell_edge_constraints(monos, geom), -1, -2)  # (..., 3, 21)
    _, s, vh = np.linalg.svd(C)
    if np.any(s[..., -1] < 1e-12 * s[..., 0]):
        raise ElementError("Bell edge constraints are rank deficient")
    Z = np.swapaxes(vh[..., 3:, :], -1, -2)  # (..., 21, 18) null space
    funcs = np.swapaxes(Z, -1, -2)  # (..., 18, 21) coefficient rows
    inv, cond = _invert(bell_dofs(funcs, geom), "Bell element", 1e12)
    coef = np.einsum("...mn,...ml->...ln", funcs, inv)
    return BellBasis(coef, cond)


def airy(coef: np.ndarray, geom: CellGeom) -> np.ndarray:
    """``curl curl q`` of scalar polys ``(..., m, N)`` -> full tensors ``(..., m, 2, 2, N - deg 2)``."""
    H = pb.gradient(pb.gradient(coef, geom.grad_lambda, D), geom.grad_lambda, D)
    out = np.empty_like(H)
    out[..., 0, 0, :] = H[..., 1, 1, :]
    out[..., 1, 1, :] = H[..., 0, 0, :]
    out[..., 0, 1, :] = -H[..., 0, 1, :]
    out[..., 1, 0, :] = -H[..., 1, 0, :]
    return out
