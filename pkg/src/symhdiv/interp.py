"""Projections and interpolation operators onto the 2D discrete spaces.

``I_h`` takes vertex values from patch averages of the local quadratic L2
projections and all moments directly from the field. ``I_h^b`` corrects a
field inside each cell with the three interior bubbles so that its
divergence matches on ``P1 / RM``. ``Pi_h = I_h + I_h^b (id - I_h)`` then
commutes with the divergence: ``div Pi_h tau = Q_h div tau``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import elem2d
from . import polybasis as pb
from .quadrature import gauss_line, quad_simplex, to_cartesian
from .spaces import DisplacementSpace, StressSpace

CELL_DEGREE = 16
FACE_DEGREE = 10


@dataclass(frozen=True)
class SmoothField:
    """A field given by a callable on Cartesian points ``(..., 2) -> (..., *shape)``."""

    func: Callable[[np.ndarray], np.ndarray]
    kind: str = "tensor"  # or "vector"
    div: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.func(x)


@dataclass(frozen=True)
class DiscreteField:
    """Global coefficient vector of a field in one of the discrete spaces."""

    space: object
    coef: np.ndarray

    def __post_init__(self):
        if len(self.coef) != self.space.dim:
            raise ValueError(f"expected {self.space.dim} coefficients, got {len(self.coef)}")

    @property
    def tag(self) -> str:
        if isinstance(self.space, StressSpace):
            return "Sigma_h" if self.space.variant == "full" else "Sigma_h^r"
        return "V_h" if self.space.variant == "full" else "V_h^r"

    def local(self) -> np.ndarray:
        return self.space.local(self.coef)


def _cell_values(field, geom, rule) -> np.ndarray:
    """Field values at the cell quadrature points, ``(T, q, ...)``."""
    if isinstance(field, DiscreteField):
        vals = pb.evaluate(field.local(), rule.points, 2)
        return np.moveaxis(vals, -1, 1)
    return field(to_cartesian(rule.points, geom.vertices))


# ---------------------------------------------------------------------------
# displacement projections


def project_Qh(vspace: DisplacementSpace, v, degree: int = CELL_DEGREE) -> DiscreteField:
    """Elementwise L2 projection onto ``P1(K; R^2)`` or ``RM`` (by the space variant)."""
    rule = quad_simplex(2, degree)
    geom = vspace.geom
    vals = _cell_values(v, geom, rule)
    phi = pb.evaluate(vspace.basis, rule.points, 2)  # (T, nloc, 2, q)
    rhs = geom.measure[:, None] * np.einsum("tlcq,tqc,q->tl", phi, vals, rule.weights)
    loc = np.linalg.solve(vspace.mass, rhs[..., None])[..., 0]
    out = np.zeros(vspace.dim)
    out[vspace.dofmap.cell_dofs] = loc
    return DiscreteField(vspace, out)


def projection_residual(vspace: DisplacementSpace, v, Qv: DiscreteField, degree: int = CELL_DEGREE) -> float:
    """``max_K |(v - Q v, q)_K|`` over the local basis."""
    rule = quad_simplex(2, degree)
    geom = vspace.geom
    diff = _cell_values(v, geom, rule) - _cell_values(Qv, geom, rule)
    phi = pb.evaluate(vspace.basis, rule.points, 2)
    r = geom.measure[:, None] * np.einsum("tlcq,tqc,q->tl", phi, diff, rule.weights)
    return float(np.abs(r).max())


# ---------------------------------------------------------------------------
# stress interpolation


def local_p2_projection(space: StressSpace, tau, degree: int = CELL_DEGREE) -> np.ndarray:
    """``Q_K^2 tau`` as per-cell quadratic tensor polys ``(T, 2, 2, 6)``."""
    rule = quad_simplex(2, degree)
    geom = space.geom
    vals = _cell_values(tau, geom, rule)  # (T, q, 2, 2)
    mono = pb.monomial_values(2, 2, rule.points)  # (q, 6)
    rhs = np.einsum("tqab,qn,q->tabn", vals, mono, rule.weights)  # divided by |K|
    G = pb.gram(2, 2, 2)
    return np.linalg.solve(G, rhs[..., None])[..., 0]


def smooth_moment_dofs(space: StressSpace, tau, degree: int = FACE_DEGREE,
                       cell_degree: int = CELL_DEGREE) -> np.ndarray:
    """Edge and cell moment DoFs ``(T, nloc)`` of a field (vertex slots left at 0)."""
    geom, frames, mesh = space.geom, space.frames, space.mesh
    T = mesh.n_cells
    out = np.zeros((T, len(space.basis)))
    rule = gauss_line(degree)
    for i in range(3):
        ends = frames.ends[:, i]  # (T, 2) local ids, lower global first
        bpts = np.zeros((T, len(rule), 3))
        rows = np.arange(T)[:, None]
        bpts[rows, :, ends[:, :1]] = rule.points[None, :, 0]
        bpts[rows, :, ends[:, 1:]] = rule.points[None, :, 1]
        xp = np.einsum("tqi,tic->tqc", bpts, geom.vertices)
        if isinstance(tau, DiscreteField):
            k = pb.degree_of(tau.local().shape[-1], 2)
            mv = np.prod(bpts[:, :, None, :] ** pb.multi_indices(2, k)[None, None], axis=-1)
            vals = np.einsum("tabn,tqn->tqab", tau.local(), mv)
        else:
            vals = tau(xp)
        n, t = frames.normal[:, i], frames.tangent[:, i]
        nn = np.einsum("tqab,ta,tb->tq", vals, n, n)
        tn = np.einsum("tqab,ta,tb->tq", vals, t, n)
        out[:, 9 + 2 * i] = nn @ (rule.weights * rule.points[:, 0])
        out[:, 10 + 2 * i] = nn @ (rule.weights * rule.points[:, 1])
        out[:, 15 + i] = tn @ rule.weights
    if len(space.basis) == elem2d.N_FULL:
        crule = quad_simplex(2, cell_degree)
        vals = _cell_values(tau, geom, crule)
        means = np.einsum("tqab,q->tab", vals, crule.weights)
        out[:, 18] = means[:, 0, 0]
        out[:, 19] = means[:, 1, 1]
        out[:, 20] = means[:, 0, 1]
    return out


@dataclass
class InterpResult:
    field: DiscreteField
    mismatch: float  # largest disagreement between cells writing the same DoF


def interp_Ih(space: StressSpace, tau, degree: int = CELL_DEGREE) -> InterpResult:
    """Averaging interpolation into ``Sigma_h``."""
    mesh = space.mesh
    q2 = local_p2_projection(space, tau, degree)
    local = smooth_moment_dofs(space, tau, FACE_DEGREE, degree)
    # vertex values of Q_K^2 tau, averaged over vertex patches in cell order
    sums = np.zeros((mesh.n_vertices, 3))
    for i in range(3):
        v = q2[..., elem2d._vertex_index(i, 2)]  # (T, 2, 2)
        comps = np.stack([v[:, 0, 0], v[:, 1, 1], v[:, 0, 1]], axis=1)
        np.add.at(sums, mesh.cells[:, i], comps)
    avg = sums / mesh.vertex_patch_sizes()[:, None]
    local[:, :9] = avg[mesh.cells].reshape(mesh.n_cells, 9)
    x, mismatch = space.assemble_dofs(local)
    return InterpResult(DiscreteField(space, x), mismatch)


def _rm_complement_fields(geom) -> np.ndarray:
    """Linear vector fields ``(T, 3, 2, 3)``: ``(x-xc, 0)``, ``(0, y-yc)``,
    ``((y-yc)/2, (x-xc)/2)``, whose strains are ``E11``, ``E22``, ``S12/2``."""
    rel = geom.vertices - geom.barycenter()[:, None, :]  # (T, 3, 2) values at vertices
    T = rel.shape[0]
    out = np.zeros((T, 3, 2, 3))
    out[:, 0, 0] = rel[:, :, 0]
    out[:, 1, 1] = rel[:, :, 1]
    out[:, 2, 0] = 0.5 * rel[:, :, 1]
    out[:, 2, 1] = 0.5 * rel[:, :, 0]
    return out


def _div_moments(space: StressSpace, tau, degree: int = CELL_DEGREE) -> np.ndarray:
    """``(div tau, v_q)_K`` for the three fields above, ``(T, 3)``.

    Smooth fields use integration by parts, so only values of ``tau`` are needed:
    ``(div tau, v)_K = <tau n, v>_dK - (tau, eps v)_K``.
    """
    if isinstance(tau, _Difference):
        return _div_moments(space, tau.tau, degree) - _div_moments(space, tau.discrete, degree)
    geom = space.geom
    vq = _rm_complement_fields(geom)
    if isinstance(tau, DiscreteField):
        div = np.einsum("tl,tlcn->tcn", space.dofmap.gather(tau.coef), space.div_coef)
        G = pb.gram(2, 2, 1)
        return geom.measure[:, None] * np.einsum("tcn,nm,tqcm->tq", div, G, vq)
    crule = quad_simplex(2, degree)
    vals = _cell_values(tau, geom, crule)
    means = np.einsum("tqab,q->tab", vals, crule.weights)
    eps_pair = np.stack([means[:, 0, 0], means[:, 1, 1], means[:, 0, 1]], axis=1)
    out = -geom.measure[:, None] * eps_pair
    rule = gauss_line(FACE_DEGREE)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        bpts = np.zeros((len(rule), 3))
        bpts[:, j], bpts[:, k] = rule.points[:, 0], rule.points[:, 1]
        xp = to_cartesian(bpts, geom.vertices)
        tn = np.einsum("tqab,tb->tqa", tau(xp), geom.outward_normal[:, i])
        vv = np.einsum("tpcn,qn->tpqc", vq, bpts)
        out += geom.face_measure[:, i, None] * np.einsum("tqa,tpqa,q->tp", tn, vv, rule.weights)
    return out


def interp_Ihb(space: StressSpace, tau, degree: int = CELL_DEGREE) -> DiscreteField:
    """Interior-bubble correction: ``(I_h^b tau, eps v)_K = -(div tau, v)_K`` on ``P1/RM``."""
    if space.variant != "full":
        raise ValueError("the bubble correction lives in the full space")
    rhs = -_div_moments(space, tau, degree)
    # the bubbles are the nodal functions of the cell-mean DoFs, and
    # (b, eps v_q)_K = |K| * (cell-mean DoF q of b)
    local = np.zeros((space.mesh.n_cells, elem2d.N_FULL))
    local[:, 18:] = rhs / space.geom.measure[:, None]
    x, _ = space.assemble_dofs(local)
    return DiscreteField(space, x)


def interp_Pih(space: StressSpace, tau, degree: int = CELL_DEGREE) -> DiscreteField:
    Ih = interp_Ih(space, tau, degree).field
    residual = _Difference(tau, Ih)
    corr = interp_Ihb(space, residual, degree)
    return DiscreteField(space, Ih.coef + corr.coef)


@dataclass(frozen=True)
class _Difference:
    """``tau - I_h tau`` as a field usable by the moment routines."""

    tau: object
    discrete: DiscreteField


# ---------------------------------------------------------------------------
# checks


def div_coefficients(field: DiscreteField) -> np.ndarray:
    """Per-cell divergence, quadratic vector polys ``(T, 2, 6)``."""
    space = field.space
    return np.einsum("tl,tlcn->tcn", space.dofmap.gather(field.coef), space.div_coef)


def commuting_residual(space: StressSpace, vspace: DisplacementSpace, tau, div_tau,
                       degree: int = CELL_DEGREE) -> tuple[float, DiscreteField]:
    """``max |div Pi_h tau - Q_h div tau|`` over quadratic coefficients, relative to ``max |Q_h div tau|``."""
    Pi = interp_Pih(space, tau, degree)
    lhs = div_coefficients(Pi)
    Q = project_Qh(vspace, div_tau, degree)
    rhs = pb.elevate(vspace.local(Q.coef), 2, 2)
    scale = max(float(np.abs(rhs).max()), 1e-300)
    return float(np.abs(lhs - rhs).max()) / scale, Pi


def stress_L2_error(space: StressSpace, tau, field: DiscreteField, degree: int = CELL_DEGREE) -> float:
    rule = quad_simplex(2, degree)
    geom = space.geom
    diff = _cell_values(tau, geom, rule) - _cell_values(field, geom, rule)
    w = geom.measure[:, None] * rule.weights
    return float(np.sqrt(np.sum(w * np.einsum("tqab,tqab->tq", diff, diff))))
