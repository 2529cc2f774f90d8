"""Numerical certification of the 2D discrete elasticity complexes

    P1 -> W_h --airy--> Sigma_h   --div--> V_h   -> 0
    P1 -> W_h --airy--> Sigma_h^r --div--> V_h^r -> 0

on small meshes of a contractible domain. Ranks are computed by dense SVD
with a relative threshold.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import elem2d
from .mesh import SimplicialMesh
from .solver import local_divergence
from .spaces import DisplacementSpace, StressSpace, bell_dofmap

RANK_TOL = 1e-9


def numerical_rank(M: np.ndarray, tol: float = RANK_TOL) -> tuple[int, float]:
    """Rank and the gap ratio ``s[r] / s[r-1]`` at the cut (0 if full rank)."""
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0, 0.0
    r = int(np.sum(s > tol * s[0]))
    gap = float(s[r] / s[r - 1]) if 0 < r < s.size else 0.0
    return r, gap


class BellSpace:
    """Global Bell space ``W_h`` (six DoFs per vertex)."""

    def __init__(self, mesh: SimplicialMesh, geom=None):
        self.mesh = mesh
        self.geom = geom if geom is not None else StressSpace(mesh, "reduced").geom
        self.basis = elem2d.bell_basis(self.geom)
        self.dofmap = bell_dofmap(mesh)

    @property
    def dim(self) -> int:
        return self.dofmap.n_dofs

    def local(self, w: np.ndarray) -> np.ndarray:
        """Per-cell quintic polys ``(T, 21)``."""
        return np.einsum("tl,tln->tn", self.dofmap.gather(w), self.basis.coef)


@dataclass
class AiryCheck:
    coef: np.ndarray  # Sigma_h coefficients of airy w
    mismatch: float  # disagreement of shared DoFs computed from both sides
    membership: float  # max |airy w - Sigma_h interpolant of it| over cells (coefficients)
    div: float  # max |div airy w| coefficient


def airy_of_bell(space: StressSpace, bell: BellSpace, w: np.ndarray) -> AiryCheck:
    """Map a Bell coefficient vector through airy and test that it lands in ``space``."""
    q = bell.local(w)
    tau = elem2d.airy(q, space.geom)  # (T, 2, 2, 10)
    local = space.local_dofs(tau)
    dm = space.dofmap
    idx = dm.cell_dofs.ravel()
    vals = (local * dm.signs).ravel()
    hi = np.full(dm.n_dofs, -np.inf)
    lo = np.full(dm.n_dofs, np.inf)
    np.maximum.at(hi, idx, vals)
    np.minimum.at(lo, idx, vals)
    mismatch = float(np.max(hi - lo))
    x = np.zeros(dm.n_dofs)
    x[idx] = vals
    rebuilt = space.local(x)
    scale = max(1.0, float(np.abs(tau).max()))
    membership = float(np.abs(rebuilt - tau).max()) / scale
    div = float(np.abs(elem2d.tensor_div(tau, space.geom)).max()) / scale
    return AiryCheck(x, mismatch, membership, div)


def airy_matrix(space: StressSpace, bell: BellSpace) -> tuple[np.ndarray, float]:
    """Dense matrix of airy: ``W_h -> Sigma_h``, and the worst membership residual."""
    cols = []
    worst = 0.0
    for k in range(bell.dim):
        e = np.zeros(bell.dim)
        e[k] = 1.0
        chk = airy_of_bell(space, bell, e)
        worst = max(worst, chk.membership, chk.mismatch)
        cols.append(chk.coef)
    return np.array(cols).T, worst


def divergence_matrix(space: StressSpace, vspace: DisplacementSpace) -> np.ndarray:
    B = np.zeros((vspace.dim, space.dim))
    loc = local_divergence(space, vspace) * space.dofmap.signs[:, None, :]
    for t in range(space.mesh.n_cells):
        B[np.ix_(vspace.dofmap.cell_dofs[t], space.dofmap.cell_dofs[t])] += loc[t]
    return B


def injection_matrix(reduced: StressSpace, full: StressSpace) -> tuple[np.ndarray, float]:
    """Coefficients of the reduced basis in the full space; also the largest
    mismatch between a reduced function and its image, over all cells."""
    J = np.zeros((full.dim, reduced.dim))
    loc = elem2d.apply_dofs(reduced.basis.coef, full.geom, full.frames, elem2d.N_FULL)  # (T, 21, 18)
    for t in range(reduced.mesh.n_cells):
        J[np.ix_(full.dofmap.cell_dofs[t], reduced.dofmap.cell_dofs[t])] = loc[t]
    err = 0.0
    for k in range(reduced.dim):
        e = np.zeros(reduced.dim)
        e[k] = 1.0
        err = max(err, float(np.abs(reduced.local(e) - full.local(J @ e)).max()))
    return J, err


@dataclass
class ComplexReport:
    variant: str
    n_vertices: int
    n_edges: int
    n_cells: int
    dim_W: int
    dim_Sigma: int
    dim_V: int
    rank_div: int
    nullity_div: int
    rank_airy: int
    airy_residual: float
    airy_div_residual: float
    rank_gap: float
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> str:
        d = asdict(self)
        d["passed"] = self.passed
        return json.dumps(d, indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"complex ({self.variant}) on #V={self.n_vertices} #E={self.n_edges} #T={self.n_cells}",
                 f"  dim W_h={self.dim_W} dim Sigma={self.dim_Sigma} dim V={self.dim_V}",
                 f"  rank div={self.rank_div} nullity={self.nullity_div} rank airy={self.rank_airy}",
                 f"  airy membership residual={self.airy_residual:.2e} |div airy|={self.airy_div_residual:.2e}"]
        lines += [f"  [{'PASS' if ok else 'FAIL'}] {name}" for name, ok in self.checks.items()]
        return "\n".join(lines)


def certify_exactness(mesh: SimplicialMesh, variant: str = "full") -> ComplexReport:
    space = StressSpace(mesh, variant)
    vspace = DisplacementSpace(mesh, variant, space.geom)
    bell = BellSpace(mesh, space.geom)
    B = divergence_matrix(space, vspace)
    rank, gap = numerical_rank(B)
    nullity = space.dim - rank
    Airy, airy_res = airy_matrix(space, bell)
    rank_airy, _ = numerical_rank(Airy)
    scale = np.abs(B).max() * max(np.abs(Airy).max(), 1.0)
    div_airy = float(np.abs(B @ Airy).max() / scale)
    nV, nE, nT = mesh.n_vertices, mesh.n_edges, mesh.n_cells
    checks = {
        "div onto V_h (rank = dim V_h)": rank == vspace.dim,
        "nullity(div) = 6#V - 3": nullity == 6 * nV - 3,
        "rank(airy) = dim W_h - 3": rank_airy == bell.dim - 3,
        "airy(W_h) in Sigma_h (residual < 1e-10)": airy_res < 1e-10,
        "div airy = 0 (< 1e-10)": div_airy < 1e-10,
        "Euler: #E + 1 = #V + #T": nE + 1 == nV + nT,
    }
    if variant == "full":
        checks["dim Sigma_h = 3#V + 3#E + 3#T"] = space.dim == 3 * (nV + nE + nT)
    else:
        checks["dim V_h^r = 3#T"] = vspace.dim == 3 * nT
        checks["dim Sigma_h - dim Sigma_h^r = 3#T"] = 3 * (nV + nE + nT) - space.dim == 3 * nT
        full = StressSpace(mesh, "full")
        _, inj = injection_matrix(space, full)
        checks["Sigma_h^r embeds in Sigma_h (< 1e-10)"] = inj < 1e-10
    return ComplexReport(variant, nV, nE, nT, bell.dim, space.dim, vspace.dim, rank, nullity,
                         rank_airy, airy_res, div_airy, gap, checks)
