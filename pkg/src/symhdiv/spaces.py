"""Global finite element spaces on 2D meshes and their DoF numbering.

Stress DoFs are numbered by entity:

* vertex ``v``, component ``c`` -> ``3 v + c``
* edge ``e`` normal-normal moment ``s`` -> ``3 #V + 2 e + s``
* edge ``e`` tangential-normal mean -> ``3 #V + 2 #E + e``
* cell ``K`` mean, component ``c`` -> ``3 #V + 3 #E + 3 K + c`` (full space only)

Frames are entity-owned and the two nn-moments of an edge are ordered by the
global index of the end points, so every orientation sign is +1. The signs are
kept in the map anyway so that callers never have to assume it.

Displacements are discontinuous. ``V_h`` uses the local basis
``lambda_a e_c`` (index ``2 a + c``) and ``V_h^r`` the rigid motions
``e_x, e_y, (-(y - y_K), x - x_K) / h_K``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import elem2d
from . import polybasis as pb
from .mesh import CellGeom, SimplicialMesh, build_geometry


@dataclass(frozen=True)
class DofMap:
    space: str
    n_dofs: int
    cell_dofs: np.ndarray  # (T, n_local)
    signs: np.ndarray  # (T, n_local)

    @property
    def n_local(self) -> int:
        return self.cell_dofs.shape[1]

    def gather(self, x: np.ndarray) -> np.ndarray:
        """Local coefficient arrays ``(T, n_local)`` from a global vector."""
        return x[self.cell_dofs] * self.signs


def stress_dofmap(mesh: SimplicialMesh, variant: str = "full") -> DofMap:
    if mesh.dim != 2:
        raise ValueError("global stress spaces are 2D only")
    nV, nE, nT = mesh.n_vertices, mesh.n_edges, mesh.n_cells
    cells, ce = mesh.cells, mesh.cell_edges
    vert = 3 * cells[:, :, None] + np.arange(3)[None, None, :]  # (T, 3, 3)
    nn = 3 * nV + 2 * ce[:, :, None] + np.arange(2)[None, None, :]  # (T, 3, 2)
    tn = 3 * nV + 2 * nE + ce
    parts = [vert.reshape(nT, 9), nn.reshape(nT, 6), tn]
    n = 3 * nV + 3 * nE
    if variant == "full":
        parts.append(n + 3 * np.arange(nT)[:, None] + np.arange(3)[None, :])
        n += 3 * nT
    elif variant != "reduced":
        raise ValueError(f"unknown variant {variant!r}")
    dofs = np.concatenate(parts, axis=1)
    return DofMap(variant, n, dofs, np.ones(dofs.shape))


def displacement_dofmap(mesh: SimplicialMesh, variant: str = "full") -> DofMap:
    nloc = 6 if variant == "full" else 3
    dofs = np.arange(mesh.n_cells * nloc).reshape(mesh.n_cells, nloc)
    return DofMap("V" if variant == "full" else "Vr", dofs.size, dofs, np.ones(dofs.shape))


def bell_dofmap(mesh: SimplicialMesh) -> DofMap:
    dofs = 6 * mesh.cells[:, :, None] + np.arange(6)[None, None, :]
    dofs = dofs.reshape(mesh.n_cells, 18)
    return DofMap("W", 6 * mesh.n_vertices, dofs, np.ones(dofs.shape))


def displacement_basis(geom: CellGeom, variant: str = "full") -> np.ndarray:
    """Local displacement basis as linear vector polys ``(T, nloc, 2, 3)``."""
    T = geom.measure.shape[0]
    if variant == "full":
        out = np.zeros((T, 6, 2, 3))
        for a in range(3):
            for c in range(2):
                out[:, 2 * a + c, c, a] = 1.0
        return out
    out = np.zeros((T, 3, 2, 3))
    out[:, 0, 0, :] = 1.0
    out[:, 1, 1, :] = 1.0
    rel = geom.vertices - geom.barycenter()[:, None, :]
    h = geom.diameter[:, None]
    out[:, 2, 0, :] = -rel[:, :, 1] / h
    out[:, 2, 1, :] = rel[:, :, 0] / h
    return out


class StressSpace:
    """Global ``Sigma_h`` or ``Sigma_h^r`` with its per-cell nodal bases."""

    def __init__(self, mesh: SimplicialMesh, variant: str = "full"):
        self.mesh = mesh
        self.variant = variant
        self.geom = build_geometry(mesh)
        self.frames = elem2d.cell_edge_frames(mesh)
        self.basis = elem2d.nodal_basis(self.geom, self.frames, variant)
        self.dofmap = stress_dofmap(mesh, variant)

    @property
    def dim(self) -> int:
        return self.dofmap.n_dofs

    @cached_property
    def div_coef(self) -> np.ndarray:
        """``(T, nloc, 2, 6)`` quadratic divergence coefficients."""
        return self.basis.div(self.geom)

    def local(self, x: np.ndarray) -> np.ndarray:
        """Per-cell tensor polynomial ``(T, 2, 2, 10)`` of a global coefficient vector."""
        return np.einsum("tl,tlabn->tabn", self.dofmap.gather(x), self.basis.coef)

    def local_dofs(self, tau: np.ndarray) -> np.ndarray:
        """DoF values ``(T, nloc)`` of per-cell tensor polys ``(T, 2, 2, N)``."""
        return elem2d.apply_dofs(tau[:, None], self.geom, self.frames, len(self.basis))[..., 0]

    def assemble_dofs(self, local: np.ndarray) -> tuple[np.ndarray, float]:
        """Scatter per-cell DoF values into a global vector; also return the
        largest disagreement between cells writing the same entry."""
        dm = self.dofmap
        x = np.zeros(dm.n_dofs)
        vals = (local * dm.signs).ravel()
        idx = dm.cell_dofs.ravel()
        x[idx] = vals
        mismatch = np.abs(x[idx] - vals).max(initial=0.0)
        return x, float(mismatch)


class DisplacementSpace:
    def __init__(self, mesh: SimplicialMesh, variant: str = "full", geom: CellGeom | None = None):
        self.mesh = mesh
        self.variant = variant
        self.geom = geom if geom is not None else build_geometry(mesh)
        self.basis = displacement_basis(self.geom, variant)
        self.dofmap = displacement_dofmap(mesh, variant)

    @property
    def dim(self) -> int:
        return self.dofmap.n_dofs

    @cached_property
    def mass(self) -> np.ndarray:
        """Local mass matrices ``(T, nloc, nloc)``."""
        G = pb.gram(2, 1, 1)
        return self.geom.measure[:, None, None] * np.einsum("tkcn,nm,tlcm->tkl", self.basis, G, self.basis)

    def local(self, x: np.ndarray) -> np.ndarray:
        """Per-cell linear vector polys ``(T, 2, 3)``."""
        return np.einsum("tl,tlcn->tcn", self.dofmap.gather(x), self.basis)
