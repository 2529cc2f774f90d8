"""Simplicial meshes, entity tables, entity-owned frames and cell geometry."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import factorial
from pathlib import Path

import numpy as np


class GeometryError(ValueError):
    """Raised for degenerate cells."""


@dataclass(frozen=True)
class SimplicialMesh:
    """Conforming simplicial mesh with deduplicated edges and faces.

    Cells are stored with positive orientation. ``cell_edges[K, i]`` is the
    global edge opposite local vertex ``i`` in 2D; in 3D it follows the local
    edge order of ``LOCAL_EDGES_3D``. ``cell_faces[K, i]`` is the face opposite
    local vertex ``i`` (equal to ``cell_edges`` in 2D).
    """

    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    cell_edges: np.ndarray
    faces: np.ndarray
    cell_faces: np.ndarray
    face_cells: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def boundary_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_cells[:, 1] < 0)

    def vertex_patch_sizes(self) -> np.ndarray:
        return np.bincount(self.cells.ravel(), minlength=self.n_vertices)


def local_edges(d: int) -> list[tuple[int, int]]:
    """Local edge list. In 2D edge i is opposite vertex i."""
    if d == 2:
        return [(1, 2), (2, 0), (0, 1)]
    return list(combinations(range(d + 1), 2))


def local_faces(d: int) -> list[tuple[int, ...]]:
    """Face i is opposite local vertex i; vertices in increasing local order."""
    return [tuple(j for j in range(d + 1) if j != i) for i in range(d + 1)]


def _signed_volume(pts: np.ndarray) -> np.ndarray:
    d = pts.shape[-1]
    mats = pts[..., 1:, :] - pts[..., :1, :]
    return np.linalg.det(mats) / factorial(d)


def _dedup(keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keys = np.sort(keys, axis=-1)
    flat = keys.reshape(-1, keys.shape[-1])
    uniq, inverse = np.unique(flat, axis=0, return_inverse=True)
    return uniq, inverse.reshape(keys.shape[:-1])


def build_mesh(vertices, cells) -> SimplicialMesh:
    vertices = np.ascontiguousarray(vertices, dtype=float)
    cells = np.array(cells, dtype=np.int64)
    d = vertices.shape[1]
    if cells.shape[1] != d + 1:
        raise ValueError(f"cells must have {d + 1} vertices in {d}D")
    vol = _signed_volume(vertices[cells])
    span = np.ptp(vertices[cells], axis=1).max(axis=-1)
    bad = np.flatnonzero(np.abs(vol) < 1e-14 * span ** d)
    if bad.size:
        raise GeometryError(f"degenerate cells {bad[:10].tolist()}")
    neg = vol < 0
    cells[neg, :2] = cells[neg, 1::-1]

    le = local_edges(d)
    edges, cell_edges = _dedup(cells[:, le])
    lf = local_faces(d)
    if d == 2:
        faces, cell_faces = edges, cell_edges
    else:
        faces, cell_faces = _dedup(cells[:, lf])
    face_cells = -np.ones((len(faces), 2), dtype=np.int64)
    for K in range(len(cells)):
        for F in cell_faces[K]:
            slot = 0 if face_cells[F, 0] < 0 else 1
            if slot == 1 and face_cells[F, 1] >= 0:
                raise ValueError(f"face {F} shared by more than two cells")
            face_cells[F, slot] = K
    for arr in (vertices, cells, edges, cell_edges, faces, cell_faces, face_cells):
        arr.setflags(write=False)
    return SimplicialMesh(vertices, cells, edges, cell_edges, faces, cell_faces, face_cells)


def uniform_square_mesh(n: int) -> SimplicialMesh:
    """``n x n`` squares of the unit square, each cut along its lower-left to upper-right diagonal."""
    if n < 1:
        raise ValueError("n must be positive")
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)  # idx[row=y, col=x]
    a = idx[:-1, :-1].ravel()
    b = idx[:-1, 1:].ravel()
    c = idx[1:, 1:].ravel()
    e = idx[1:, :-1].ravel()
    lower = np.column_stack([a, b, c])
    upper = np.column_stack([a, c, e])
    cells = np.empty((2 * n * n, 3), dtype=np.int64)
    cells[0::2] = lower
    cells[1::2] = upper
    return build_mesh(vertices, cells)


def read_mesh(path) -> SimplicialMesh:
    """Read the ASCII format: a ``vertices`` block then a ``cells`` block, 0-based."""
    blocks: dict[str, list[list[float]]] = {}
    current = None
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower() in ("vertices", "cells"):
            current = line.lower()
            blocks[current] = []
            continue
        if current is None:
            raise ValueError(f"data before a block header in {path}")
        blocks[current].append([float(t) for t in line.split()])
    if "vertices" not in blocks or "cells" not in blocks:
        raise ValueError(f"{path}: need 'vertices' and 'cells' blocks")
    cells = np.array(blocks["cells"], dtype=float)
    if np.any(cells != np.round(cells)):
        raise ValueError("cell entries must be integers")
    return build_mesh(np.array(blocks["vertices"]), cells.astype(np.int64))


@dataclass(frozen=True)
class EntityFrames:
    """Frames stored once per global entity.

    2D: ``face_normal``/``face_tangent`` per edge. 3D: ``face_normal`` and two
    in-face tangents per face, ``edge_tangent`` and ``edge_normals`` per edge.
    """

    face_normal: np.ndarray
    face_tangent: np.ndarray  # 2D: (nF, 2); 3D: (nF, 2, 3)
    edge_tangent: np.ndarray
    edge_normals: np.ndarray | None  # 3D only: (nE, 2, 3)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def entity_frames(mesh: SimplicialMesh) -> EntityFrames:
    V = mesh.vertices
    t_edge = _unit(V[mesh.edges[:, 1]] - V[mesh.edges[:, 0]])
    if mesh.dim == 2:
        n = np.column_stack([t_edge[:, 1], -t_edge[:, 0]])
        return EntityFrames(n, t_edge, t_edge, None)
    f = mesh.faces
    e1 = V[f[:, 1]] - V[f[:, 0]]
    e2 = V[f[:, 2]] - V[f[:, 0]]
    n = _unit(np.cross(e1, e2))
    t1 = _unit(e1)
    t2 = np.cross(n, t1)
    # least aligned coordinate axis, Gram-Schmidt against t
    axis = np.argmin(np.abs(t_edge), axis=1)
    ref = np.eye(3)[axis]
    n1 = _unit(ref - np.sum(ref * t_edge, axis=1, keepdims=True) * t_edge)
    n2 = np.cross(t_edge, n1)
    return EntityFrames(n, np.stack([t1, t2], axis=1), t_edge, np.stack([n1, n2], axis=1))


@dataclass(frozen=True)
class CellGeom:
    """Geometry of one cell, or of a batch of cells along a leading axis."""

    vertices: np.ndarray  # (..., d+1, d)
    grad_lambda: np.ndarray  # (..., d+1, d)
    t: np.ndarray  # (..., d+1, d+1, d), t[i, j] = v_j - v_i
    c: np.ndarray  # (..., d+1, d+1)
    measure: np.ndarray  # (...)
    diameter: np.ndarray  # (...)
    face_measure: np.ndarray  # (..., d+1), face opposite vertex i
    outward_normal: np.ndarray  # (..., d+1, d)

    @property
    def d(self) -> int:
        return self.vertices.shape[-1]

    def barycenter(self) -> np.ndarray:
        return self.vertices.mean(axis=-2)


def geometry_from_vertices(verts) -> CellGeom:
    verts = np.asarray(verts, dtype=float)
    d = verts.shape[-1]
    ones = np.ones(verts.shape[:-1] + (1,))
    M = np.concatenate([verts, ones], axis=-1)  # rows: [x_i, 1]
    # lambda_i(x) = sum_c G[c, i] x_c + G[d, i], with M @ G = I
    Ginv = np.linalg.inv(M)
    grad = np.swapaxes(Ginv[..., :d, :], -1, -2)
    measure = np.abs(_signed_volume(verts))
    t = verts[..., None, :, :] - verts[..., :, None, :]
    c = np.einsum("...ic,...jc->...ij", grad, grad)
    lengths = np.linalg.norm(t, axis=-1)
    diameter = lengths.reshape(lengths.shape[:-2] + (-1,)).max(axis=-1)
    gnorm = np.linalg.norm(grad, axis=-1)
    # |F_i| = d |K| |grad lambda_i|
    face_measure = d * measure[..., None] * gnorm
    outward = -grad / gnorm[..., None]
    if np.any(measure < 1e-14 * diameter ** d):
        raise GeometryError("degenerate cell")
    return CellGeom(verts, grad, t, c, measure, diameter, face_measure, outward)


def build_geometry(mesh: SimplicialMesh, cell=None) -> CellGeom:
    """Geometry of one cell, or of all cells when ``cell`` is None."""
    idx = slice(None) if cell is None else cell
    try:
        return geometry_from_vertices(mesh.vertices[mesh.cells[idx]])
    except GeometryError as exc:
        raise GeometryError(f"degenerate cell {cell if cell is not None else ''}".strip()) from exc
