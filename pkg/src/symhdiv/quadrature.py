"""Quadrature on simplices.

Rules are conical (collapsed) products of Gauss-Jacobi rules, which are exact
to any requested degree. Points are returned in barycentric coordinates and
weights are normalized to sum to one, so ``|K| * sum(w * f(x))`` integrates
over a cell of measure ``|K|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = {1: 40, 2: 20, 3: 10}


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class QuadRule:
    points: np.ndarray  # (npts, d + 1) barycentric
    weights: np.ndarray  # (npts,), sum == 1
    degree: int

    @property
    def d(self) -> int:
        return self.points.shape[1] - 1

    def __len__(self) -> int:
        return len(self.weights)


def _gauss_jacobi01(n: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """n-point rule on [0, 1] for weight (1 - t)**beta."""
    x, w = roots_jacobi(n, beta, 0.0)
    return (x + 1.0) / 2.0, w / 2.0 ** (beta + 1.0)


@lru_cache(maxsize=None)
def quad_simplex(d: int, degree: int) -> QuadRule:
    """Rule on the reference d-simplex exact for polynomials up to ``degree``."""
    if d not in MAX_DEGREE or degree < 0 or degree > MAX_DEGREE[d]:
        raise QuadratureError(f"no rule for d={d}, degree={degree}")
    if d == 2 and degree <= 2:
        # edge midpoints
        pts = np.array([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])
        return _freeze(QuadRule(pts, np.full(3, 1.0 / 3.0), 2))
    n = degree // 2 + 1
    # collapsed coordinates: x_1 = t_1, x_2 = (1 - t_1) t_2, ...
    nodes = [_gauss_jacobi01(n, float(d - 1 - j)) for j in range(d)]
    grids = np.meshgrid(*[nd[0] for nd in nodes], indexing="ij")
    wgrid = np.prod(np.meshgrid(*[nd[1] for nd in nodes], indexing="ij"), axis=0).ravel()
    ts = [g.ravel() for g in grids]
    x = np.empty((len(wgrid), d))
    rest = np.ones(len(wgrid))
    for j in range(d):
        x[:, j] = rest * ts[j]
        rest = rest * (1.0 - ts[j])
    pts = np.column_stack([1.0 - x.sum(axis=1), x])
    w = wgrid / wgrid.sum()
    return _freeze(QuadRule(pts, w, degree))


def gauss_line(degree: int) -> QuadRule:
    """Gauss-Legendre rule on an edge, as barycentric pairs (lambda_a, lambda_b)."""
    return quad_simplex(1, degree)


def _freeze(rule: QuadRule) -> QuadRule:
    rule.points.setflags(write=False)
    rule.weights.setflags(write=False)
    return rule


def to_cartesian(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Map barycentric points to Cartesian ones; vertices may be batched ``(..., d+1, d)``."""
    return np.einsum("qi,...ic->...qc", points, vertices)
