"""Barycentric polynomial algebra on simplices.

Polynomials of degree ``k`` on a ``d``-simplex are stored homogenized: as
coefficient vectors over the monomials ``lambda**alpha`` with ``|alpha| = k``.
Lower-degree polynomials are lifted by multiplying with ``sum(lambda) == 1``.
The monomial axis is always the last axis of a coefficient array, so batched
and tensor-valued polynomials are plain numpy arrays of shape
``(..., n_monomials)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb, factorial

import numpy as np


@lru_cache(maxsize=None)
def multi_indices(d: int, k: int) -> np.ndarray:
    """All multi-indices of length ``d + 1`` with total degree ``k``.

    Ordered so that higher powers of ``lambda_0`` come first.
    """
    rows = []
    for combo in combinations_with_replacement(range(d + 1), k):
        alpha = [0] * (d + 1)
        for i in combo:
            alpha[i] += 1
        rows.append(alpha)
    out = np.array(rows, dtype=np.int64).reshape(-1, d + 1)
    out.setflags(write=False)
    return out


def n_monomials(d: int, k: int) -> int:
    return comb(k + d, d)


@lru_cache(maxsize=None)
def _index_table(d: int, k: int) -> dict:
    return {tuple(a): n for n, a in enumerate(multi_indices(d, k))}


def monomial_index(alpha) -> int:
    alpha = tuple(int(a) for a in alpha)
    return _index_table(len(alpha) - 1, sum(alpha))[alpha]


def monomial(alpha) -> np.ndarray:
    """Coefficient vector of the single monomial ``lambda**alpha``."""
    alpha = tuple(int(a) for a in alpha)
    d, k = len(alpha) - 1, sum(alpha)
    c = np.zeros(n_monomials(d, k))
    c[monomial_index(alpha)] = 1.0
    return c


def bary(d: int, i: int) -> np.ndarray:
    """The barycentric coordinate ``lambda_i`` as a degree-1 polynomial."""
    alpha = [0] * (d + 1)
    alpha[i] = 1
    return monomial(alpha)


@lru_cache(maxsize=None)
def elevation_matrix(d: int, k: int, m: int = 1) -> np.ndarray:
    """Matrix lifting degree-``k`` coefficients to degree ``k + m``."""
    out = np.eye(n_monomials(d, k))
    for j in range(k, k + m):
        E = np.zeros((n_monomials(d, j + 1), n_monomials(d, j)))
        table = _index_table(d, j + 1)
        for col, alpha in enumerate(multi_indices(d, j)):
            for i in range(d + 1):
                beta = list(alpha)
                beta[i] += 1
                E[table[tuple(beta)], col] += 1.0
        out = E @ out
    out.setflags(write=False)
    return out


def elevate(coef: np.ndarray, d: int, to_degree: int) -> np.ndarray:
    k = degree_of(coef.shape[-1], d)
    if to_degree < k:
        raise ValueError(f"cannot lower degree {k} to {to_degree}")
    if to_degree == k:
        return coef
    return coef @ elevation_matrix(d, k, to_degree - k).T


@lru_cache(maxsize=None)
def _degree_lookup(d: int) -> dict:
    return {n_monomials(d, k): k for k in range(40)}


def degree_of(n: int, d: int) -> int:
    try:
        return _degree_lookup(d)[n]
    except KeyError:
        raise ValueError(f"{n} is not a monomial count for d={d}") from None


@lru_cache(maxsize=None)
def derivative_matrix(d: int, k: int, i: int) -> np.ndarray:
    """Matrix of ``d/d lambda_i`` (lambdas treated as independent)."""
    D = np.zeros((n_monomials(d, k - 1), n_monomials(d, k)))
    if k == 0:
        return D
    table = _index_table(d, k - 1)
    for col, alpha in enumerate(multi_indices(d, k)):
        if alpha[i] > 0:
            beta = list(alpha)
            beta[i] -= 1
            D[table[tuple(beta)], col] = alpha[i]
    D.setflags(write=False)
    return D


def gradient(coef: np.ndarray, grad_lambda: np.ndarray, d: int) -> np.ndarray:
    """Cartesian gradient; the new axis (length d) is inserted before the monomials.

    ``coef`` has shape ``(*batch, *value, N)`` and ``grad_lambda`` has shape
    ``(*batch, d + 1, d)``.
    """
    k = degree_of(coef.shape[-1], d)
    partials = np.stack([coef @ derivative_matrix(d, k, i).T for i in range(d + 1)], axis=-2)
    g = _align(np.asarray(grad_lambda, float), partials.ndim)
    return np.einsum("...in,...ic->...cn", partials, g)


def _align(g: np.ndarray, ndim: int) -> np.ndarray:
    """Give grad_lambda enough axes to broadcast against a ``(..., d+1, N)`` array."""
    missing = ndim - g.ndim
    if missing <= 0:
        return g
    lead = g.shape[:-2]
    return g.reshape(lead + (1,) * missing + g.shape[-2:])


def directional_derivative(coef: np.ndarray, direction: np.ndarray, grad_lambda: np.ndarray, d: int) -> np.ndarray:
    """Derivative along ``direction``: sum_i (t . grad lambda_i) dp/dlambda_i."""
    g = gradient(coef, grad_lambda, d)
    t = np.asarray(direction, float)
    t = t.reshape(t.shape[:-1] + (1,) * (g.ndim - 2 - (t.ndim - 1)) + t.shape[-1:])
    return np.einsum("...cn,...c->...n", g, t)


@lru_cache(maxsize=None)
def product_tensor(d: int, k1: int, k2: int) -> np.ndarray:
    """Sparse-free product table P with (p q)[n] = sum P[n, a, b] p[a] q[b]."""
    P = np.zeros((n_monomials(d, k1 + k2), n_monomials(d, k1), n_monomials(d, k2)))
    table = _index_table(d, k1 + k2)
    for a, alpha in enumerate(multi_indices(d, k1)):
        for b, beta in enumerate(multi_indices(d, k2)):
            P[table[tuple(alpha + beta)], a, b] = 1.0
    P.setflags(write=False)
    return P


def multiply(p: np.ndarray, q: np.ndarray, d: int) -> np.ndarray:
    k1 = degree_of(p.shape[-1], d)
    k2 = degree_of(q.shape[-1], d)
    return np.einsum("nab,...a,...b->...n", product_tensor(d, k1, k2), p, q)


def add(p: np.ndarray, q: np.ndarray, d: int) -> np.ndarray:
    k = max(degree_of(p.shape[-1], d), degree_of(q.shape[-1], d))
    return elevate(p, d, k) + elevate(q, d, k)


def monomial_values(d: int, k: int, points: np.ndarray) -> np.ndarray:
    """Values of all degree-``k`` monomials at barycentric ``points`` -> (npts, N)."""
    pts = np.asarray(points, dtype=float).reshape(-1, d + 1)
    alphas = multi_indices(d, k)
    return np.prod(pts[:, None, :] ** alphas[None, :, :], axis=-1)


def evaluate(coef: np.ndarray, points: np.ndarray, d: int) -> np.ndarray:
    """Evaluate at barycentric points; the point axis replaces the monomial axis."""
    k = degree_of(coef.shape[-1], d)
    return coef @ monomial_values(d, k, points).T


@lru_cache(maxsize=None)
def mean_weights(d: int, k: int) -> np.ndarray:
    """``(1/|K|) int_K lambda**alpha`` for every degree-``k`` monomial."""
    alphas = multi_indices(d, k)
    w = np.array([factorial(d) * np.prod([factorial(a) for a in alpha]) / factorial(k + d)
                  for alpha in alphas])
    w.setflags(write=False)
    return w


def integrate_monomial(measure: float, alpha) -> float:
    """Closed form ``int_K lambda**alpha = d! |K| alpha! / (|alpha| + d)!``."""
    alpha = [int(a) for a in alpha]
    if min(alpha) < 0:
        raise ValueError("multi-index entries must be nonnegative")
    d = len(alpha) - 1
    num = factorial(d) * np.prod([factorial(a) for a in alpha])
    return float(measure * num / factorial(sum(alpha) + d))


@lru_cache(maxsize=None)
def gram(d: int, k1: int, k2: int) -> np.ndarray:
    """``G[a, b] = (1/|K|) int_K lambda**alpha_a lambda**beta_b``."""
    w = mean_weights(d, k1 + k2)
    G = np.einsum("nab,n->ab", product_tensor(d, k1, k2), w)
    G.setflags(write=False)
    return G


@lru_cache(maxsize=None)
def facet_mean_weights(d: int, k: int, facet: tuple) -> np.ndarray:
    """``(1/|f|) int_f lambda**alpha`` on the subsimplex spanned by vertices ``facet``.

    Monomials that involve a barycentric coordinate vanishing on ``f`` get 0.
    """
    facet = tuple(sorted(facet))
    m = len(facet) - 1
    out = np.zeros(n_monomials(d, k))
    for n, alpha in enumerate(multi_indices(d, k)):
        if any(alpha[i] > 0 for i in range(d + 1) if i not in facet):
            continue
        sub = [alpha[i] for i in facet]
        out[n] = factorial(m) * np.prod([factorial(a) for a in sub]) / factorial(k + m)
    out.setflags(write=False)
    return out


def restrict_to_facet(coef: np.ndarray, d: int, facet) -> np.ndarray:
    """Coefficients of the restriction to a subsimplex, in its own barycentrics.

    ``facet`` lists the vertex indices of the subsimplex in the order that
    defines its local barycentric coordinates.
    """
    facet = tuple(facet)
    m = len(facet) - 1
    k = degree_of(coef.shape[-1], d)
    R = np.zeros((n_monomials(m, k), n_monomials(d, k)))
    table = _index_table(m, k)
    for col, alpha in enumerate(multi_indices(d, k)):
        if any(alpha[i] > 0 for i in range(d + 1) if i not in facet):
            continue
        R[table[tuple(alpha[i] for i in facet)], col] = 1.0
    return coef @ R.T


@dataclass(frozen=True)
class BaryPoly:
    """Scalar polynomial on a d-simplex in homogenized barycentric form."""

    d: int
    coef: np.ndarray

    @property
    def degree(self) -> int:
        return degree_of(self.coef.shape[-1], self.d)

    @classmethod
    def from_terms(cls, d: int, terms: dict) -> "BaryPoly":
        k = max(sum(a) for a in terms)
        c = np.zeros(n_monomials(d, k))
        for alpha, value in terms.items():
            c = c + value * elevate(monomial(alpha), d, k)
        return cls(d, c)

    @classmethod
    def one(cls, d: int) -> "BaryPoly":
        return cls(d, np.ones(1))

    def __add__(self, other: "BaryPoly") -> "BaryPoly":
        return BaryPoly(self.d, add(self.coef, other.coef, self.d))

    def __sub__(self, other: "BaryPoly") -> "BaryPoly":
        return self + other * -1.0

    def __mul__(self, other):
        if isinstance(other, BaryPoly):
            return BaryPoly(self.d, multiply(self.coef, other.coef, self.d))
        return BaryPoly(self.d, self.coef * other)

    __rmul__ = __mul__

    def elevate(self, k: int) -> "BaryPoly":
        return BaryPoly(self.d, elevate(self.coef, self.d, k))

    def __call__(self, points) -> np.ndarray:
        return evaluate(self.coef, points, self.d)

    def grad(self, grad_lambda) -> np.ndarray:
        return gradient(self.coef, np.asarray(grad_lambda), self.d)

    def derivative(self, direction, grad_lambda) -> "BaryPoly":
        return BaryPoly(self.d, directional_derivative(
            self.coef, np.asarray(direction, float), np.asarray(grad_lambda, float), self.d))

    def integral(self, measure: float) -> float:
        return float(measure * self.coef @ mean_weights(self.d, self.degree))


def vech_pairs(d: int) -> list[tuple[int, int]]:
    """Upper-triangle index pairs, row major: the independent symmetric components."""
    return [(a, b) for a in range(d) for b in range(a, d)]


@dataclass(frozen=True)
class SymTensorPoly:
    """Symmetric-matrix valued polynomial; components stored once, ``(..., ncomp, N)``."""

    d: int
    comps: np.ndarray

    @classmethod
    def from_full(cls, full: np.ndarray, d: int) -> "SymTensorPoly":
        pairs = vech_pairs(d)
        comps = np.stack([0.5 * (full[..., a, b, :] + full[..., b, a, :]) for a, b in pairs], axis=-2)
        return cls(d, comps)

    @classmethod
    def from_scalar(cls, p: np.ndarray, matrix: np.ndarray, d: int) -> "SymTensorPoly":
        """``p * S`` for a scalar polynomial and a (batched) constant symmetric matrix."""
        matrix = np.asarray(matrix, float)
        full = matrix[..., :, :, None] * p[..., None, None, :]
        return cls.from_full(full, d)

    @property
    def degree(self) -> int:
        return degree_of(self.comps.shape[-1], self.d)

    def full(self) -> np.ndarray:
        d = self.d
        shape = self.comps.shape[:-2] + (d, d, self.comps.shape[-1])
        out = np.empty(shape)
        for n, (a, b) in enumerate(vech_pairs(d)):
            out[..., a, b, :] = self.comps[..., n, :]
            out[..., b, a, :] = self.comps[..., n, :]
        return out

    def __add__(self, other: "SymTensorPoly") -> "SymTensorPoly":
        k = max(self.degree, other.degree)
        return SymTensorPoly(self.d, elevate(self.comps, self.d, k) + elevate(other.comps, self.d, k))

    def __mul__(self, s):
        return SymTensorPoly(self.d, self.comps * s)

    __rmul__ = __mul__

    def elevate(self, k: int) -> "SymTensorPoly":
        return SymTensorPoly(self.d, elevate(self.comps, self.d, k))

    def __call__(self, points) -> np.ndarray:
        """Full matrices at barycentric points: ``(..., npts, d, d)``."""
        vals = evaluate(self.full(), points, self.d)
        return np.moveaxis(vals, -1, -3)

    def div(self, grad_lambda) -> np.ndarray:
        """Row-wise divergence as vector polynomial coefficients ``(..., d, N')``."""
        g = gradient(self.full(), np.asarray(grad_lambda, float), self.d)
        # g[..., a, b, c, n] = d/dx_c tau_ab
        return np.einsum("...abbn->...an", g)
