"""Manufactured solution on the unit square with homogeneous displacement data.

The displacement is divergence free, so the stress ``2 mu eps(u)`` and the
load ``f = -div sigma = -mu Laplace(u)`` do not depend on lambda.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PI = np.pi


@dataclass(frozen=True)
class ExactSolution:
    mu: float = 1.0

    def u(self, x: np.ndarray) -> np.ndarray:
        X, Y = x[..., 0], x[..., 1]
        u1 = PI * np.sin(PI * X) ** 2 * np.sin(PI * Y) * np.cos(PI * Y)
        u2 = -PI * np.sin(PI * X) * np.cos(PI * X) * np.sin(PI * Y) ** 2
        return np.stack([u1, u2], axis=-1)

    def strain(self, x: np.ndarray) -> np.ndarray:
        X, Y = x[..., 0], x[..., 1]
        e11 = 0.5 * PI ** 2 * np.sin(2 * PI * X) * np.sin(2 * PI * Y)
        e12 = 0.5 * PI ** 2 * (np.sin(PI * X) ** 2 * np.cos(2 * PI * Y)
                               - np.cos(2 * PI * X) * np.sin(PI * Y) ** 2)
        out = np.empty(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = e11
        out[..., 1, 1] = -e11
        out[..., 0, 1] = out[..., 1, 0] = e12
        return out

    def sigma(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * self.mu * self.strain(x)

    def f(self, x: np.ndarray) -> np.ndarray:
        X, Y = x[..., 0], x[..., 1]
        f1 = -self.mu * PI ** 3 * np.sin(2 * PI * Y) * (2 * np.cos(2 * PI * X) - 1)
        f2 = self.mu * PI ** 3 * np.sin(2 * PI * X) * (2 * np.cos(2 * PI * Y) - 1)
        return np.stack([f1, f2], axis=-1)

    def div_sigma(self, x: np.ndarray) -> np.ndarray:
        return -self.f(x)

    def div_u(self, x: np.ndarray) -> np.ndarray:
        X, Y = x[..., 0], x[..., 1]
        d1 = PI ** 2 * np.sin(2 * PI * X) * np.sin(PI * Y) * np.cos(PI * Y)
        d2 = -PI ** 2 * np.sin(PI * X) * np.cos(PI * X) * np.sin(2 * PI * Y)
        return d1 + d2
