import numpy as np

from symhdiv.mesh import build_mesh, uniform_square_mesh


class RandomTensorField:
    """Symmetric tensor field mixing plane-wave sines with a cubic polynomial,
    together with its exact row-wise divergence."""

    def __init__(self, rng: np.random.Generator, n_waves: int = 3):
        self.k = rng.uniform(-4.0, 4.0, size=(3, n_waves, 2))
        self.phase = rng.uniform(0.0, 2 * np.pi, size=(3, n_waves))
        self.amp = rng.standard_normal((3, n_waves))
        self.poly = rng.standard_normal((3, 4, 4)) * 0.3  # coefficients of x^i y^j, i + j <= 3
        self.poly *= np.add.outer(np.arange(4), np.arange(4)) <= 3

    def _comp(self, c, x):
        X, Y = x[..., 0], x[..., 1]
        arg = np.einsum("wc,...c->...w", self.k[c], x) + self.phase[c]
        val = np.sin(arg) @ self.amp[c]
        return val + np.polynomial.polynomial.polyval2d(X, Y, self.poly[c])

    def _dcomp(self, c, x, axis):
        X, Y = x[..., 0], x[..., 1]
        arg = np.einsum("wc,...c->...w", self.k[c], x) + self.phase[c]
        val = np.cos(arg) @ (self.amp[c] * self.k[c][:, axis])
        P = self.poly[c]
        dP = np.polynomial.polynomial.polyder(P, axis=axis)
        return val + np.polynomial.polynomial.polyval2d(X, Y, dP)

    def __call__(self, x):
        out = np.empty(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = self._comp(0, x)
        out[..., 1, 1] = self._comp(1, x)
        out[..., 0, 1] = out[..., 1, 0] = self._comp(2, x)
        return out

    def div(self, x):
        d0 = self._dcomp(0, x, 0) + self._dcomp(2, x, 1)
        d1 = self._dcomp(2, x, 0) + self._dcomp(1, x, 1)
        return np.stack([d0, d1], axis=-1)


def jittered_square_mesh(n: int, rng: np.random.Generator, amount: float = 0.2):
    base = uniform_square_mesh(n)
    v = base.vertices.copy()
    interior = np.all((v > 1e-12) & (v < 1 - 1e-12), axis=1)
    v[interior] += rng.uniform(-amount, amount, size=(interior.sum(), 2)) / n
    return build_mesh(v, base.cells)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
