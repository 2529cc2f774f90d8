"""Element certification suites (2D elements, 3D elements) with JSON reports."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import elem2d
from . import elem_nd
from . import polybasis as pb
from .mesh import build_geometry, build_mesh
from .quadrature import gauss_line

D = 2


@dataclass
class CertReport:
    name: str
    residuals: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def record(self, key: str, value: float, tol: float) -> None:
        old = self.residuals.get(key, 0.0)
        self.residuals[key] = max(old, float(value))
        self.checks[f"{key} < {tol:g}"] = self.residuals[key] < tol

    def to_json(self) -> str:
        d = asdict(self)
        d["passed"] = self.passed
        return json.dumps(d, indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [self.name]
        lines += [f"  [{'PASS' if ok else 'FAIL'}] {k}" for k, ok in self.checks.items()]
        return "\n".join(lines)


def min_angle(v: np.ndarray) -> float:
    angles = []
    for i in range(3):
        a = v[(i + 1) % 3] - v[i]
        b = v[(i + 2) % 3] - v[i]
        angles.append(np.degrees(np.arccos(np.dot(a, b) / np.linalg.norm(a) / np.linalg.norm(b))))
    return min(angles)


def _cross2(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def random_triangle(rng: np.random.Generator, min_deg: float = 10.0) -> np.ndarray:
    while True:
        v = rng.uniform(-1.0, 1.0, size=(3, 2))
        if min_angle(v) > min_deg:
            return v


def edge_points(i: int, s: np.ndarray) -> np.ndarray:
    """Barycentric points on local edge ``i`` at parameters ``s`` (from vertex j to k)."""
    j, k = (i + 1) % 3, (i + 2) % 3
    pts = np.zeros((len(s), 3))
    pts[:, j] = 1.0 - s
    pts[:, k] = s
    return pts


def _legendre(n: int, s: np.ndarray) -> np.ndarray:
    return np.polynomial.legendre.legval(2 * s - 1, np.eye(n + 1)[n])


def edge_legendre_moment(values: np.ndarray, n: int, rule) -> np.ndarray:
    return values @ (rule.weights * _legendre(n, rule.points[:, 1]))


def affine_residual(coef: np.ndarray, d: int = D) -> float:
    """Distance (max coefficient) of polys ``(..., N_k)`` from the affine ones."""
    k = pb.degree_of(coef.shape[-1], d)
    if k <= 1:
        return 0.0
    E = pb.elevation_matrix(d, 1, k - 1)
    P = E @ np.linalg.pinv(E)
    return float(np.abs(coef - coef @ P.T).max())


def _edge_frame(geom, i):
    j, k = (i + 1) % 3, (i + 2) % 3
    t = geom.t[j, k] / np.linalg.norm(geom.t[j, k])
    return t, np.array([t[1], -t[0]])


def check_psi(report: CertReport, geom, tol: float = 1e-11) -> None:
    s = np.linspace(0.1, 0.9, 5)
    for i in range(3):
        psi = elem2d.eval_psi(geom, i)
        for e in range(3):
            t, n = _edge_frame(geom, e)
            vals = psi(edge_points(e, s))  # (5, 2, 2)
            if e != i:
                report.record("psi_i n on e_j, e_k", np.abs(vals @ n).max(), tol)
            else:
                j, k = (i + 1) % 3, (i + 2) % 3
                lam_j, lam_k = 1.0 - s, s
                report.record("t^T psi_i n on e_i", np.abs(np.einsum("qab,a,b->q", vals, t, n)).max(), tol)
                nn = np.einsum("qab,a,b->q", vals, n, n)
                report.record("n^T psi_i n - 10 l_j l_k^2 on e_i", np.abs(nn - 10 * lam_j * lam_k ** 2).max(), tol)
        report.record("div psi_i affine", affine_residual(psi.div(geom.grad_lambda)), tol)


def check_spanning_set(report: CertReport, geom, tol: float = 1e-11) -> None:
    span = elem2d.spanning_set_sigma(geom)
    rule = gauss_line(8)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        _, n = _edge_frame(geom, i)
        pts = edge_points(i, rule.points[:, 1])
        nn = np.einsum("qab,a,b->q", np.moveaxis(pb.evaluate(span[9 + 2 * i], pts, D), -1, 0), n, n)
        lam_j, lam_k = rule.points[:, 0], rule.points[:, 1]
        report.record("phi_{i,1} nn-moment vs l_j equals 1", abs(nn @ (rule.weights * lam_j) - 1.0), tol)
        report.record("phi_{i,1} nn-moment vs l_k equals 0", abs(nn @ (rule.weights * lam_k)), tol)
    # vertex functions
    for v in range(3):
        for c, M in enumerate((elem2d.E11, elem2d.E22, elem2d.S12)):
            vals = np.moveaxis(pb.evaluate(span[3 * v + c], np.eye(3), D), -1, 0)
            expect = np.zeros((3, 2, 2))
            expect[v] = M
            report.record("vertex function values", np.abs(vals - expect).max(), tol)


def check_bubbles(report: CertReport, geom, tol: float = 1e-11) -> None:
    bub = np.array(elem2d.interior_bubble_basis(geom))
    s = np.linspace(0.0, 1.0, 7)
    for e in range(3):
        _, n = _edge_frame(geom, e)
        vals = np.moveaxis(pb.evaluate(bub, edge_points(e, s), D), -1, 1)  # (3, q, 2, 2)
        report.record("bubble normal trace", np.abs(vals @ n).max(), tol)
    divs = elem2d.tensor_div(bub, geom)
    G = pb.gram(D, 2, 2)
    gram = geom.measure * np.einsum("ian,nm,jam->ij", divs, G, divs)
    cond = np.linalg.cond(gram)
    report.residuals["bubble div Gram condition"] = max(report.residuals.get("bubble div Gram condition", 0.0), float(cond))
    report.checks["bubble div Gram nonsingular"] = report.checks.get("bubble div Gram nonsingular", True) and cond < 1e12
    rel = geom.vertices - geom.barycenter()
    rm = np.zeros((3, 2, 3))
    rm[0, 0] = 1.0
    rm[1, 1] = 1.0
    rm[2, 0] = -rel[:, 1]
    rm[2, 1] = rel[:, 0]
    G21 = pb.gram(D, 2, 1)
    ip = geom.measure * np.einsum("ian,nm,ram->ir", divs, G21, rm)
    report.record("(div bubble, RM)", np.abs(ip).max(), tol)


def _random_quadratic_tensor(rng, geom, deg: int) -> np.ndarray:
    """Random symmetric tensor of the given degree as degree-3 full coefficients."""
    c = rng.standard_normal((3, pb.n_monomials(D, deg)))
    full = np.empty((2, 2, c.shape[1]))
    full[0, 0], full[1, 1] = c[0], c[1]
    full[0, 1] = full[1, 0] = c[2]
    return pb.elevate(full, D, 3)


def check_nodal(report: CertReport, geom, frames, rng, tol_dual: float = 1e-10, tol_rep: float = 1e-11) -> None:
    full = elem2d.nodal_basis(geom, frames, "full")
    red = elem2d.nodal_basis(geom, frames, "reduced")
    Df = elem2d.apply_dofs(full.coef, geom, frames, elem2d.N_FULL)
    Dr = elem2d.apply_dofs(red.coef, geom, frames, elem2d.N_REDUCED)
    report.record("duality full", np.abs(Df - np.eye(21)).max(), tol_dual)
    report.record("duality reduced", np.abs(Dr - np.eye(18)).max(), tol_dual)
    report.residuals["max DoF condition"] = max(report.residuals.get("max DoF condition", 0.0),
                                                float(full.condition), float(red.condition))
    report.checks["DoF condition < 1e7"] = report.residuals["max DoF condition"] < 1e7
    for _ in range(6):
        tau = _random_quadratic_tensor(rng, geom, 2)
        dofs = elem2d.apply_dofs(tau[None], geom, frames, elem2d.N_FULL)[:, 0]
        back = np.einsum("l,labn->abn", dofs, full.coef)
        report.record("P2 in Sigma(K) reproduction", np.abs(back - tau).max() / np.abs(tau).max(), tol_rep)
        tau1 = _random_quadratic_tensor(rng, geom, 1)
        dofs = elem2d.apply_dofs(tau1[None], geom, frames, elem2d.N_REDUCED)[:, 0]
        back = np.einsum("l,labn->abn", dofs, red.coef)
        report.record("P1 in Sigma^r(K) reproduction", np.abs(back - tau1).max() / np.abs(tau1).max(), tol_rep)
    # shape-space membership of the full basis
    report.record("full basis div affine", affine_residual(full.div(geom)), tol_rep)
    report.record("reduced basis div in RM",
                  _rm_residual(geom, red.div(geom)), tol_rep)
    rule = gauss_line(10)
    for i in range(3):
        t, n = _edge_frame(geom, i)
        vals = np.moveaxis(pb.evaluate(full.coef, edge_points(i, rule.points[:, 1]), D), -1, 1)
        tn = np.einsum("lqab,a,b->lq", vals, t, n)
        report.record("t^T phi n cubic edge moment", np.abs(edge_legendre_moment(tn, 3, rule)).max(), tol_rep)
    # reduced 3x3 corrections
    funcs = elem2d.reduced_functions(geom)
    span = elem2d.spanning_set_sigma(geom)
    dv = elem2d.tensor_div(funcs, geom)
    db = elem2d.tensor_div(span[18:], geom)
    ip = geom.measure * np.einsum("ian,nm,jam->ij", dv, pb.gram(D, 2, 2), db)
    report.record("(div phi~_i, div phi_18..20)", np.abs(ip).max(), tol_rep)


def _rm_residual(geom, divs: np.ndarray) -> float:
    """Max coefficient distance of quadratic vector polys from RM."""
    rel = geom.vertices - geom.barycenter()
    rm = np.zeros((3, 2, 3))
    rm[0, 0] = 1.0
    rm[1, 1] = 1.0
    rm[2, 0] = -rel[:, 1]
    rm[2, 1] = rel[:, 0]
    R = pb.elevate(rm, D, 2).reshape(3, -1).T  # (12, 3)
    X = divs.reshape(len(divs), -1).T
    coef, *_ = np.linalg.lstsq(R, X, rcond=None)
    return float(np.abs(R @ coef - X).max())


def check_bell(report: CertReport, geom, tol: float = 1e-10) -> None:
    bell = elem2d.bell_basis(geom)
    D_ = elem2d.bell_dofs(bell.coef, geom)
    report.record("Bell duality", np.abs(D_ - np.eye(18)).max(), tol)
    C = elem2d.bell_edge_constraints(bell.coef, geom)
    scale = max(1.0, float(np.abs(bell.coef).max()))
    report.record("Bell quartic edge moment of d_n q", np.abs(C).max() / scale, tol)


def check_continuity(report: CertReport, rng, tol: float = 1e-10) -> None:
    """Two triangles sharing an edge: shared DoFs equal, others random; jump of tau n."""
    from .spaces import StressSpace

    a, b = random_triangle(rng), None
    while True:
        p = rng.uniform(-1.0, 1.0, 2)
        tri = np.array([a[1], a[2], p])
        if min_angle(tri) > 10.0 and _cross2(a[2] - a[1], p - a[1]) * _cross2(a[2] - a[1], a[0] - a[1]) < 0:
            b = p
            break
    verts = np.vstack([a, b])
    mesh = build_mesh(verts, [[0, 1, 2], [1, 3, 2]])
    for variant in ("full", "reduced"):
        space = StressSpace(mesh, variant)
        x = rng.standard_normal(space.dim)
        tau = space.local(x)
        shared = int(np.intersect1d(mesh.cell_edges[0], mesh.cell_edges[1])[0])
        s = np.linspace(0.0, 1.0, 9)
        V = mesh.vertices[mesh.edges[shared]]
        xs = V[0] + s[:, None] * (V[1] - V[0])
        vals = []
        for t in range(2):
            geom = build_geometry(mesh, t)
            M = np.concatenate([geom.vertices, np.ones((3, 1))], axis=1)
            bpts = np.linalg.solve(M.T, np.concatenate([xs, np.ones((len(s), 1))], axis=1).T).T
            vals.append(np.moveaxis(pb.evaluate(tau[t], bpts, D), -1, 0))
        from .mesh import entity_frames
        n = entity_frames(mesh).face_normal[shared]
        report.record(f"cross-edge tau n jump ({variant})", np.abs((vals[0] - vals[1]) @ n).max(), tol)


def certify_elements_2d(n_random: int = 50, seed: int = 0) -> CertReport:
    rng = np.random.default_rng(seed)
    report = CertReport("2D element certification")
    for _ in range(n_random):
        verts = random_triangle(rng)
        geom, frames = elem2d.reference_cell(verts)
        check_psi(report, geom)
        check_spanning_set(report, geom)
        check_bubbles(report, geom)
        check_nodal(report, geom, frames, rng)
        check_bell(report, geom)
    for _ in range(10):
        check_continuity(report, rng)
    return report


def certify_elements_3d(n_random: int = 20, seed: int = 0) -> CertReport:
    rng = np.random.default_rng(seed)
    report = CertReport("3D element certification")
    for _ in range(n_random):
        r = elem_nd.unisolvence_nd(elem_nd.random_tetrahedron(rng), seed=int(rng.integers(1 << 30)))
        for k, ok in r.checks.items():
            report.checks[k] = report.checks.get(k, True) and ok
        for k, v in r.max_residuals.items():
            report.residuals[k] = max(report.residuals.get(k, 0.0), v)
        report.residuals["max cond full"] = max(report.residuals.get("max cond full", 0.0), r.cond_full)
        report.residuals["max cond reduced"] = max(report.residuals.get("max cond reduced", 0.0), r.cond_reduced)
    return report
