"""Command-line driver: convergence studies on the unit square and certification suites."""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exact import ExactSolution
from .mesh import read_mesh, uniform_square_mesh
from .solver import ErrorReport, Material, run_level

HEADER = "h,sigma_L2,order,Qhu_L2,order,Qhu_1h,order"
COLUMNS = ("sigma_L2", "Qhu_L2", "Qhu_1h")


@dataclass
class StudyConfig:
    elements: list[str] = field(default_factory=lambda: ["full"])
    lambdas: list[float] = field(default_factory=lambda: [1.0])
    mu: float = 1.0
    levels: list[int] = field(default_factory=lambda: list(range(1, 7)))
    quad_cell: int = 16
    quad_face: int = 10
    out: Path = Path("results")
    certify: list[str] = field(default_factory=list)
    mesh_file: Path | None = None

    def __post_init__(self):
        self.levels = sorted(self.levels)
        if any(lv < 0 for lv in self.levels):
            raise ValueError("levels must be non-negative")
        if any(not lam > 0 for lam in self.lambdas):
            raise ValueError("lambda entries must be positive or inf")
        for e in self.elements:
            if e not in ("full", "reduced"):
                raise ValueError(f"unknown element {e!r}")


@dataclass
class StudyRow:
    level: int | None
    h: float
    report: ErrorReport | None
    error: str = ""

    @property
    def failed(self) -> bool:
        return self.report is None


def lambda_tag(lam: float) -> str:
    """File-name form of lambda: ``inf``, ``1``, ``1000``, ``1e6``."""
    if math.isinf(lam):
        return "inf"
    if lam == int(lam) and lam < 1e5:
        return str(int(lam))
    if 1e-3 <= lam < 1e5:
        return f"{lam:g}"
    mant, exp = f"{lam:.6e}".split("e")
    mant = mant.rstrip("0").rstrip(".")
    return f"{mant}e{int(exp)}"


def parse_lambda(text: str) -> list[float]:
    out = []
    for tok in text.replace(" ", "").split(","):
        if tok:
            out.append(math.inf if tok.lower() in ("inf", "infinity") else float(tok))
    return out


def parse_levels(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(t) for t in text.split(",") if t]


def orders(rows: list[StudyRow]) -> list[dict[str, float | None]]:
    """log2 ratios of consecutive levels; ``None`` where undefined."""
    out: list[dict[str, float | None]] = []
    for i, row in enumerate(rows):
        prev = rows[i - 1] if i > 0 else None
        ok = (prev is not None and not row.failed and not prev.failed
              and row.level is not None and prev.level == row.level - 1)
        o: dict[str, float | None] = {}
        for c in COLUMNS:
            if ok:
                a, b = getattr(prev.report, c), getattr(row.report, c)
                o[c] = math.log2(a / b) if a > 0 and b > 0 else None
            else:
                o[c] = None
        out.append(o)
    return out


def run_study(config: StudyConfig, log=print) -> dict[tuple[str, float], list[StudyRow]]:
    exact = ExactSolution(config.mu)
    results: dict[tuple[str, float], list[StudyRow]] = {}
    for element in config.elements:
        for lam in config.lambdas:
            material = Material(config.mu, lam)
            rows = []
            if config.mesh_file is not None:
                meshes = [(None, read_mesh(config.mesh_file))]
            else:
                meshes = [(lv, None) for lv in config.levels]
            for level, mesh in meshes:
                h = 2.0 ** -level if level is not None else math.nan
                try:
                    if mesh is None:
                        mesh = uniform_square_mesh(2 ** level)
                    report, _ = run_level(mesh, element, material, exact,
                                          config.quad_cell, config.quad_face)
                    if level is None:
                        h = report.h
                    rows.append(StudyRow(level, h, report))
                except Exception as exc:  # a failed level is recorded and the study continues
                    rows.append(StudyRow(level, h, None, f"{type(exc).__name__}: {exc}"))
                log(format_row(element, lam, rows[-1]))
            results[(element, lam)] = rows
    return results


def format_row(element: str, lam: float, row: StudyRow) -> str:
    lv = "file" if row.level is None else str(row.level)
    if row.failed:
        return f"{element} lambda={lambda_tag(lam)} level={lv}: FAILED ({row.error})"
    r = row.report
    return (f"{element} lambda={lambda_tag(lam)} level={lv}: "
            f"{r.sigma_L2:.4E} {r.Qhu_L2:.4E} {r.Qhu_1h:.4E}")


def _fmt(x: float | None) -> str:
    return "-" if x is None else f"{x:.2f}"


def csv_text(rows: list[StudyRow]) -> str:
    lines = [HEADER]
    for row, o in zip(rows, orders(rows)):
        if row.failed:
            lines.append(f"{row.h:.4E},failed,-,failed,-,failed,-")
            continue
        cells = [f"{row.h:.4E}"]
        for c in COLUMNS:
            cells += [f"{getattr(row.report, c):.4E}", _fmt(o[c])]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def dat_text(rows: list[StudyRow]) -> str:
    lines = ["# h sigma_L2 Qhu_L2 Qhu_1h"]
    for row in rows:
        if not row.failed:
            r = row.report
            lines.append(f"{row.h:.4E} {r.sigma_L2:.4E} {r.Qhu_L2:.4E} {r.Qhu_1h:.4E}")
    return "\n".join(lines) + "\n"


def emit_outputs(results: dict[tuple[str, float], list[StudyRow]], out: Path) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for (element, lam), rows in results.items():
        stem = f"study_{element}_lambda{lambda_tag(lam)}"
        for suffix, text in ((".csv", csv_text(rows)), (".dat", dat_text(rows))):
            path = out / (stem + suffix)
            path.write_text(text)
            written.append(path)
    return written


def run_certification(kind: str, out: Path, log=print) -> bool:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if kind == "elements":
        from .certify import certify_elements_2d
        reports = [("elements2d", certify_elements_2d())]
    elif kind == "elements3d":
        from .certify import certify_elements_3d
        reports = [("elements3d", certify_elements_3d())]
    elif kind == "complex":
        from .discrete_complex import certify_exactness
        reports = [(f"complex_{variant}_n{n}", certify_exactness(uniform_square_mesh(n), variant))
                   for variant in ("full", "reduced") for n in (1, 2, 4)]
    else:
        raise ValueError(f"unknown certification {kind!r}")
    ok = True
    for name, rep in reports:
        log(rep.to_text())
        (out / f"cert_{name}.json").write_text(rep.to_json() + "\n")
        ok = ok and rep.passed
    log(f"certification {kind}: {'PASS' if ok else 'FAIL'}")
    return ok


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="symhdiv", description=__doc__)
    p.add_argument("--element", nargs="+", choices=["full", "reduced"], default=["full"])
    p.add_argument("--lambda", dest="lambdas", type=parse_lambda, default=[1.0],
                   help="comma-separated list, 'inf' allowed (e.g. 1,1000,1e6,inf)")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--levels", type=parse_levels, default=list(range(1, 7)),
                   help="mesh levels a..b with h = 2^-level (default 1..6)")
    p.add_argument("--quad-cell", type=int, default=16, help="cell quadrature degree")
    p.add_argument("--quad-face", type=int, default=10, help="edge quadrature degree")
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--certify", action="append", choices=["elements", "complex", "elements3d"],
                   help="run a certification suite instead of a study (repeatable)")
    p.add_argument("--mesh-file", type=Path, default=None,
                   help="solve on an imported triangle mesh instead of the level sequence")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    np.seterr(all="ignore")
    if args.certify:
        ok = True
        for kind in args.certify:
            ok = run_certification(kind, args.out) and ok
        return 0 if ok else 1
    try:
        config = StudyConfig(args.element, args.lambdas, args.mu, args.levels, args.quad_cell,
                             args.quad_face, args.out, [], args.mesh_file)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    results = run_study(config)
    for path in emit_outputs(results, config.out):
        print(f"wrote {path}")
    failed = any(row.failed for rows in results.values() for row in rows)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
