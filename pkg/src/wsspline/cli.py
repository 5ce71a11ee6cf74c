"""``ws-splines`` command line tool.

Exit codes: 0 success, 1 verification failure, 2 parse error or bad flag,
3 geometric degeneracy, 4 Hermite data does not match the space dimension,
5 spline file written for a different mesh.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .geometry import DegenerateTriangleError, Triangle, to_bary, ws_dimension, ws_split
from .global_space import (
    GlobalSpline,
    NonconformingMeshError,
    Triangulation,
    dimension,
    eval_global,
    fit_hermite,
)
from .checks import run_all
from .functions import BUILTINS, builtin
from .io import (
    HermiteFormatError,
    MeshFormatError,
    MeshMismatchError,
    SplineFormatError,
    fmt,
    hermite_local_data,
    read_hermite,
    read_mesh,
    read_spline,
    sample_obj,
    split_csv,
    split_svg,
    write_spline,
)
from .local_basis import KNOT_SETS, build_local_basis, hermite_interpolate, hermite_matrix
from .smoothness import canonicalize_edge, verify_smoothness

EXIT_FAIL, EXIT_PARSE, EXIT_DEGENERATE, EXIT_DIMENSION, EXIT_HASH = 1, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_mesh(path) -> Triangulation:
    try:
        return read_mesh(path)
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot read mesh: {exc}") from None
    except MeshFormatError as exc:
        raise CliError(EXIT_PARSE, f"mesh parse error: {exc}") from None
    except (NonconformingMeshError, DegenerateTriangleError) as exc:
        raise CliError(EXIT_DEGENERATE, f"degenerate mesh: {exc}") from None
    except ValueError as exc:
        raise CliError(EXIT_PARSE, f"mesh parse error: {exc}") from None


def _triangle(coords) -> Triangle:
    try:
        return Triangle(np.array(coords, dtype=float).reshape(3, 2))
    except DegenerateTriangleError as exc:
        raise CliError(EXIT_DEGENERATE, f"degenerate triangle: {exc}") from None


def _triangles(args) -> list[Triangle]:
    if args.mesh:
        T = _load_mesh(args.mesh)
        return [b.triangle for b in T.bases]
    return [_triangle(args.triangle)]


def _write(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_split(args) -> int:
    if args.degree < 1:
        raise CliError(EXIT_PARSE, "--degree must be >= 1")
    splits = [ws_split(t, args.degree) for t in _triangles(args)]
    sp = splits[0]
    if args.out:
        if args.format == "svg":
            _write(f"{args.out}.svg", split_svg(splits))
        else:
            vcsv, ccsv = split_csv(splits)
            _write(f"{args.out}_vertices.csv", vcsv)
            _write(f"{args.out}_cells.csv", ccsv)
    print(f"interior lines: {len(sp.interior_lines)}, vertices: {len(sp.vertices)}, "
          f"cells: {sp.n_cells}, dim: {ws_dimension(args.degree)}")
    return 0


def _basis_rows(basis, what: str) -> tuple[str, list[list[str]]]:
    if what == "weights":
        return "i,weight", [[str(i + 1), fmt(w)] for i, w in enumerate(basis.weights)]
    if what == "domain-points":
        xy = basis.domain_points_xy()
        return "i,beta1,beta2,beta3,x,y", [
            [str(i + 1)] + [fmt(c) for c in basis.domain_points[i]] + [fmt(c) for c in xy[i]]
            for i in range(28)]
    if what == "knots":
        return "i,knots", [[str(i + 1), " ".join(ks)] for i, ks in enumerate(KNOT_SETS)]
    H = hermite_matrix(basis)  # H[i, j] = rho_j(B_i)
    return "i," + ",".join(f"rho{j + 1}" for j in range(28)), [
        [str(i + 1)] + [fmt(v) for v in H[i]] for i in range(28)]


def cmd_basis_table(args) -> int:
    basis = build_local_basis(_triangle(args.triangle))
    header, rows = _basis_rows(basis, args.what)
    sys.stdout.write(header + "\n" + "".join(",".join(r) + "\n" for r in rows))
    return 0


def _smoothness_residual(s: GlobalSpline) -> float:
    T = s.triangulation
    worst = 0.0
    for e in T.interior_edges:
        edge = canonicalize_edge(T.vertices, T.triangles, e)
        a, b = T.vertices[list(e)]
        rep = verify_smoothness((T.bases[edge.left], s.local(edge.left)),
                                (T.bases[edge.right], s.local(edge.right)), a, b, order=2)
        worst = max(worst, max(rep.values()))
    return worst


def cmd_fit(args) -> int:
    T = _load_mesh(args.mesh)
    if args.hermite:
        try:
            data = read_hermite(args.hermite)
        except OSError as exc:
            raise CliError(EXIT_PARSE, f"cannot read Hermite file: {exc}") from None
        except HermiteFormatError as exc:
            raise CliError(EXIT_PARSE, f"Hermite parse error: {exc}") from None
        need = dimension(T)
        if len(data) != need:
            raise CliError(EXIT_DIMENSION, f"Hermite file has {len(data)} records, the space needs {need}")
        try:
            C = np.array([hermite_interpolate(T.bases[t], hermite_local_data(T, data, t), "Bt").values
                          for t in range(T.n_triangles)])
        except HermiteFormatError as exc:
            raise CliError(EXIT_DIMENSION, str(exc)) from None
        s = GlobalSpline(T, C)
    else:
        s = fit_hermite(T, builtin(args.sample_fn, args.seed))
    write_spline(s, args.out)
    print(f"max smoothness residual: {fmt(_smoothness_residual(s))}")
    return 0


def _domain_grid(T: Triangulation, n: int) -> np.ndarray:
    lo, hi = T.vertices.min(axis=0), T.vertices.max(axis=0)
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    P = np.array([(x, y) for y in ys for x in xs])
    inside = np.zeros(len(P), dtype=bool)
    for b in T.bases:
        inside |= (to_bary(b.triangle, P) >= -1e-12).all(axis=1)
    return P[inside]


def _threads() -> int:
    raw = os.environ.get("WS_SPLINES_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def sample_grid(s: GlobalSpline, n: int, threads: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Grid points inside the mesh and the spline values there."""
    P = _domain_grid(s.triangulation, n)
    threads = threads or _threads()
    chunks = [c for c in np.array_split(P, threads) if len(c)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        vals = list(pool.map(lambda c: np.atleast_1d(eval_global(s, c)), chunks))
    return P, np.concatenate(vals) if vals else np.empty(0)


def cmd_sample(args) -> int:
    T = _load_mesh(args.mesh)
    try:
        s = read_spline(args.spline, T)
    except MeshMismatchError as exc:
        raise CliError(EXIT_HASH, str(exc)) from None
    except SplineFormatError as exc:
        raise CliError(EXIT_PARSE, str(exc)) from None
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_PARSE, f"cannot read spline: {exc}") from None
    if args.grid < 2:
        raise CliError(EXIT_PARSE, "--grid must be >= 2")
    if str(args.out).lower().endswith(".obj"):
        _write(args.out, sample_obj(s, args.grid))
        return 0
    P, vals = sample_grid(s, args.grid)
    rows = ["x,y,s"] + [f"{fmt(x)},{fmt(y)},{fmt(v)}" for (x, y), v in zip(P, vals)]
    _write(args.out, "\n".join(rows) + "\n")
    return 0


def cmd_verify(args) -> int:
    if args.mesh:
        T = _load_mesh(args.mesh)
    else:
        T = Triangulation(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]))
    results = run_all(T, seed=args.seed, broken=args.break_coefficient)
    for r in results:
        extra = f" ({r.detail})" if r.detail else ""
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: max residual {r.residual:.3e}{extra}")
    return 0 if all(r.passed for r in results) else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ws-splines", description="C^2 cubic splines on Wang-Shi split triangulations")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("split", help="build the WS_d split of a triangle or mesh")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--mesh")
    src.add_argument("--triangle", nargs=6, type=float, metavar=("X1", "Y1", "X2", "Y2", "X3", "Y3"))
    sp.add_argument("--degree", type=int, default=3)
    sp.add_argument("--out", help="output prefix")
    sp.add_argument("--format", choices=("csv", "svg"), default="csv")
    sp.set_defaults(func=cmd_split)

    bt = sub.add_parser("basis-table", help="dump local basis data as CSV")
    bt.add_argument("--triangle", nargs=6, type=float, required=True, metavar=("X1", "Y1", "X2", "Y2", "X3", "Y3"))
    bt.add_argument("--what", choices=("weights", "domain-points", "hermite-matrix", "knots"), required=True)
    bt.set_defaults(func=cmd_basis_table)

    ft = sub.add_parser("fit", help="fit a global C^2 spline from Hermite data")
    ft.add_argument("--mesh", required=True)
    data = ft.add_mutually_exclusive_group(required=True)
    data.add_argument("--hermite")
    data.add_argument("--sample-fn", choices=sorted(BUILTINS))
    ft.add_argument("--seed", type=int, default=0, help="seed for the random builtin")
    ft.add_argument("--out", required=True)
    ft.set_defaults(func=cmd_fit)

    sa = sub.add_parser("sample", help="sample a spline on a grid (CSV) or export an OBJ")
    sa.add_argument("--spline", required=True)
    sa.add_argument("--mesh", required=True)
    sa.add_argument("--grid", type=int, default=21)
    sa.add_argument("--out", required=True, help="output file; a .obj suffix selects OBJ")
    sa.set_defaults(func=cmd_sample)

    ve = sub.add_parser("verify", help="run the numerical self-checks")
    ve.add_argument("--mesh")
    ve.add_argument("--seed", type=int, default=0)
    ve.add_argument("--break-coefficient", action="store_true", help=argparse.SUPPRESS)
    ve.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"ws-splines: {exc}", file=sys.stderr)
        return exc.code
    except DegenerateTriangleError as exc:
        print(f"ws-splines: degenerate geometry: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
