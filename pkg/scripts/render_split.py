"""Render the WS_d split of a triangle or mesh as SVG line art.

With ``--basis i`` the cells where basis function i (1-based) is nonzero are
shaded, which shows its support on a single triangle.
"""

import argparse
from pathlib import Path

import numpy as np

from wsspline.geometry import Triangle, ws_split
from wsspline.io import read_mesh, split_svg
from wsspline.local_basis import build_local_basis, eval_basis_many


def shade_support(svg: str, split, basis_index: int, size: int) -> str:
    basis = build_local_basis(split.triangle)
    vals = eval_basis_many(basis, split.cell_samples)[:, basis_index]
    pts = split.triangle.vertices
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = 0.05 * size

    def tr(p):
        x = pad + (p[0] - lo[0]) / span * (size - 2 * pad)
        y = size - pad - (p[1] - lo[1]) / span * (size - 2 * pad)
        return f"{x:.3f},{y:.3f}"

    polys = [f'<polygon points="{" ".join(tr(p) for p in poly)}" fill="#9cf" stroke="none"/>'
             for poly, v in zip(split.cell_polygons, vals) if v > 1e-12]
    head, rest = svg.split(">", 1)
    return head + ">\n" + "\n".join(polys) + rest


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--mesh")
    src.add_argument("--triangle", nargs=6, type=float, default=[0, 0, 1, 0, 0.5, np.sqrt(3) / 2])
    ap.add_argument("--degree", type=int, default=3)
    ap.add_argument("--basis", type=int, help="shade the support of this basis function (single triangle, degree 3)")
    ap.add_argument("--size", type=int, default=600)
    ap.add_argument("--out", default="split.svg")
    args = ap.parse_args()

    if args.mesh:
        tris = [b.triangle for b in read_mesh(args.mesh).bases]
    else:
        tris = [Triangle(np.array(args.triangle, dtype=float).reshape(3, 2))]
    splits = [ws_split(t, args.degree) for t in tris]
    svg = split_svg(splits, args.size)
    if args.basis is not None:
        if len(splits) != 1 or args.degree != 3:
            ap.error("--basis needs a single triangle and degree 3")
        svg = shade_support(svg, splits[0], args.basis - 1, args.size)
    Path(args.out).write_text(svg, encoding="utf-8")
    print(f"wrote {args.out}: {len(splits)} triangle(s), {sum(s.n_cells for s in splits)} cells")


if __name__ == "__main__":
    main()
