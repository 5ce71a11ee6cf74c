"""Convergence of per-triangle Hermite fits under uniform refinement.

For each level reports the sup error of the fit, the largest distance
between control points and the spline (|b_i - s(xi_i)|), and the observed
orders between consecutive levels.
"""

import argparse
import csv
import sys

import numpy as np

from wsspline.functions import BUILTINS, builtin
from wsspline.global_space import eval_global, fit_hermite, structured_mesh, uniform_refine
from wsspline.local_basis import LocalCoeffs, convert, eval_basis_many


def errors(T, f, samples):
    s = fit_hermite(T, f)
    fit_err = float(np.abs(eval_global(s, samples) - f.value(samples)).max())
    net = 0.0
    for k, b in enumerate(T.bases):
        c = convert(LocalCoeffs(s.coeffs[k], "Bt")).values
        net = max(net, float(np.abs(c - eval_basis_many(b, b.domain_points_xy("B")) @ c).max()))
    return fit_err, net


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--start", type=int, default=3, help="squares per side of the coarsest mesh")
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--fn", default="franke", choices=sorted(BUILTINS))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="optional CSV file")
    args = ap.parse_args()

    f = builtin(args.fn, args.seed)
    g = np.linspace(0, 1, 41)
    samples = np.array([(x, y) for x in g for y in g])
    T = structured_mesh(args.start)
    h = 1.0 / args.start
    rows = []
    for level in range(args.levels):
        fit_err, net = errors(T, f, samples)
        rows.append((level, T.n_triangles, h, fit_err, net))
        if level < args.levels - 1:
            T = uniform_refine(T)
            h /= 2

    w = csv.writer(sys.stdout)
    w.writerow(["level", "triangles", "h", "fit_error", "net_distance", "fit_order", "net_order"])
    for i, (level, nt, h, fe, ne) in enumerate(rows):
        fo = no = ""
        if i:
            fo = f"{np.log2(rows[i - 1][3] / fe):.3f}" if fe > 0 else ""
            no = f"{np.log2(rows[i - 1][4] / ne):.3f}" if ne > 0 else ""
        w.writerow([level, nt, f"{h:.6g}", f"{fe:.6e}", f"{ne:.6e}", fo, no])
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            cw = csv.writer(fh, lineterminator="\n")
            cw.writerow(["level", "triangles", "h", "fit_error", "net_distance"])
            cw.writerows(rows)


if __name__ == "__main__":
    main()
