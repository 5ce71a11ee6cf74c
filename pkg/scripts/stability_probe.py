"""Empirical stability constants of the minimal-determining-set basis.

Propagates random MDS values to full splines and reports the range of the
sampled sup norm divided by the largest coefficient (all Bt coefficients,
and the MDS values alone) on structured and jittered meshes under
refinement.  No specific constant is asserted.
"""

import argparse

import numpy as np

from wsspline.global_space import Triangulation, stability_probe, structured_mesh, uniform_refine


def jittered(n, amount, rng):
    T = structured_mesh(n)
    V = T.vertices.copy()
    inner = (V[:, 0] > 0) & (V[:, 0] < 1) & (V[:, 1] > 0) & (V[:, 1] < 1)
    V[inner] += rng.uniform(-amount, amount, size=(inner.sum(), 2)) / n
    return Triangulation(V, T.triangles)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--grid", type=int, default=16, help="lattice points per triangle edge")
    ap.add_argument("--jitter", type=float, default=0.25)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print("mesh,level,triangles,min_angle_deg,k_minus,k_plus,k_minus_mds,k_plus_mds")
    for name, T in (("structured", structured_mesh(2)), ("jittered", jittered(2, args.jitter, rng))):
        for level in range(args.levels):
            lo, hi = stability_probe(T, trials=args.trials, grid=args.grid, seed=args.seed)
            mlo, mhi = stability_probe(T, trials=args.trials, grid=args.grid, seed=args.seed, relative_to="mds")
            print(f"{name},{level},{T.n_triangles},{np.degrees(T.min_angle()):.2f},"
                  f"{lo:.4f},{hi:.4f},{mlo:.4f},{mhi:.4f}")
            if level < args.levels - 1:
                T = uniform_refine(T)


if __name__ == "__main__":
    main()
