"""Numerical self-checks run by ``ws-splines verify``."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

import numpy as np
from scipy.interpolate import BSpline

from .geometry import Triangle, from_bary
from .global_space import GlobalSpline, Triangulation, build_mds, constraint_residual, propagate
from .local_basis import (
    CONVERSION,
    CONVERSION_INV,
    collocation_condition,
    eval_basis_many,
    hermite_matrix,
    knot_line_discrepancy,
    marsden_duals,
)
from .smoothness import canonicalize_edge, verify_smoothness

__all__ = ["SuiteResult", "EDGE_BASIS", "cox_de_boor", "run_all", "load_hermite_tables"]

# Basis indices (0-based) nonzero on each directed edge, in B-spline order.
EDGE_BASIS = {
    (0, 1): (0, 3, 9, 12, 6, 1),
    (1, 2): (1, 5, 11, 14, 8, 2),
    (2, 0): (2, 7, 13, 10, 4, 0),
}
EDGE_KNOTS = np.array([0, 0, 0, 0, 1 / 3, 2 / 3, 1, 1, 1, 1], dtype=float)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    residual: float
    detail: str = ""


def cox_de_boor(t: np.ndarray) -> np.ndarray:
    """``(N, 6)`` univariate cubic B-splines on the edge knot vector."""
    out = np.empty((len(t), 6))
    for j in range(6):
        c = np.zeros(6)
        c[j] = 1.0
        out[:, j] = BSpline(EDGE_KNOTS, c, 3, extrapolate=False)(t)
    return np.nan_to_num(out)


def load_hermite_tables():
    raw = resources.files("wsspline.data").joinpath("hermite_tables.json").read_text()
    d = json.loads(raw)

    def mat(block, names):
        return np.array([[float(Fraction(x)) for x in block[n]] for n in names])

    main = d["rho1_28"]
    B = mat(main, [f"B{i}" for i in range(1, 29)])
    Bt = mat(main, [f"Bt{i}" if f"Bt{i}" in main else f"B{i}" for i in range(1, 29)])
    extra = mat(d["rho29_34"], [f"Bt{i}" for i in range(1, 29)])
    return B, Bt, extra


def _random_points(tri: Triangle, rng, n):
    return from_bary(tri, rng.dirichlet([1, 1, 1], n))


def suite_partition(bases, rng) -> SuiteResult:
    worst, low = 0.0, 0.0
    for b in bases:
        V = eval_basis_many(b, _random_points(b.triangle, rng, 2000))
        worst = max(worst, float(np.abs(V.sum(1) - 1).max()))
        low = min(low, float(V.min()))
    return SuiteResult("partition-of-unity", worst <= 1e-10 and low >= -1e-12, worst, f"min value {low:.3e}")


def suite_marsden(bases, rng) -> SuiteResult:
    worst = 0.0
    for b in bases:
        P = _random_points(b.triangle, rng, 500)
        y = rng.normal(size=(500, 2))
        y /= np.maximum(1.0, np.linalg.norm(y, axis=1))[:, None] * b.triangle.h
        lhs = (marsden_duals(b, y) * eval_basis_many(b, P)).sum(1)
        worst = max(worst, float(np.abs(lhs - (1 + (y * P).sum(1)) ** 3).max()))
    return SuiteResult("marsden", worst <= 1e-10, worst)


def suite_tables(bases) -> SuiteResult:
    B, Bt, extra = load_hermite_tables()
    worst = 0.0
    for b in bases:
        worst = max(worst,
                    float(np.abs(hermite_matrix(b) - B).max()),
                    float(np.abs(hermite_matrix(b, "Bt") - Bt).max()),
                    float(np.abs(hermite_matrix(b, "Bt", extra=True) - extra).max()))
    return SuiteResult("hermite-tables", worst <= 1e-9, worst)


def suite_edges(bases) -> SuiteResult:
    t = (np.arange(50) + 0.5) / 50
    ref = cox_de_boor(t)
    worst = 0.0
    for b in bases:
        V = b.triangle.vertices
        for (i, j), idx in EDGE_BASIS.items():
            pts = V[i] + t[:, None] * (V[j] - V[i])
            vals = eval_basis_many(b, pts)
            others = np.delete(vals, list(idx), axis=1)
            worst = max(worst, float(np.abs(vals[:, list(idx)] - ref).max()), float(np.abs(others).max()))
    return SuiteResult("edge-restriction", worst <= 1e-10, worst)


def suite_condition(bases) -> SuiteResult:
    kappa = max(collocation_condition(b) for b in bases)
    c = float(np.abs(CONVERSION).sum(1).max())
    ci = float(np.abs(CONVERSION_INV).sum(1).max())
    ok = kappa < 37 and abs(c - 3) < 1e-12 and abs(ci - 3) < 1e-12
    return SuiteResult("condition", ok, kappa, f"||C||={c:g} ||C^-1||={ci:g}")


def suite_c2(T: Triangulation, rng, broken: bool = False) -> SuiteResult:
    worst = 0.0
    for b in T.bases:
        worst = max(worst, max(knot_line_discrepancy(b, n=8).values()))
    detail = f"{len(T.interior_edges)} interior edges"
    if T.interior_edges:
        mds = build_mds(T)
        s = propagate(T, mds, rng.uniform(-1, 1, len(mds)))
        if broken:
            e = T.interior_edges[0]
            edge = canonicalize_edge(T.vertices, T.triangles, e)
            C = s.coeffs.copy()
            # C^2 target b_11 on the right triangle
            C[edge.right, edge.right_sigma[10]] += 1.0
            s = GlobalSpline(T, C)
        for e in T.interior_edges:
            edge = canonicalize_edge(T.vertices, T.triangles, e)
            a, bb = T.vertices[list(e)]
            rep = verify_smoothness((T.bases[edge.left], s.local(edge.left)),
                                    (T.bases[edge.right], s.local(edge.right)), a, bb, order=2)
            worst = max(worst, max(rep.values()))
        detail += f", constraint residual {constraint_residual(s)[0]:.2e}"
    return SuiteResult("c2-smoothness", worst <= 1e-8, worst, detail)


def run_all(T: Triangulation, seed: int = 0, broken: bool = False) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    bases = T.bases
    return [
        suite_partition(bases, rng),
        suite_marsden(bases, rng),
        suite_tables(bases),
        suite_edges(bases),
        suite_condition(bases),
        suite_c2(T, rng, broken),
    ]
