"""Bivariate simplex splines evaluated through their recurrences.

``M_Xi`` is evaluated with the B-recurrence down to degree-zero pieces
(indicators of knot triangles scaled by the inverse area), differentiated with
the A-recurrence and refined with the C-recurrence (knot insertion).  Knot
multisets whose knots are collinear are lower-dimensional; they vanish off
their line and are treated as identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

__all__ = [
    "DegenerateKnotsError",
    "OnKnotLineError",
    "KnotMultiset",
    "eval_m",
    "eval_m_derivative",
    "insert_knot",
]

OnLinePolicy = Literal["perturb", "error"]


class DegenerateKnotsError(ValueError):
    pass


class OnKnotLineError(ValueError):
    pass


def _tri_area2(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])


@dataclass(frozen=True, eq=False)
class KnotMultiset:
    """Sequence of ``n + 1`` planar knots; repeated points encode multiplicity."""

    knots: np.ndarray

    def __post_init__(self):
        k = np.array(self.knots, dtype=float).reshape(-1, 2)
        if k.shape[0] < 3:
            raise DegenerateKnotsError("a simplex spline needs at least three knots")
        if _independent_triple(k) is None:
            raise DegenerateKnotsError("knots have a degenerate convex hull")
        k.setflags(write=False)
        object.__setattr__(self, "knots", k)

    @property
    def degree(self) -> int:
        return self.knots.shape[0] - 3

    @property
    def diameter(self) -> float:
        k = self.knots
        return float(np.max(np.linalg.norm(k[:, None, :] - k[None, :, :], axis=-1)))

    def knot_lines(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Unique (point, point) pairs spanning the knot lines."""
        uniq = np.unique(self.knots, axis=0)
        lines = []
        for i in range(len(uniq)):
            for j in range(i + 1, len(uniq)):
                a, b = uniq[i], uniq[j]
                if any(_collinear(a, b, p) and _collinear(a, b, q) for p, q in lines):
                    continue
                lines.append((a, b))
        return lines


def _collinear(a, b, c, tol=1e-12) -> bool:
    scale = max(np.linalg.norm(b - a), np.linalg.norm(c - a), 1e-300)
    return abs(_tri_area2(a, b, c)) <= tol * scale * scale


def _independent_triple(k: np.ndarray):
    """First affinely independent triple of knot indices in sequence order."""
    n = k.shape[0]
    scale = float(np.max(np.abs(k - k[0]))) or 1.0
    tol = 1e-13 * scale * scale
    for i in range(n):
        for j in range(i + 1, n):
            if np.all(k[j] == k[i]):
                continue
            for m in range(j + 1, n):
                if abs(_tri_area2(k[i], k[j], k[m])) > tol:
                    return i, j, m
    return None


def _solve_triple(k: np.ndarray, tri, rhs_xy: np.ndarray, rhs_sum: float) -> np.ndarray:
    """Weights on the triple with sum(w * xi) = rhs_xy and sum(w) = rhs_sum.

    ``rhs_xy`` may be ``(N, 2)``; returns ``(N, 3)``.
    """
    A = np.array([[k[t, 0] for t in tri], [k[t, 1] for t in tri], [1.0, 1.0, 1.0]])
    rhs = np.vstack([np.atleast_2d(rhs_xy).T, np.full(np.atleast_2d(rhs_xy).shape[0], rhs_sum)])
    return np.linalg.solve(A, rhs).T


class _Evaluator:
    """Memoized recursion over sub-multisets for a batch of points."""

    def __init__(self, knots: np.ndarray, pts: np.ndarray):
        uniq, inv = np.unique(knots, axis=0, return_inverse=True)
        self.uniq = uniq
        self.ids = tuple(sorted(int(i) for i in np.ravel(inv)))
        self.pts = pts
        self.memo: dict = {}

    def value(self, ids: tuple[int, ...]) -> np.ndarray:
        hit = self.memo.get(ids)
        if hit is not None:
            return hit
        k = self.uniq[list(ids)]
        tri = _independent_triple(k)
        if tri is None:
            out = np.zeros(self.pts.shape[0])
        elif len(ids) == 3:
            out = self._indicator(k)
        else:
            deg = len(ids) - 3
            b = _solve_triple(k, tri, self.pts, 1.0)
            out = np.zeros(self.pts.shape[0])
            for col, t in enumerate(tri):
                child = ids[:t] + ids[t + 1:]
                out += b[:, col] * self.value(child)
            out *= (deg + 2) / deg
        self.memo[ids] = out
        return out

    def _indicator(self, k: np.ndarray) -> np.ndarray:
        a2 = _tri_area2(k[0], k[1], k[2])
        p = self.pts
        s0 = _tri_area2_many(k[1], k[2], p) / a2
        s1 = _tri_area2_many(k[2], k[0], p) / a2
        s2 = 1.0 - s0 - s1
        inside = (s0 > 0) & (s1 > 0) & (s2 > 0)
        return np.where(inside, 2.0 / abs(a2), 0.0)

    def derivative(self, ids: tuple[int, ...], dirs: list[np.ndarray]) -> np.ndarray:
        if not dirs:
            return self.value(ids)
        key = (ids, tuple(tuple(d) for d in dirs))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        k = self.uniq[list(ids)]
        tri = _independent_triple(k)
        if tri is None or len(ids) == 3:
            out = np.zeros(self.pts.shape[0])
        else:
            a = _solve_triple(k, tri, dirs[0][None, :], 0.0)[0]
            out = np.zeros(self.pts.shape[0])
            for col, t in enumerate(tri):
                if a[col] != 0.0:
                    child = ids[:t] + ids[t + 1:]
                    out += a[col] * self.derivative(child, dirs[1:])
            out *= len(ids) - 1  # d + s with s = 2
        self.memo[key] = out
        return out


def _tri_area2_many(a, b, p: np.ndarray) -> np.ndarray:
    return (b[0] - a[0]) * (p[:, 1] - a[1]) - (p[:, 0] - a[0]) * (b[1] - a[1])


def _resolve_points(knots: KnotMultiset, pts: np.ndarray, policy: OnLinePolicy) -> np.ndarray:
    """Apply the on-knot-line policy; returns the (possibly moved) points."""
    h = knots.diameter
    tol = 1e-12 * h
    lines = knots.knot_lines()
    if not lines:
        return pts
    normals = []
    for a, b in lines:
        t = b - a
        n = np.array([-t[1], t[0]]) / np.linalg.norm(t)
        if n[1] < 0 or (n[1] == 0 and n[0] < 0):
            n = -n
        normals.append((n, -(n @ a)))
    N = np.array([n for n, _ in normals])
    C = np.array([c for _, c in normals])
    vals = pts @ N.T + C
    on = np.abs(vals) <= tol
    rows = np.flatnonzero(on.any(axis=1))
    if rows.size == 0:
        return pts
    if policy == "error":
        raise OnKnotLineError(f"{rows.size} point(s) lie on a knot line")
    pts = pts.copy()
    for r in rows:
        active = N[on[r]]
        pts[r] = pts[r] + 1e-9 * h * _tie_direction(active)
    return pts


def _tie_direction(normals: np.ndarray) -> np.ndarray:
    """Unit direction with positive inner product against every normal.

    Normals have the first nonzero of (a, b) positive, so a direction close to
    +y tilted slightly toward +x works.
    """
    delta = 1e-3
    for a, b in normals:
        if b > 0 and a < 0:
            delta = min(delta, 0.5 * b / -a)
    d = np.array([delta, 1.0])
    return d / np.linalg.norm(d)


def eval_m(knots: KnotMultiset, p, policy: OnLinePolicy = "perturb") -> np.ndarray | float:
    """Value of the (unit-integral) simplex spline at one or many points."""
    p = np.asarray(p, dtype=float)
    pts = _resolve_points(knots, p.reshape(-1, 2), policy)
    ev = _Evaluator(knots.knots, pts)
    out = ev.value(ev.ids)
    return float(out[0]) if p.ndim == 1 else out


def eval_m_derivative(knots: KnotMultiset, p, dir, policy: OnLinePolicy = "perturb"):
    """Directional derivative(s) via the A-recurrence.

    ``dir`` is a single vector (first derivative) or a sequence of vectors
    giving a mixed higher derivative ``D_{u1} D_{u2} ... M``.
    """
    p = np.asarray(p, dtype=float)
    dirs = np.atleast_2d(np.asarray(dir, dtype=float))
    pts = _resolve_points(knots, p.reshape(-1, 2), policy)
    ev = _Evaluator(knots.knots, pts)
    out = ev.derivative(ev.ids, [d for d in dirs])
    return float(out[0]) if p.ndim == 1 else out


def insert_knot(knots: KnotMultiset, y, coeffs=None) -> list[tuple[float, KnotMultiset]]:
    """Knot insertion: ``M_Xi = sum c_i M_{Xi + y - xi_i}``.

    By default the coefficients are the barycentric coordinates of ``y`` with
    respect to the first affinely independent knot triple.  Terms whose new
    knot set is collinear vanish almost everywhere and are dropped.
    """
    k = knots.knots
    y = np.asarray(y, dtype=float)
    if coeffs is None:
        tri = _independent_triple(k)
        w = _solve_triple(k, tri, y[None, :], 1.0)[0]
        coeffs = np.zeros(k.shape[0])
        coeffs[list(tri)] = w
    coeffs = np.asarray(coeffs, dtype=float)
    if not np.isclose(coeffs.sum(), 1.0) or not np.allclose(coeffs @ k, y):
        raise ValueError("coefficients must reproduce y and sum to one")
    out = []
    for i, c in enumerate(coeffs):
        if c == 0.0:
            continue
        new = np.vstack([np.delete(k, i, axis=0), y[None, :]])
        if _independent_triple(new) is None:
            continue
        out.append((float(c), KnotMultiset(new)))
    return out
