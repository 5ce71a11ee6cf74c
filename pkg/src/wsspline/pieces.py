"""Exact polynomial pieces of simplex splines on a reference arrangement.

Inside one cell of an arrangement that contains all knot lines, every
sub-multiset appearing in the B-recurrence is a single polynomial, so the
recurrence can be run on polynomials instead of numbers.  Polynomials are
homogeneous in the barycentric coordinates (b1, b2, b3) of the macro-triangle
and carried with exact rational coefficients; the macro-triangle is given
unit area so results are shape independent.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product

import numpy as np

BaryQ = tuple[Fraction, Fraction, Fraction]
Poly = dict  # exponent triple -> Fraction


def monomials(deg: int) -> list[tuple[int, int, int]]:
    """Exponent triples (a, b, c), a + b + c = deg, in lexicographic descending order."""
    return [(a, b, deg - a - b) for a in range(deg, -1, -1) for b in range(deg - a, -1, -1)]


def _det3(m) -> Fraction:
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def _inv3(m):
    det = _det3(m)
    cof = [[None] * 3 for _ in range(3)]
    for i, j in product(range(3), range(3)):
        rows = [r for r in range(3) if r != i]
        cols = [c for c in range(3) if c != j]
        minor = m[rows[0]][cols[0]] * m[rows[1]][cols[1]] - m[rows[0]][cols[1]] * m[rows[1]][cols[0]]
        cof[i][j] = (-1) ** (i + j) * minor
    return [[cof[j][i] / det for j in range(3)] for i in range(3)], det


def _mul_linear(lin: BaryQ, poly: Poly) -> Poly:
    out: Poly = {}
    for e, c in poly.items():
        for k in range(3):
            if lin[k] == 0:
                continue
            f = list(e)
            f[k] += 1
            f = tuple(f)
            out[f] = out.get(f, Fraction(0)) + lin[k] * c
    return out


def _inside_open(tri_knots, pt: BaryQ) -> bool:
    """Strict containment of ``pt`` in the triangle spanned by three barycentric knots."""
    m = [[tri_knots[c][r] for c in range(3)] for r in range(3)]
    inv, det = _inv3(m)
    lam = [sum(inv[r][c] * pt[c] for c in range(3)) for r in range(3)]
    return all(x > 0 for x in lam)


def _first_triple(knots):
    n = len(knots)
    for i in range(n):
        for j in range(i + 1, n):
            if knots[i] == knots[j]:
                continue
            for k in range(j + 1, n):
                m = [[knots[c][r] for c in (i, j, k)] for r in range(3)]
                if _det3(m) != 0:
                    return (i, j, k), m
    return None, None


class PieceBuilder:
    """Polynomial of ``M_Xi`` on a cell identified by an interior sample point."""

    def __init__(self, sample: BaryQ):
        self.sample = sample
        self.memo: dict = {}

    def poly(self, knots: tuple[BaryQ, ...]) -> Poly:
        key = tuple(sorted(knots))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        tri, m = _first_triple(key)
        if tri is None:
            out: Poly = {}
        elif len(key) == 3:
            # unit-area macro-triangle: knot-triangle area is |det|
            out = {(0, 0, 0): 1 / abs(_det3(m))} if _inside_open(key, self.sample) else {}
        else:
            inv, _ = _inv3(m)
            deg = len(key) - 3
            out = {}
            for row, t in enumerate(tri):
                child = self.poly(key[:t] + key[t + 1:])
                if not child:
                    continue
                for e, c in _mul_linear(tuple(inv[row]), child).items():
                    out[e] = out.get(e, Fraction(0)) + c
            scale = Fraction(deg + 2, deg)
            out = {e: scale * c for e, c in out.items() if c != 0}
        self.memo[key] = out
        return out


def cell_sample(cell) -> BaryQ:
    n = len(cell)
    return tuple(sum(pt[i] for pt in cell) / n for i in range(3))


def build_piece_table(knot_sets, scales, cells, deg: int):
    """Exact coefficient table ``[basis][cell] -> list over monomials(deg)``.

    ``scales`` multiplies each unit-integral simplex spline (on a unit-area
    macro-triangle).
    """
    mons = monomials(deg)
    table = []
    builders = [PieceBuilder(cell_sample(c)) for c in cells]
    for knots, s in zip(knot_sets, scales):
        rows = []
        for b in builders:
            p = b.poly(tuple(knots))
            rows.append([s * p.get(e, Fraction(0)) for e in mons])
        table.append(rows)
    return table


# ---------------------------------------------------------------------------
# numeric evaluation of homogeneous barycentric polynomials
# ---------------------------------------------------------------------------

_EXP_CACHE: dict = {}


def exponents(deg: int) -> np.ndarray:
    e = _EXP_CACHE.get(deg)
    if e is None:
        e = np.array(monomials(deg), dtype=int).reshape(-1, 3)
        _EXP_CACHE[deg] = e
    return e


def monomial_values(beta: np.ndarray, deg: int) -> np.ndarray:
    """``(N, n_mon)`` monomial values at barycentric points ``(N, 3)``."""
    e = exponents(deg)
    return np.prod(beta[:, None, :] ** e[None, :, :], axis=-1)


def monomial_derivatives(beta: np.ndarray, deg: int, dirs: list[np.ndarray]) -> np.ndarray:
    """Directional derivatives of all monomials along barycentric directions.

    ``dirs`` holds up to two arrays of shape ``(N, 3)`` or ``(3,)``;
    returns ``(N, n_mon)``.
    """
    e = exponents(deg)
    N = beta.shape[0]
    dirs = [np.broadcast_to(np.asarray(d, dtype=float), (N, 3)) for d in dirs]
    if not dirs:
        return monomial_values(beta, deg)
    if len(dirs) == 1:
        out = np.zeros((N, e.shape[0]))
        for k in range(3):
            ek = e.copy()
            coef = ek[:, k].astype(float)
            ek[:, k] = np.maximum(ek[:, k] - 1, 0)
            vals = np.prod(beta[:, None, :] ** ek[None], axis=-1) * coef
            out += vals * dirs[0][:, k:k + 1]
        return out
    if len(dirs) == 2:
        out = np.zeros((N, e.shape[0]))
        for k in range(3):
            for l in range(3):
                ek = e.copy()
                coef = ek[:, k].astype(float)
                ek[:, k] = np.maximum(ek[:, k] - 1, 0)
                coef = coef * ek[:, l]
                ek[:, l] = np.maximum(ek[:, l] - 1, 0)
                vals = np.prod(beta[:, None, :] ** ek[None], axis=-1) * coef
                out += vals * (dirs[0][:, k] * dirs[1][:, l])[:, None]
        return out
    raise ValueError("derivatives above order 2 are not supported")
