"""The two 28-function simplex spline bases of C^2 cubics on a WS_3 split.

Basis ``B_i = w_i M_i`` uses six knots among the nine boundary points
``p1, p2, p3, p_{k,l}``; the alternative basis ``Bt`` differs only in indices
22..28.  Evaluation goes through a table of exact cubic pieces per cell of the
split (homogeneous in barycentric coordinates) combined with sign-vector
point location; the recurrence path in :mod:`wsspline.simplex` is kept as an
independent check.

All indices in this module are 0-based; ``B_1`` of the usual numbering is
index 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Literal

import numpy as np

from .geometry import Triangle, WsSplit, _reference_arrangement, from_bary, locate_many, to_bary, ws_split
from .pieces import build_piece_table, monomial_derivatives, monomial_values
from .simplex import KnotMultiset, eval_m

__all__ = [
    "KNOT_NAMES",
    "KNOT_POINTS",
    "KNOT_SETS",
    "KnotLayout",
    "LAYOUT",
    "WEIGHT_FACTORS",
    "DOMAIN_POINTS",
    "ALT_DOMAIN_POINTS",
    "CONVERSION",
    "CONVERSION_INV",
    "RELATION",
    "HermiteFunctional",
    "HERMITE_OPS",
    "LocalBasis",
    "LocalCoeffs",
    "ControlNet",
    "CONTROL_NET_FACES",
    "build_local_basis",
    "eval_basis",
    "eval_basis_many",
    "eval_basis_derivatives",
    "eval_basis_recurrence",
    "directional_derivatives",
    "hermite_matrix",
    "hermite_functionals",
    "hermite_data",
    "hermite_interpolate",
    "marsden_duals",
    "convert",
    "control_net",
    "collocation_matrix",
    "collocation_condition",
    "index_permutation",
    "knot_line_discrepancy",
    "evaluate_spline",
]

Tag = Literal["B", "Bt"]

_T = Fraction(1, 3)
KNOT_NAMES = ("p1", "p2", "p3", "p12", "p13", "p21", "p23", "p31", "p32")
KNOT_POINTS: dict[str, tuple[Fraction, Fraction, Fraction]] = {
    "p1": (Fraction(1), Fraction(0), Fraction(0)),
    "p2": (Fraction(0), Fraction(1), Fraction(0)),
    "p3": (Fraction(0), Fraction(0), Fraction(1)),
    "p12": (Fraction(0), 2 * _T, _T),
    "p13": (Fraction(0), _T, 2 * _T),
    "p21": (2 * _T, Fraction(0), _T),
    "p23": (_T, Fraction(0), 2 * _T),
    "p31": (2 * _T, _T, Fraction(0)),
    "p32": (_T, 2 * _T, Fraction(0)),
}

# Knot multisets of B_1 .. B_28.
KNOT_SETS: tuple[tuple[str, ...], ...] = tuple(tuple(s.split()) for s in (
    "p1 p1 p1 p1 p31 p21",
    "p2 p2 p2 p2 p32 p12",
    "p3 p3 p3 p3 p13 p23",
    "p1 p1 p1 p31 p32 p21",
    "p1 p1 p1 p21 p23 p31",
    "p2 p2 p2 p12 p13 p32",
    "p2 p2 p2 p32 p31 p12",
    "p3 p3 p3 p23 p21 p13",
    "p3 p3 p3 p13 p12 p23",
    "p1 p1 p31 p32 p2 p21",
    "p1 p1 p21 p23 p3 p31",
    "p2 p2 p12 p13 p3 p32",
    "p2 p2 p32 p31 p1 p12",
    "p3 p3 p23 p21 p1 p13",
    "p3 p3 p13 p12 p2 p23",
    "p1 p1 p31 p32 p21 p23",
    "p2 p2 p32 p31 p12 p13",
    "p3 p3 p13 p12 p23 p21",
    "p1 p31 p32 p2 p12 p21",
    "p2 p12 p13 p3 p23 p32",
    "p3 p23 p21 p1 p31 p13",
    "p1 p31 p32 p12 p21 p23",
    "p1 p21 p23 p13 p31 p32",
    "p2 p12 p13 p23 p32 p31",
    "p2 p32 p31 p21 p13 p12",
    "p3 p23 p21 p31 p13 p12",
    "p3 p13 p12 p32 p23 p21",
    "p31 p32 p12 p13 p23 p21",
))


@dataclass(frozen=True)
class KnotLayout:
    """The nine boundary knot points and the 28 knot multisets over them."""

    points: dict
    knot_sets: tuple

    def multiplicities(self, i: int) -> dict[str, int]:
        out: dict[str, int] = {}
        for n in self.knot_sets[i]:
            out[n] = out.get(n, 0) + 1
        return out


LAYOUT = KnotLayout(KNOT_POINTS, KNOT_SETS)

# w_i / |Delta|
WEIGHT_FACTORS: tuple[Fraction, ...] = tuple(Fraction(n, 15) * f for n, f in zip(
    [1] * 28,
    [Fraction(1, 6)] * 3 + [_T] * 6 + [Fraction(1, 2)] * 6 + [2 * _T] * 3
    + [Fraction(5, 6)] * 3 + [2 * _T] * 6 + [Fraction(1)],
))


def _q(*xs) -> tuple[Fraction, ...]:
    return tuple(Fraction(x) for x in xs)


_N9, _N15, _N27 = Fraction(1, 9), Fraction(1, 15), Fraction(1, 27)
DOMAIN_POINTS: tuple[tuple[Fraction, Fraction, Fraction], ...] = (
    _q(1, 0, 0), _q(0, 1, 0), _q(0, 0, 1),
    (8 * _N9, _N9, Fraction(0)), (8 * _N9, Fraction(0), _N9), (Fraction(0), 8 * _N9, _N9),
    (_N9, 8 * _N9, Fraction(0)), (_N9, Fraction(0), 8 * _N9), (Fraction(0), _N9, 8 * _N9),
    (2 * _T, _T, Fraction(0)), (2 * _T, Fraction(0), _T), (Fraction(0), 2 * _T, _T),
    (_T, 2 * _T, Fraction(0)), (_T, Fraction(0), 2 * _T), (Fraction(0), _T, 2 * _T),
    (7 * _N9, _N9, _N9), (_N9, 7 * _N9, _N9), (_N9, _N9, 7 * _N9),
    (7 * _N15, 7 * _N15, _N15), (_N15, 7 * _N15, 7 * _N15), (7 * _N15, _N15, 7 * _N15),
    (5 * _N9, _T, _N9), (5 * _N9, _N9, _T), (_N9, 5 * _N9, _T),
    (_T, 5 * _N9, _N9), (_T, _N9, 5 * _N9), (_N9, _T, 5 * _N9),
    (_T, _T, _T),
)
ALT_DOMAIN_POINTS: tuple[tuple[Fraction, Fraction, Fraction], ...] = DOMAIN_POINTS[:21] + (
    (15 * _N27, 7 * _N27, 5 * _N27), (15 * _N27, 5 * _N27, 7 * _N27),
    (5 * _N27, 15 * _N27, 7 * _N27), (7 * _N27, 15 * _N27, 5 * _N27),
    (7 * _N27, 5 * _N27, 15 * _N27), (5 * _N27, 7 * _N27, 15 * _N27),
    (_T, _T, _T),
)

_PAIRS = ((21, 22), (23, 24), (25, 26))


def _conversion_matrices():
    """``RELATION`` with Bt = RELATION @ B, and ``CONVERSION`` with bt = CONVERSION @ b."""
    rel = np.eye(28)
    conv = np.eye(28)
    for i, j in _PAIRS:
        for a, b in ((i, j), (j, i)):
            rel[a, a], rel[a, b], rel[a, 27] = 2.0, -1.0, 1.0 / 3.0
            conv[a, a], conv[a, b] = 2.0 / 3.0, 1.0 / 3.0
    rel[27, 27] = -1.0
    conv[27, 21:27] = 1.0 / 3.0
    conv[27, 27] = -1.0
    return rel, conv


RELATION, CONVERSION = _conversion_matrices()
CONVERSION_INV = np.linalg.inv(CONVERSION)


# ---------------------------------------------------------------------------
# piece table
# ---------------------------------------------------------------------------

_DATA_FILE = "ws3_pieces.json"


def generate_piece_table():
    """Exact cubic pieces of B_1..B_28 on the 75 cells of the reference split."""
    ref = _reference_arrangement(3)
    knots = [[KNOT_POINTS[n] for n in s] for s in KNOT_SETS]
    return build_piece_table(knots, WEIGHT_FACTORS, ref.cells, 3)


def _table_to_json(table) -> str:
    return json.dumps({"degree": 3, "n_basis": 28, "n_cells": len(table[0]),
                       "pieces": [[[str(c) for c in row] for row in b] for b in table]})


@lru_cache(maxsize=None)
def reference_pieces() -> np.ndarray:
    """``(28, n_cells, 10)`` float coefficients, loaded from the shipped table."""
    try:
        raw = resources.files("wsspline.data").joinpath(_DATA_FILE).read_text()
        table = [[[Fraction(c) for c in row] for row in b] for b in json.loads(raw)["pieces"]]
    except (FileNotFoundError, ModuleNotFoundError):
        table = generate_piece_table()
    return np.array([[[float(c) for c in row] for row in b] for b in table])


# ---------------------------------------------------------------------------
# Hermite functionals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HermiteFunctional:
    """``D_{u1} ... D_{uk} f(site)`` with directions given as barycentric vectors."""

    name: str
    site: tuple[Fraction, Fraction, Fraction]
    dirs: tuple[tuple[Fraction, Fraction, Fraction], ...]


def _pt(name: str):
    if name in KNOT_POINTS:
        return KNOT_POINTS[name]
    half = Fraction(1, 2)
    return {
        "q1": (Fraction(0), half, half),
        "q2": (half, Fraction(0), half),
        "q3": (half, half, Fraction(0)),
        "q": (_T, _T, _T),
    }[name]


def _dir(a: str, b: str):
    pa, pb = _pt(a), _pt(b)
    return tuple(pb[i] - pa[i] for i in range(3))


def _op(name, site, *dirs):
    return HermiteFunctional(name, _pt(site), tuple(_dir(a, b) for a, b in dirs))


HERMITE_OPS: tuple[HermiteFunctional, ...] = (
    _op("rho1", "p1"), _op("rho2", "p2"), _op("rho3", "p3"),
    _op("rho4", "p1", ("p1", "p2")), _op("rho5", "p1", ("p1", "p3")),
    _op("rho6", "p2", ("p2", "p3")), _op("rho7", "p2", ("p2", "p1")),
    _op("rho8", "p3", ("p3", "p1")), _op("rho9", "p3", ("p3", "p2")),
    _op("rho10", "p1", ("p1", "p2"), ("p1", "p2")), _op("rho11", "p1", ("p1", "p3"), ("p1", "p3")),
    _op("rho12", "p2", ("p2", "p3"), ("p2", "p3")), _op("rho13", "p2", ("p2", "p1"), ("p2", "p1")),
    _op("rho14", "p3", ("p3", "p1"), ("p3", "p1")), _op("rho15", "p3", ("p3", "p2"), ("p3", "p2")),
    _op("rho16", "p1", ("p1", "p2"), ("p1", "p3")),
    _op("rho17", "p2", ("p2", "p3"), ("p2", "p1")),
    _op("rho18", "p3", ("p3", "p1"), ("p3", "p2")),
    _op("rho19", "q3", ("q3", "p3")), _op("rho20", "q1", ("q1", "p1")),
    _op("rho21", "q2", ("q2", "p2")),
    _op("rho22", "p31", ("p31", "p3"), ("p31", "p3")),
    _op("rho23", "p21", ("p21", "p2"), ("p21", "p2")),
    _op("rho24", "p12", ("p12", "p1"), ("p12", "p1")),
    _op("rho25", "p32", ("p32", "p3"), ("p32", "p3")),
    _op("rho26", "p23", ("p23", "p2"), ("p23", "p2")),
    _op("rho27", "p13", ("p13", "p1"), ("p13", "p1")),
    _op("rho28", "q"),
    _op("rho29", "p31", ("p1", "p2"), ("p1", "p2")),
    _op("rho30", "p31", ("p1", "p3"), ("p1", "p3")),
    _op("rho31", "p31", ("p1", "p3"), ("p1", "p2")),
    _op("rho32", "p32", ("p1", "p2"), ("p1", "p2")),
    _op("rho33", "p32", ("p1", "p3"), ("p1", "p3")),
    _op("rho34", "p32", ("p1", "p3"), ("p1", "p2")),
)


# ---------------------------------------------------------------------------
# local basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LocalBasis:
    triangle: Triangle
    split: WsSplit
    layout: KnotLayout
    weights: np.ndarray
    pieces: np.ndarray  # (28, n_cells, 10) over monomials of degree 3
    domain_points: np.ndarray  # (28, 3) barycentric
    alt_domain_points: np.ndarray
    conversion: np.ndarray

    @property
    def knot_layout(self) -> dict[str, np.ndarray]:
        return {n: from_bary(self.triangle, np.array(KNOT_POINTS[n], dtype=float)) for n in KNOT_NAMES}

    def knot_multiset(self, i: int) -> KnotMultiset:
        lay = self.knot_layout
        return KnotMultiset(np.array([lay[n] for n in KNOT_SETS[i]]))

    def domain_points_xy(self, tag: Tag = "B") -> np.ndarray:
        pts = self.domain_points if tag == "B" else self.alt_domain_points
        return from_bary(self.triangle, pts)


def build_local_basis(tri: Triangle) -> LocalBasis:
    if not isinstance(tri, Triangle):
        tri = Triangle(np.asarray(tri, dtype=float))
    return LocalBasis(
        triangle=tri,
        split=ws_split(tri, 3),
        layout=LAYOUT,
        weights=tri.area * np.array([float(w) for w in WEIGHT_FACTORS]),
        pieces=reference_pieces(),
        domain_points=np.array(DOMAIN_POINTS, dtype=float),
        alt_domain_points=np.array(ALT_DOMAIN_POINTS, dtype=float),
        conversion=CONVERSION.copy(),
    )


def _cells_and_bary(basis: LocalBasis, pts: np.ndarray, cells=None):
    if cells is None:
        cells = locate_many(basis.split, pts)
    else:
        cells = np.broadcast_to(np.asarray(cells, dtype=np.int64), (len(pts),))
    beta = to_bary(basis.triangle, pts)
    return cells, beta


def _apply_tag(vals: np.ndarray, tag: Tag) -> np.ndarray:
    """Map values of B (last axis) to values of Bt if requested."""
    if tag == "B":
        return vals
    return vals @ RELATION.T


def eval_basis_many(basis: LocalBasis, pts, tag: Tag = "B", cells=None) -> np.ndarray:
    """``(N, 28)`` basis values at points in the closed macro-triangle.

    ``cells`` forces the polynomial piece used for each point (for one-sided
    limits on knot lines); by default the cell is found by point location.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    cells, beta = _cells_and_bary(basis, pts, cells)
    mono = monomial_values(beta, 3)
    coef = basis.pieces[:, cells, :]  # (28, N, 10)
    return _apply_tag(np.einsum("inm,nm->ni", coef, mono), tag)


def eval_basis(basis: LocalBasis, p, tag: Tag = "B") -> np.ndarray:
    return eval_basis_many(basis, np.asarray(p, dtype=float)[None], tag)[0]


def directional_derivatives(basis: LocalBasis, pts, bary_dirs, tag: Tag = "B", cells=None) -> np.ndarray:
    """``(N, 28)`` values of ``D_{u1} .. D_{uk} B_i`` (k <= 2).

    Directions are barycentric increments (use ``Triangle.bary_direction`` to
    convert Cartesian vectors); each may be ``(3,)`` or ``(N, 3)``.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    cells, beta = _cells_and_bary(basis, pts, cells)
    mono = monomial_derivatives(beta, 3, list(bary_dirs))
    coef = basis.pieces[:, cells, :]
    return _apply_tag(np.einsum("inm,nm->ni", coef, mono), tag)


def eval_basis_derivatives(basis: LocalBasis, p, order: int, tag: Tag = "B") -> np.ndarray:
    """Gradients ``(…, 28, 2)`` for order 1, Hessians ``(…, 28, 3)`` as (xx, xy, yy) for order 2."""
    p = np.asarray(p, dtype=float)
    pts = np.atleast_2d(p)
    ex, ey = basis.triangle.bary_direction(np.eye(2))
    if order == 1:
        out = np.stack([directional_derivatives(basis, pts, [ex], tag),
                        directional_derivatives(basis, pts, [ey], tag)], axis=-1)
    elif order == 2:
        out = np.stack([directional_derivatives(basis, pts, [ex, ex], tag),
                        directional_derivatives(basis, pts, [ex, ey], tag),
                        directional_derivatives(basis, pts, [ey, ey], tag)], axis=-1)
    else:
        raise ValueError("order must be 1 or 2")
    return out[0] if p.ndim == 1 else out


def eval_basis_recurrence(basis: LocalBasis, pts, indices=None) -> np.ndarray:
    """``(N, len(indices))`` values via the B-recurrence on Cartesian knots."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    idx = range(28) if indices is None else indices
    cols = [basis.weights[i] * np.atleast_1d(eval_m(basis.knot_multiset(i), pts)) for i in idx]
    return np.stack(cols, axis=-1)


def evaluate_spline(basis: LocalBasis, coeffs, pts, tag: Tag = "B", derivative=()) -> np.ndarray:
    """Values (or a directional derivative) of ``sum c_i B_i`` at points."""
    if isinstance(coeffs, LocalCoeffs):
        tag, coeffs = coeffs.tag, coeffs.values
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if derivative:
        vals = directional_derivatives(basis, pts, derivative, tag)
    else:
        vals = eval_basis_many(basis, pts, tag)
    return vals @ np.asarray(coeffs, dtype=float)


# ---------------------------------------------------------------------------
# Hermite problems
# ---------------------------------------------------------------------------

def _functional_values(basis: LocalBasis, ops, tag: Tag) -> np.ndarray:
    rows = []
    for op in ops:
        site = from_bary(basis.triangle, np.array(op.site, dtype=float))[None]
        dirs = [np.array(d, dtype=float) for d in op.dirs]
        rows.append(directional_derivatives(basis, site, dirs, tag)[0])
    return np.array(rows).T  # (basis, functional)


def hermite_matrix(basis: LocalBasis, tag: Tag = "B", extra: bool = False) -> np.ndarray:
    """``H[i, j] = rho_j(B_i)`` for j < 28 (or the six extra functionals)."""
    ops = HERMITE_OPS[28:] if extra else HERMITE_OPS[:28]
    return _functional_values(basis, ops, tag)


def hermite_functionals(basis: LocalBasis) -> list[tuple[str, np.ndarray, list[np.ndarray]]]:
    """The 28 interpolation conditions as (label, site xy, Cartesian directions).

    Order: for each vertex k the value, D_x, D_y, D_xx, D_xy, D_yy; the first
    normal derivative at the midpoints q_1, q_2, q_3; the second normal
    derivative at p_{1,2}, p_{1,3}, p_{2,1}, p_{2,3}, p_{3,1}, p_{3,2};
    the value at the centroid.  Normals are inward unit normals of the edge
    opposite p_k.
    """
    tri = basis.triangle
    ex, ey = np.eye(2)
    out = []
    for k in range(3):
        v = tri.vertices[k]
        for label, dirs in (("f", []), ("fx", [ex]), ("fy", [ey]), ("fxx", [ex, ex]),
                            ("fxy", [ex, ey]), ("fyy", [ey, ey])):
            out.append((f"{label}@p{k + 1}", v, dirs))
    for k in range(3):
        q = from_bary(tri, np.array(_pt(f"q{k + 1}"), dtype=float))
        out.append((f"dn@q{k + 1}", q, [tri.inward_normal(k)]))
    for k, l in ((1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)):
        p = from_bary(tri, np.array(KNOT_POINTS[f"p{k}{l}"], dtype=float))
        n = tri.inward_normal(k - 1)
        out.append((f"dnn@p{k}{l}", p, [n, n]))
    out.append(("f@q", tri.centroid, []))
    return out


def hermite_collocation(basis: LocalBasis, tag: Tag = "B") -> np.ndarray:
    """``G[j, i] = lambda_j(B_i)`` for the interpolation conditions."""
    tri = basis.triangle
    rows = []
    for _, site, dirs in hermite_functionals(basis):
        bd = [tri.bary_direction(d) for d in dirs]
        rows.append(directional_derivatives(basis, site[None], bd, tag)[0])
    return np.array(rows)


def hermite_data(basis: LocalBasis, fn) -> np.ndarray:
    """Interpolation data of a function exposing ``value``, ``grad`` and ``hess``."""
    data = []
    for _, site, dirs in hermite_functionals(basis):
        if not dirs:
            data.append(float(fn.value(site)))
        elif len(dirs) == 1:
            data.append(float(np.asarray(fn.grad(site)) @ dirs[0]))
        else:
            H = np.asarray(fn.hess(site))
            data.append(float(dirs[0] @ H @ dirs[1]))
    return np.array(data)


@dataclass(frozen=True)
class LocalCoeffs:
    values: np.ndarray
    tag: Tag = "B"

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(28)
        if not np.all(np.isfinite(v)):
            raise ValueError("coefficients must be finite")
        if self.tag not in ("B", "Bt"):
            raise ValueError(f"unknown basis tag {self.tag!r}")
        object.__setattr__(self, "values", v)


class SingularSystemError(RuntimeError):
    pass


def hermite_interpolate(basis: LocalBasis, data, tag: Tag = "B") -> LocalCoeffs:
    G = hermite_collocation(basis, tag)
    data = np.asarray(data, dtype=float).reshape(28)
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularSystemError(f"Hermite collocation matrix is numerically singular (cond={cond:.3e})")
    return LocalCoeffs(np.linalg.solve(G, data), tag)


# ---------------------------------------------------------------------------
# Marsden identity, conversion, control net, conditioning
# ---------------------------------------------------------------------------

_M_POINTS = {
    "m1": (Fraction(2, 5), Fraction(2, 5), Fraction(1, 5)),
    "m2": (Fraction(1, 5), Fraction(2, 5), Fraction(2, 5)),
    "m3": (Fraction(2, 5), Fraction(1, 5), Fraction(2, 5)),
}

# Polar-form arguments of the dual polynomials psi_1 .. psi_27.
_DUAL_ARGS = tuple(tuple(s.split()) for s in (
    "p1 p1 p1", "p2 p2 p2", "p3 p3 p3",
    "p1 p1 p31", "p1 p1 p21", "p2 p2 p12", "p2 p2 p32", "p3 p3 p23", "p3 p3 p13",
    "p1 p31 p32", "p1 p23 p21", "p2 p12 p13", "p2 p31 p32", "p3 p23 p21", "p3 p12 p13",
    "p1 p31 p21", "p2 p32 p12", "p3 p13 p23",
    "p31 p32 m1", "p12 p13 m2", "p23 p21 m3",
    "p31 p32 p21", "p31 p23 p21", "p32 p12 p13", "p31 p32 p12", "p13 p23 p21", "p12 p13 p23",
))


def marsden_duals(basis: LocalBasis, y) -> np.ndarray:
    """``psi_i(y)`` such that ``(1 + y.x)^3 = sum psi_i(y) B_i(x)``; shape ``(…, 28)``."""
    y = np.asarray(y, dtype=float)
    tri = basis.triangle

    def lin(name):
        b = KNOT_POINTS.get(name) or _M_POINTS.get(name) or _pt(name)
        return 1.0 + y @ from_bary(tri, np.array(b, dtype=float))

    cache = {}

    def L(name):
        if name not in cache:
            cache[name] = lin(name)
        return cache[name]

    cols = [L(a) * L(b) * L(c) for a, b, c in _DUAL_ARGS]
    lq = L("q")
    cols.append(lq * (2 * lq ** 2 - (L("p13") * L("p23") + L("p32") * L("p12") + L("p31") * L("p21")) / 3))
    return np.stack(cols, axis=-1)


def convert(coeffs: LocalCoeffs) -> LocalCoeffs:
    """Switch coefficient vectors between the B and Bt representations."""
    if coeffs.tag == "B":
        return LocalCoeffs(CONVERSION @ coeffs.values, "Bt")
    return LocalCoeffs(CONVERSION_INV @ coeffs.values, "B")


@dataclass(frozen=True)
class ControlNet:
    points: np.ndarray  # (28, 3): x, y, coefficient
    faces: tuple[tuple[int, ...], ...]


CONTROL_NET_FACES: tuple[tuple[int, ...], ...] = (
    # corner p1
    (0, 3, 4), (3, 15, 4), (3, 9, 15), (4, 15, 10),
    # corner p2
    (1, 5, 6), (5, 16, 6), (5, 11, 16), (6, 16, 12),
    # corner p3
    (2, 7, 8), (7, 17, 8), (7, 13, 17), (8, 17, 14),
    # edge p1p2
    (9, 12, 18), (9, 18, 21), (12, 24, 18), (18, 24, 27, 21), (15, 9, 21), (16, 24, 12),
    # edge p2p3
    (11, 14, 19), (11, 19, 23), (14, 26, 19), (19, 26, 27, 23), (16, 11, 23), (17, 26, 14),
    # edge p3p1
    (13, 10, 20), (13, 20, 25), (10, 22, 20), (20, 22, 27, 25), (17, 13, 25), (15, 22, 10),
    # centre
    (15, 21, 22), (16, 23, 24), (17, 25, 26),
    (21, 27, 22), (23, 27, 24), (25, 27, 26),
)


def control_net(basis: LocalBasis, coeffs: LocalCoeffs) -> ControlNet:
    if coeffs.tag != "B":
        coeffs = convert(coeffs)
    xy = basis.domain_points_xy("B")
    return ControlNet(np.column_stack([xy, coeffs.values]), CONTROL_NET_FACES)


def collocation_matrix(basis: LocalBasis) -> np.ndarray:
    """``A[k, i] = B_i(xi_k)`` at the 28 domain points."""
    return eval_basis_many(basis, basis.domain_points_xy("B"))


def collocation_condition(basis: LocalBasis) -> float:
    A = collocation_matrix(basis)
    if abs(np.linalg.det(A)) == 0.0:
        raise SingularSystemError("collocation matrix at the domain points is singular")
    return float(np.linalg.norm(np.linalg.inv(A), ord=np.inf))


def knot_line_discrepancy(basis: LocalBasis, n: int = 20, tag: Tag = "B") -> dict[int, float]:
    """Largest jump of derivatives of order 0..2 of the basis across interior knot lines.

    Every point on a line is evaluated with the polynomial pieces of the cells
    on both sides.  Derivatives are taken along the edge vectors ``p2 - p1``
    and ``p3 - p1``, so the numbers do not depend on the triangle's shape.
    """
    split = basis.split
    ref = _reference_arrangement(3)
    h = basis.triangle.h
    e2, e3 = np.array([-1.0, 1.0, 0.0]), np.array([-1.0, 0.0, 1.0])
    dir_sets = {0: [[]], 1: [[e2], [e3]], 2: [[e2, e2], [e2, e3], [e3, e3]]}
    report = {0: 0.0, 1: 0.0, 2: 0.0}
    t = (np.arange(n) + 0.5) / n
    for (i, j), line in zip(ref.lines, split.interior_lines):
        a, b = split.boundary_points[i], split.boundary_points[j]
        pts = a + t[:, None] * (b - a)
        off = 1e-7 * h * line.normal
        c_plus = locate_many(split, pts + off)
        c_minus = locate_many(split, pts - off)
        for k, sets in dir_sets.items():
            for dirs in sets:
                vp = directional_derivatives(basis, pts, dirs, tag, c_plus)
                vm = directional_derivatives(basis, pts, dirs, tag, c_minus)
                report[k] = max(report[k], float(np.abs(vp - vm).max()))
    return report


# ---------------------------------------------------------------------------
# relabeling
# ---------------------------------------------------------------------------

def _rename(name: str, perm) -> str:
    idx = [int(c) for c in name[1:]]
    return "p" + "".join(str(perm[i - 1] + 1) for i in idx)


@lru_cache(maxsize=None)
def index_permutation(perm: tuple[int, int, int]) -> tuple[int, ...]:
    """Basis index map for a vertex relabeling.

    If the triangle is relabeled as ``(q1, q2, q3) = (p[perm[0]], p[perm[1]],
    p[perm[2]])``, then basis function ``i`` on the relabeled triangle equals
    basis function ``sigma[i]`` on the original one.
    """
    lookup = {tuple(sorted(s)): i for i, s in enumerate(KNOT_SETS)}
    sigma = []
    for i, s in enumerate(KNOT_SETS):
        image = tuple(sorted(_rename(n, perm) for n in s))
        j = lookup[image]
        if WEIGHT_FACTORS[i] != WEIGHT_FACTORS[j]:
            raise AssertionError("relabeling maps between different basis types")
        sigma.append(j)
    return tuple(sigma)
