"""Triangles, barycentric coordinates and Wang-Shi split arrangements.

The WS_d split of a triangle is the arrangement of all chords joining the
``3d`` uniform boundary points.  Because the arrangement is affine invariant,
its combinatorics (cells, vertices, concurrences) are computed once per degree
in exact rational barycentric coordinates and then mapped onto each concrete
triangle.  Point location uses the sign vector of the interior lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "DegenerateTriangleError",
    "OutOfDomainError",
    "Triangle",
    "LineEq",
    "WsSplit",
    "CrossCutStats",
    "to_bary",
    "from_bary",
    "ws_split",
    "locate",
    "locate_many",
    "crosscut_dimension",
    "ws_dimension",
    "ws_stats",
]

BARY_TOL = 1e-12
TIE_TOL = 1e-12
DEDUP_TOL = 1e-9


class DegenerateTriangleError(ValueError):
    pass


class OutOfDomainError(ValueError):
    pass


@dataclass(frozen=True)
class Triangle:
    """A macro-triangle with vertices kept in the given order.

    ``ccw`` records the orientation; vertex order is never changed because
    basis indices are tied to the labeling (p1, p2, p3).
    """

    vertices: np.ndarray
    area: float = field(init=False)
    ccw: bool = field(init=False)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(3, 2)
        if not np.all(np.isfinite(v)):
            raise DegenerateTriangleError("non-finite vertex coordinates")
        signed = 0.5 * ((v[1, 0] - v[0, 0]) * (v[2, 1] - v[0, 1])
                        - (v[2, 0] - v[0, 0]) * (v[1, 1] - v[0, 1]))
        h = max(np.linalg.norm(v[i] - v[j]) for i, j in ((0, 1), (1, 2), (0, 2)))
        if h == 0.0 or abs(signed) <= 1e-14 * h * h:
            raise DegenerateTriangleError(f"collinear vertices {v.tolist()}")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "area", abs(signed))
        object.__setattr__(self, "ccw", signed > 0)

    @classmethod
    def from_points(cls, p1, p2, p3) -> Triangle:
        return cls(np.array([p1, p2, p3], dtype=float))

    @property
    def h(self) -> float:
        """Length of the longest edge."""
        v = self.vertices
        return max(float(np.linalg.norm(v[i] - v[j])) for i, j in ((0, 1), (1, 2), (0, 2)))

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    @property
    def min_angle(self) -> float:
        v = self.vertices
        angles = []
        for i in range(3):
            a, b = v[(i + 1) % 3] - v[i], v[(i + 2) % 3] - v[i]
            cosang = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
            angles.append(math.acos(max(-1.0, min(1.0, cosang))))
        return min(angles)

    def bary_direction(self, u) -> np.ndarray:
        """Barycentric increments of a Cartesian direction vector (rows sum to 0)."""
        u = np.asarray(u, dtype=float)
        flat = u.reshape(-1, 2)
        rhs = np.vstack([flat.T, np.zeros(flat.shape[0])])
        return np.linalg.solve(self._affine, rhs).T.reshape(u.shape[:-1] + (3,))

    @property
    def _affine(self) -> np.ndarray:
        v = self.vertices
        return np.array([v[:, 0], v[:, 1], np.ones(3)])

    def inward_normal(self, k: int) -> np.ndarray:
        """Inward unit normal of the edge opposite vertex ``k`` (0-based)."""
        v = self.vertices
        a, b = v[(k + 1) % 3], v[(k + 2) % 3]
        t = b - a
        n = np.array([-t[1], t[0]])
        if n @ (v[k] - a) < 0:
            n = -n
        return n / np.linalg.norm(n)


def to_bary(tri: Triangle, p) -> np.ndarray:
    """Barycentric coordinates of one point ``(2,)`` or many ``(N, 2)``."""
    p = np.asarray(p, dtype=float)
    pts = p.reshape(-1, 2)
    rhs = np.vstack([pts.T, np.ones(pts.shape[0])])
    b = np.linalg.solve(tri._affine, rhs).T
    return b.reshape(p.shape[:-1] + (3,))


def from_bary(tri: Triangle, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    return b @ tri.vertices


@dataclass(frozen=True)
class LineEq:
    """Affine functional ``a*x + b*y + c`` with ``a^2 + b^2 = 1``.

    The sign is fixed so that the first nonzero of ``(a, b)`` is positive.
    """

    a: float
    b: float
    c: float

    @classmethod
    def through(cls, p, q) -> LineEq:
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        t = q - p
        n = np.array([-t[1], t[0]])
        norm = np.linalg.norm(n)
        if norm == 0.0:
            raise ValueError("line through coincident points")
        n = n / norm
        if n[1] < 0 or (n[1] == 0 and n[0] < 0):
            n = -n
        return cls(float(n[0]), float(n[1]), float(-(n @ p)))

    def __call__(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return self.a * p[..., 0] + self.b * p[..., 1] + self.c

    @property
    def normal(self) -> np.ndarray:
        return np.array([self.a, self.b])


# ---------------------------------------------------------------------------
# exact reference arrangement (barycentric plane, coordinates (b1, b2))
# ---------------------------------------------------------------------------

FracPt = tuple[Fraction, Fraction]


@dataclass(frozen=True)
class _RefArrangement:
    degree: int
    boundary: tuple[tuple[Fraction, Fraction, Fraction], ...]
    lines: tuple[tuple[int, int], ...]  # pairs of boundary indices
    cells: tuple[tuple[tuple[Fraction, Fraction, Fraction], ...], ...]
    vertices: tuple[tuple[Fraction, Fraction, Fraction], ...]
    interior_multiplicity: dict


def _boundary_points(d: int):
    """3d boundary points, counterclockwise from p1 (p1 -> p2 -> p3)."""
    corners = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    pts = []
    for e in range(3):
        a, b = corners[e], corners[(e + 1) % 3]
        for k in range(d):
            t = Fraction(k, d)
            pts.append(tuple((1 - t) * a[i] + t * b[i] for i in range(3)))
    return pts


def _edge_of(pt) -> set[int]:
    """Indices of the triangle edges (0: b3=0, 1: b1=0, 2: b2=0) containing pt."""
    out = set()
    if pt[2] == 0:
        out.add(0)
    if pt[0] == 0:
        out.add(1)
    if pt[1] == 0:
        out.add(2)
    return out


def _line_coeffs(p, q) -> tuple[Fraction, Fraction, Fraction]:
    """(A, B, C) with A*u + B*v + C vanishing at p, q in (u, v) = (b1, b2)."""
    A = p[1] - q[1]
    B = q[0] - p[0]
    C = -(A * p[0] + B * p[1])
    return A, B, C


def _split_polygon(poly: list[FracPt], line):
    A, B, C = line
    vals = [A * u + B * v + C for u, v in poly]
    if all(s >= 0 for s in vals) or all(s <= 0 for s in vals):
        return None
    pos, neg = [], []
    n = len(poly)
    for i in range(n):
        p, sp = poly[i], vals[i]
        q, sq = poly[(i + 1) % n], vals[(i + 1) % n]
        if sp >= 0:
            pos.append(p)
        if sp <= 0:
            neg.append(p)
        if (sp > 0 and sq < 0) or (sp < 0 and sq > 0):
            t = sp / (sp - sq)
            x = (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))
            pos.append(x)
            neg.append(x)
    return pos, neg


@lru_cache(maxsize=None)
def _reference_arrangement(d: int) -> _RefArrangement:
    if d < 1:
        raise ValueError("degree must be >= 1")
    boundary = _boundary_points(d)
    lines = []
    for i in range(len(boundary)):
        for j in range(i + 1, len(boundary)):
            if _edge_of(boundary[i]) & _edge_of(boundary[j]):
                continue  # chord lies in the triangle boundary
            lines.append((i, j))
    cells: list[list[FracPt]] = [[(Fraction(1), Fraction(0)), (Fraction(0), Fraction(1)),
                                  (Fraction(0), Fraction(0))]]
    coeffs = [_line_coeffs(boundary[i], boundary[j]) for i, j in lines]
    for line in coeffs:
        nxt = []
        for poly in cells:
            parts = _split_polygon(poly, line)
            if parts is None:
                nxt.append(poly)
            else:
                nxt.extend(parts)
        cells = nxt
    bary_cells = tuple(tuple((u, v, 1 - u - v) for u, v in poly) for poly in cells)
    verts = sorted({pt for poly in bary_cells for pt in poly}, reverse=True)
    mult = {}
    for pt in verts:
        if 0 in pt:
            continue
        k = sum(1 for A, B, C in coeffs if A * pt[0] + B * pt[1] + C == 0)
        mult[pt] = k
    return _RefArrangement(d, tuple(boundary), tuple(lines), bary_cells, tuple(verts), mult)


@dataclass(frozen=True)
class CrossCutStats:
    m: int
    interior_vertices: tuple  # (Point, multiplicity) pairs


@dataclass(frozen=True, eq=False)
class WsSplit:
    degree: int
    triangle: Triangle
    boundary_points: np.ndarray
    interior_lines: tuple[LineEq, ...]
    vertices: np.ndarray
    cells: dict  # sign key -> cell id
    cell_polygons: tuple  # per cell (k, 2) vertex loops, counterclockwise
    cell_bary: tuple  # exact barycentric loops per cell
    cell_samples: np.ndarray  # one interior point per cell (Cartesian)

    @property
    def n_cells(self) -> int:
        return len(self.cell_polygons)

    def sign_keys(self, pts) -> list[int]:
        """Sign-vector keys (bit k set when line k is >= -tol) for many points."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        vals = self._line_matrix_eval(pts)
        bits = vals >= -TIE_TOL * self.triangle.h
        return _bits_to_keys(bits)

    def _line_matrix_eval(self, pts):
        if not self.interior_lines:
            return np.zeros((pts.shape[0], 0))
        L = np.array([[ln.a, ln.b, ln.c] for ln in self.interior_lines])
        return pts @ L[:, :2].T + L[:, 2]

    def stats(self) -> CrossCutStats:
        ref = _reference_arrangement(self.degree)
        inner = tuple((tuple(from_bary(self.triangle, np.array(pt, dtype=float))), k)
                      for pt, k in ref.interior_multiplicity.items())
        return CrossCutStats(m=len(self.interior_lines), interior_vertices=inner)


def _bits_to_keys(bits: np.ndarray) -> list[int]:
    n = bits.shape[1]
    if n == 0:
        return [0] * bits.shape[0]
    if n <= 62:
        w = (np.int64(1) << np.arange(n, dtype=np.int64))
        return (bits.astype(np.int64) @ w).tolist()
    return [int("".join("1" if b else "0" for b in row[::-1]), 2) for row in bits]


_SPLIT_CACHE: dict = {}


def ws_split(tri: Triangle, d: int) -> WsSplit:
    """Build the WS_d split of ``tri``."""
    if d < 1:
        raise ValueError("degree must be >= 1")
    key = (tri.vertices.tobytes(), d)
    cached = _SPLIT_CACHE.get(key)
    if cached is not None:
        return cached
    ref = _reference_arrangement(d)
    V = tri.vertices
    bnd = np.array([[float(c) for c in pt] for pt in ref.boundary]) @ V
    lines = tuple(LineEq.through(bnd[i], bnd[j]) for i, j in ref.lines)
    polys = []
    samples = []
    for cell in ref.cells:
        b = np.array([[float(c) for c in pt] for pt in cell])
        xy = b @ V
        if not tri.ccw:
            xy = xy[::-1]
        polys.append(xy)
        cen = [sum(pt[i] for pt in cell) / len(cell) for i in range(3)]
        samples.append(np.array([float(c) for c in cen]) @ V)
    samples = np.array(samples)
    verts = np.array([[float(c) for c in pt] for pt in ref.vertices]) @ V
    split = WsSplit(d, tri, bnd, lines, verts, {}, tuple(polys), ref.cells, samples)
    keys = split.sign_keys(samples)
    cells = {}
    for cid, k in enumerate(keys):
        if k in cells:
            raise RuntimeError(f"duplicate sign vector for cells {cells[k]} and {cid}")
        cells[k] = cid
    split.cells.update(cells)
    if len(_SPLIT_CACHE) > 256:
        _SPLIT_CACHE.clear()
    _SPLIT_CACHE[key] = split
    return split


def _check_inside(tri: Triangle, b: np.ndarray):
    bad = np.any(b < -1e-10, axis=-1)
    if np.any(bad):
        raise OutOfDomainError(f"point(s) outside the macro-triangle: {np.argwhere(bad).ravel()[:5].tolist()}")


def locate_many(split: WsSplit, pts) -> np.ndarray:
    """Cell ids for many points in the closed macro-triangle.

    Points on a knot line go to the cell on the nonnegative side of each line
    through them; if that side leaves the triangle the point is nudged toward
    the centroid first.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    tri = split.triangle
    _check_inside(tri, to_bary(tri, pts))
    keys = split.sign_keys(pts)
    out = np.empty(len(keys), dtype=np.int64)
    for n, k in enumerate(keys):
        cid = split.cells.get(k)
        if cid is None:
            cid = _fallback_cell(split, pts[n])
        out[n] = cid
    return out


def _fallback_cell(split: WsSplit, p: np.ndarray) -> int:
    tri = split.triangle
    c = tri.centroid
    step = c - p
    norm = np.linalg.norm(step)
    if norm > 0:
        q = p + 1e-9 * tri.h * step / norm
        cid = split.cells.get(split.sign_keys(q[None])[0])
        if cid is not None:
            return cid
    # closest cell sample among cells whose closed polygon contains p
    best, best_d = None, np.inf
    for cid, poly in enumerate(split.cell_polygons):
        if _in_convex(poly, p, 1e-9 * tri.h):
            d = np.linalg.norm(split.cell_samples[cid] - p)
            if d < best_d:
                best, best_d = cid, d
    if best is None:
        raise OutOfDomainError(f"no cell contains {p.tolist()}")
    return best


def _in_convex(poly: np.ndarray, p: np.ndarray, tol: float) -> bool:
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        t = b - a
        cross = t[0] * (p[1] - a[1]) - t[1] * (p[0] - a[0])
        if cross < -tol * np.linalg.norm(t):
            return False
    return True


def locate(split: WsSplit, p) -> int:
    return int(locate_many(split, np.asarray(p, dtype=float)[None])[0])


# ---------------------------------------------------------------------------
# dimension formulas
# ---------------------------------------------------------------------------

def _varsigma(l: int, d: int, r: int) -> Fraction:
    f = (r + 1) // (l - 1)
    first = max(d - r - f, 0)
    second = (l - 1) * d - (l + 1) * r + (l - 3) + (l - 1) * f
    return Fraction(first * second, 2)


def crosscut_dimension(d: int, r: int, stats: CrossCutStats) -> int:
    """Dimension of C^r degree-d splines on a cross-cut partition."""
    if d < 1 or not 0 <= r <= d - 1:
        raise ValueError(f"invalid (d, r) = ({d}, {r})")
    total = Fraction(math.comb(d + 2, 2) + stats.m * math.comb(d - r + 1, 2))
    for _, mk in stats.interior_vertices:
        if mk < 2:
            raise ValueError("interior vertex multiplicity must be >= 2")
        total += _varsigma(mk, d, r)
    assert total.denominator == 1
    return int(total)


def ws_stats(d: int) -> CrossCutStats:
    """Cross-cut statistics of the WS_d split (triangle independent)."""
    ref = _reference_arrangement(d)
    inner = tuple((tuple(float(c) for c in pt), k) for pt, k in ref.interior_multiplicity.items())
    return CrossCutStats(m=len(ref.lines), interior_vertices=inner)


def ws_dimension(d: int) -> int:
    if d < 1:
        raise ValueError("degree must be >= 1")
    return math.comb(d + 2, 2) + 3 * d * (d - 1)
