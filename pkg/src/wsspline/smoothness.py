"""Coefficient conditions for C^0, C^1 and C^2 joins across a shared edge.

The conditions assume both triangles are labeled so the shared edge is
``(p1, p2)``; the left triangle is ``(p1, p2, p3)``, the right one
``(p1, p2, p4)`` with ``p4 = eta1 p1 + eta2 p2 + eta3 p3``.  Real meshes are
brought into that form by :func:`canonicalize_edge`, which also returns the
induced basis index permutations.

Constraints are emitted in solved form (target := sum of coefficient *
source) and always in Bt coordinates; for indices 0..20 the B and Bt
coefficients coincide.  Indices are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Triangle, to_bary
from .local_basis import (
    LocalBasis,
    LocalCoeffs,
    build_local_basis,
    convert,
    directional_derivatives,
    index_permutation,
)

__all__ = [
    "NotSharedError",
    "SharedEdge",
    "SmoothnessConstraint",
    "canonicalize_edge",
    "shared_edge",
    "c0_constraints",
    "c1_constraints",
    "c2_constraints",
    "all_constraints",
    "c2_relations_b",
    "apply_constraints",
    "to_canonical",
    "from_canonical",
    "verify_smoothness",
    "pair_from_left",
]


class NotSharedError(ValueError):
    pass


@dataclass(frozen=True)
class SharedEdge:
    """A shared edge brought into the convention above.

    ``left_perm``/``right_perm`` map canonical vertex slots to local vertex
    slots of each mesh triangle; ``left_sigma``/``right_sigma`` are the
    induced basis index maps (canonical index i -> local index sigma[i]).
    """

    left: int
    right: int
    vertices: tuple[int, int]
    eta: tuple[float, float, float]
    left_perm: tuple[int, int, int] = (0, 1, 2)
    right_perm: tuple[int, int, int] = (0, 1, 2)

    def __post_init__(self):
        if abs(sum(self.eta) - 1.0) > 1e-9:
            raise ValueError("eta must sum to one")
        if self.eta[2] == 0.0:
            raise ValueError("eta3 must be nonzero")

    @property
    def left_sigma(self):
        return index_permutation(self.left_perm)

    @property
    def right_sigma(self):
        return index_permutation(self.right_perm)


@dataclass(frozen=True)
class SmoothnessConstraint:
    order: int
    target: tuple[str, str, int]  # (side, tag, index)
    sources: tuple[tuple[str, str, int, float], ...]

    def evaluate(self, left: np.ndarray, right: np.ndarray):
        """Target value from left/right coefficient arrays (rows are basis indices)."""
        side = {"L": left, "R": right}
        return sum(c * side[s][i] for s, _, i, c in self.sources)


def _perm_to(local, canonical_ids):
    return tuple(local.index(v) for v in canonical_ids)


def shared_edge(left_xy, right_xy, left=0, right=1) -> SharedEdge:
    """SharedEdge for two triangles already labeled ``(p1, p2, p3)`` and ``(p1, p2, p4)``."""
    left_xy = np.asarray(left_xy, dtype=float)
    right_xy = np.asarray(right_xy, dtype=float)
    if not (np.allclose(left_xy[0], right_xy[0]) and np.allclose(left_xy[1], right_xy[1])):
        raise NotSharedError("triangles do not share the edge (p1, p2) in this labeling")
    eta = to_bary(Triangle(left_xy), right_xy[2])
    return SharedEdge(left, right, (0, 1), tuple(float(e) for e in eta))


def canonicalize_edge(vertices, triangles, edge, first: int | None = None,
                      left: int | None = None) -> SharedEdge:
    """Relabel the two triangles incident to ``edge = (a, b)`` (vertex ids).

    By default the endpoint with the smaller id becomes p1 and the incident
    triangle with the smaller id becomes the left triangle; ``first`` and
    ``left`` override these choices.
    """
    vertices = np.asarray(vertices, dtype=float)
    a, b = sorted(int(v) for v in edge)
    if first is not None:
        if first not in (a, b):
            raise ValueError(f"vertex {first} is not an endpoint of edge ({a}, {b})")
        a, b = first, (b if first == a else a)
    inc = [t for t, tri in enumerate(triangles) if a in tri and b in tri]
    if len(inc) != 2:
        raise NotSharedError(f"edge ({a}, {b}) has {len(inc)} incident triangle(s), expected 2")
    tl, tr = sorted(inc)
    if left is not None:
        if left not in inc:
            raise ValueError(f"triangle {left} is not incident to edge ({a}, {b})")
        tl, tr = left, (tr if left == tl else tl)
    perms, third = [], []
    for t in (tl, tr):
        loc = [int(v) for v in triangles[t]]
        c = next(v for v in loc if v not in (a, b))
        third.append(c)
        perms.append(_perm_to(loc, (a, b, c)))
    left_tri = Triangle(vertices[[a, b, third[0]]])
    eta = to_bary(left_tri, vertices[third[1]])
    return SharedEdge(tl, tr, (a, b), tuple(float(e) for e in eta), perms[0], perms[1])


def to_canonical(values, sigma) -> np.ndarray:
    return np.asarray(values, dtype=float)[list(sigma)]


def from_canonical(values, sigma) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    out[list(sigma)] = values
    return out


def _row(order, target, terms):
    return SmoothnessConstraint(
        order, ("R", "Bt", target - 1),
        tuple(("L", "Bt", i - 1, float(c)) for i, c in terms),
    )


def c0_constraints(edge: SharedEdge) -> list[SmoothnessConstraint]:
    return [_row(0, i, [(i, 1.0)]) for i in (1, 2, 4, 7, 10, 13)]


def c1_constraints(edge: SharedEdge) -> list[SmoothnessConstraint]:
    e1, e2, e3 = edge.eta
    return [
        _row(1, 5, [(1, e1), (4, e2), (5, e3)]),
        _row(1, 16, [(4, e1 + e2 / 2), (10, e2 / 2), (16, e3)]),
        _row(1, 19, [(10, 0.6 * e1 + 0.4 * e2), (13, 0.4 * e1 + 0.6 * e2), (19, e3)]),
        _row(1, 17, [(7, e1 / 2 + e2), (13, e1 / 2), (17, e3)]),
        _row(1, 6, [(7, e1), (2, e2), (6, e3)]),
    ]


def c2_constraints(edge: SharedEdge) -> list[SmoothnessConstraint]:
    e1, e2, e3 = edge.eta
    return [
        _row(2, 11, [(1, e1 * (e1 - e2 - e3)), (4, e2 * (3 * e1 - e3)), (5, e3 * (3 * e1 - e2)),
                     (10, e2 ** 2), (11, e3 ** 2), (16, 4 * e2 * e3)]),
        _row(2, 12, [(2, e2 * (e2 - e1 - e3)), (7, e1 * (3 * e2 - e3)), (6, e3 * (3 * e2 - e1)),
                     (13, e1 ** 2), (12, e3 ** 2), (17, 4 * e1 * e3)]),
        _row(2, 22, [(4, (e1 - e3) * (2 * e1 + e2) / 6),
                     (10, 5 / 18 * e2 + 7 / 18 * e2 ** 2 + 2 / 3 * e1 + 2 / 3 * e1 * e2),
                     (13, (2 * e1 + 3 * e2) * (e2 - 2 * e3) / 9),
                     (16, e3 * (3 * e1 + e2) / 3),
                     (19, 10 / 9 * e3 * (2 * e2 + e1)),
                     (22, e3 ** 2)]),
        _row(2, 25, [(7, (e2 - e3) * (2 * e2 + e1) / 6),
                     (13, 5 / 18 * e1 + 7 / 18 * e1 ** 2 + 2 / 3 * e2 + 2 / 3 * e1 * e2),
                     (10, (3 * e1 + 2 * e2) * (e1 - 2 * e3) / 9),
                     (17, e3 * (3 * e2 + e1) / 3),
                     (19, 10 / 9 * e3 * (2 * e1 + e2)),
                     (25, e3 ** 2)]),
    ]


def all_constraints(edge: SharedEdge, order: int = 2) -> list[SmoothnessConstraint]:
    out = c0_constraints(edge)
    if order >= 1:
        out += c1_constraints(edge)
    if order >= 2:
        out += c2_constraints(edge)
    return out


def c2_relations_b(edge: SharedEdge) -> list[tuple[dict, dict]]:
    """The last two C^2 conditions restated in B coefficients.

    Returns ``(right_weights, left_weights)`` pairs meaning
    ``sum right_weights[i] b^R_i = sum left_weights[j] b^L_j``.
    """
    out = []
    for con, (a, b) in zip(c2_constraints(edge)[2:], ((21, 22), (24, 23))):
        right = {a: 2 / 3, b: 1 / 3}
        left: dict = {}
        for _, _, i, c in con.sources:
            if i == a:
                left[a] = left.get(a, 0.0) + 2 / 3 * c
                left[b] = left.get(b, 0.0) + 1 / 3 * c
            else:
                left[i] = left.get(i, 0.0) + c
        out.append((right, left))
    return out


def apply_constraints(edge: SharedEdge, left_bt, right_bt=None, order: int = 2) -> np.ndarray:
    """Fill the constrained right coefficients (canonical labeling, Bt tag)."""
    left_bt = np.asarray(left_bt, dtype=float)
    right = np.zeros_like(left_bt) if right_bt is None else np.array(right_bt, dtype=float)
    for con in all_constraints(edge, order):
        right[con.target[2]] = con.evaluate(left_bt, right)
    return right


# ---------------------------------------------------------------------------
# sampling check
# ---------------------------------------------------------------------------

def _one_sided(basis: LocalBasis, coeffs: LocalCoeffs, pts, dirs):
    vals = directional_derivatives(basis, pts, [basis.triangle.bary_direction(d) for d in dirs],
                                   coeffs.tag)
    return vals @ coeffs.values


def verify_smoothness(left: tuple[LocalBasis, LocalCoeffs], right: tuple[LocalBasis, LocalCoeffs],
                      a, b, order: int = 2, n: int = 50) -> dict[int, float]:
    """Max two-sided discrepancy of derivatives up to ``order`` along the segment ``ab``.

    Derivatives of order k are multiplied by ``h^k`` (h the longest edge of
    the two triangles) and everything is divided by the largest coefficient
    magnitude, so the numbers are scale free.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t = (np.arange(n) + 0.5) / n
    pts = a + t[:, None] * (b - a)
    h = max(left[0].triangle.h, right[0].triangle.h)
    scale = max(1.0, np.abs(left[1].values).max(), np.abs(right[1].values).max())
    ex, ey = np.eye(2)
    dir_sets = {0: [[]], 1: [[ex], [ey]], 2: [[ex, ex], [ex, ey], [ey, ey]]}
    report = {}
    for k in range(order + 1):
        worst = 0.0
        for dirs in dir_sets[k]:
            dl = _one_sided(*left, pts, dirs)
            dr = _one_sided(*right, pts, dirs)
            worst = max(worst, float(np.abs(dl - dr).max()) * h ** k / scale)
        report[k] = worst
    return report


def pair_from_left(left_xy, right_xy, left_coeffs: LocalCoeffs, order: int = 2):
    """Right coefficients joining the left spline with the given smoothness.

    Coefficients not fixed by the conditions are set to zero.  Both
    triangles must be labeled with the shared edge as ``(p1, p2)``.
    """
    edge = shared_edge(left_xy, right_xy)
    lb = left_coeffs if left_coeffs.tag == "Bt" else convert(left_coeffs)
    right = apply_constraints(edge, lb.values, order=order)
    return edge, build_local_basis(Triangle(np.asarray(right_xy, float))), LocalCoeffs(right, "Bt")
