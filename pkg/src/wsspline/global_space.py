"""C^2 cubic splines on WS_3-refined triangulations.

Coefficients live per triangle in Bt coordinates and local vertex labeling.
A minimal determining set (MDS) picks, per mesh vertex, edge and triangle,
the Bt domain points of one owner triangle; all other coefficients follow
from the smoothness conditions in :mod:`wsspline.smoothness`.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np

from .geometry import DegenerateTriangleError, OutOfDomainError, Triangle, from_bary, to_bary
from .local_basis import (
    LocalBasis,
    LocalCoeffs,
    build_local_basis,
    directional_derivatives,
    eval_basis_many,
    hermite_data,
    hermite_interpolate,
)
from .smoothness import (
    SharedEdge,
    all_constraints,
    apply_constraints,
    c0_constraints,
    c1_constraints,
    c2_constraints,
    canonicalize_edge,
    from_canonical,
    to_canonical,
)

__all__ = [
    "NonconformingMeshError",
    "PropagationError",
    "Triangulation",
    "MdsEntry",
    "MinimalDeterminingSet",
    "GlobalSpline",
    "VERTEX_POINTS",
    "EDGE_POINTS",
    "TRIANGLE_POINT",
    "dimension",
    "build_mds",
    "propagate",
    "propagation_matrix",
    "global_basis_fn",
    "eval_global",
    "locate_triangles",
    "constraint_residual",
    "fit_hermite",
    "fit_mds",
    "constraint_matrix",
    "jump_matrix",
    "stability_probe",
    "local_stability_probe",
    "uniform_refine",
    "structured_mesh",
]

# Bt indices (0-based) associated with each local vertex slot, edge and the triangle.
VERTEX_POINTS = ((0, 3, 4, 9, 10, 15), (1, 5, 6, 11, 12, 16), (2, 7, 8, 13, 14, 17))
EDGE_POINTS = {(0, 1): (18, 21, 24), (0, 2): (20, 22, 25), (1, 2): (19, 23, 26)}
TRIANGLE_POINT = 27

_VERTEX_TARGETS = frozenset(VERTEX_POINTS[0])  # p1 slot in canonical labeling
_EDGE_TARGETS = frozenset(EDGE_POINTS[(0, 1)])


class NonconformingMeshError(ValueError):
    pass


class PropagationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Triangulation:
    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 2)
        t = np.array(self.triangles, dtype=int).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise ValueError("vertex coordinates must be finite")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise NonconformingMeshError("triangle references an unknown vertex")
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        self._validate()

    def _validate(self):
        if len(self.triangles) == 0:
            raise NonconformingMeshError("mesh has no triangles")
        for k, tri in enumerate(self.triangles):
            if len(set(tri.tolist())) < 3:
                raise NonconformingMeshError(f"triangle {k} repeats a vertex")
            try:
                Triangle(self.vertices[tri])
            except DegenerateTriangleError as exc:
                raise NonconformingMeshError(f"triangle {k} is degenerate") from exc
        for e, inc in self.edge_triangles.items():
            if len(inc) > 2:
                raise NonconformingMeshError(f"edge {e} is shared by {len(inc)} triangles")
        used = np.unique(self.triangles)
        if len(used) != len(self.vertices):
            raise NonconformingMeshError("mesh has isolated vertices")
        self._check_t_junctions()
        self._check_connected()
        for v in range(len(self.vertices)):
            self.vertex_fan(v)

    def _check_t_junctions(self):
        V = self.vertices
        for a, b in self.edges:
            pa, pb = V[a], V[b]
            d = pb - pa
            L2 = d @ d
            rel = V - pa
            t = rel @ d / L2
            cross = rel[:, 0] * d[1] - rel[:, 1] * d[0]
            hit = (np.abs(cross) <= 1e-12 * L2) & (t > 1e-12) & (t < 1 - 1e-12)
            if hit.any():
                raise NonconformingMeshError(f"vertex {int(np.flatnonzero(hit)[0])} lies inside edge ({a}, {b})")

    def _check_connected(self):
        seen = {0}
        todo = [0]
        while todo:
            t = todo.pop()
            for n in self.neighbors(t):
                if n not in seen:
                    seen.add(n)
                    todo.append(n)
        if len(seen) != len(self.triangles):
            raise NonconformingMeshError("mesh is not connected")

    @cached_property
    def edge_triangles(self) -> dict[tuple[int, int], list[int]]:
        out: dict = {}
        for k, tri in enumerate(self.triangles):
            for i, j in ((0, 1), (1, 2), (0, 2)):
                e = tuple(sorted((int(tri[i]), int(tri[j]))))
                out.setdefault(e, []).append(k)
        return out

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted(self.edge_triangles)

    @property
    def interior_edges(self) -> list[tuple[int, int]]:
        return [e for e in self.edges if len(self.edge_triangles[e]) == 2]

    @cached_property
    def vertex_triangles(self) -> dict[int, list[int]]:
        out: dict = {}
        for k, tri in enumerate(self.triangles):
            for v in tri:
                out.setdefault(int(v), []).append(k)
        return out

    def neighbors(self, t: int) -> list[int]:
        tri = self.triangles[t]
        out = []
        for i, j in ((0, 1), (1, 2), (0, 2)):
            e = tuple(sorted((int(tri[i]), int(tri[j]))))
            out += [k for k in self.edge_triangles[e] if k != t]
        return out

    def vertex_fan(self, v: int) -> list[int]:
        """Triangles around ``v`` in breadth-first order from the lowest id."""
        inc = sorted(self.vertex_triangles[v])
        seen = [inc[0]]
        q = deque([inc[0]])
        while q:
            t = q.popleft()
            for n in self.neighbors(t):
                if n in inc and n not in seen and v in self.triangles[n]:
                    # neighbor across an edge through v
                    shared = set(self.triangles[t].tolist()) & set(self.triangles[n].tolist())
                    if v in shared:
                        seen.append(n)
                        q.append(n)
        if len(seen) != len(inc):
            raise NonconformingMeshError(f"triangles around vertex {v} do not form a single fan")
        return seen

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edge_triangles)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def bases(self) -> list[LocalBasis]:
        return [build_local_basis(Triangle(self.vertices[t])) for t in self.triangles]

    def mesh_hash(self) -> str:
        h = hashlib.sha256()
        for x, y in self.vertices:
            h.update(f"v {x!r} {y!r}\n".encode())
        for i, j, k in self.triangles:
            h.update(f"t {i} {j} {k}\n".encode())
        return h.hexdigest()[:16]

    def min_angle(self) -> float:
        return min(Triangle(self.vertices[t]).min_angle for t in self.triangles)


def dimension(T: Triangulation) -> int:
    return 6 * T.n_vertices + 3 * T.n_edges + T.n_triangles


Kind = Literal["vertex", "edge", "triangle"]


@dataclass(frozen=True)
class MdsEntry:
    triangle: int
    index: int  # Bt index in the triangle's local labeling
    kind: Kind
    key: tuple  # (vertex,), (a, b) or (triangle,)
    owner: int


@dataclass(frozen=True)
class MinimalDeterminingSet:
    entries: tuple[MdsEntry, ...]
    vertex_owner: dict = field(default_factory=dict)
    edge_owner: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)


def _edge_slots(tri, a, b):
    loc = [int(v) for v in tri]
    return tuple(sorted((loc.index(a), loc.index(b))))


def build_mds(T: Triangulation) -> MinimalDeterminingSet:
    entries = []
    v_owner, e_owner = {}, {}
    for v in range(T.n_vertices):
        t = min(T.vertex_triangles[v])
        v_owner[v] = t
        slot = [int(x) for x in T.triangles[t]].index(v)
        entries += [MdsEntry(t, i, "vertex", (v,), t) for i in VERTEX_POINTS[slot]]
    for e in T.edges:
        t = min(T.edge_triangles[e])
        e_owner[e] = t
        slots = _edge_slots(T.triangles[t], *e)
        entries += [MdsEntry(t, i, "edge", e, t) for i in EDGE_POINTS[slots]]
    for t in range(T.n_triangles):
        entries.append(MdsEntry(t, TRIANGLE_POINT, "triangle", (t,), t))
    return MinimalDeterminingSet(tuple(entries), v_owner, e_owner)


@dataclass(eq=False)
class GlobalSpline:
    triangulation: Triangulation
    coeffs: np.ndarray  # (n_T, 28), Bt tag, local labeling

    def local(self, t: int) -> LocalCoeffs:
        return LocalCoeffs(self.coeffs[t], "Bt")


def _transfer(T, edge: SharedEdge, C, known, targets, order=2):
    """Apply the constraints with targets in ``targets`` from left to right triangle."""
    tl, tr = edge.left, edge.right
    left = to_canonical(C[tl], edge.left_sigma)
    right = to_canonical(C[tr], edge.right_sigma)
    kr = to_canonical(known[tr], edge.right_sigma)
    for con in all_constraints(edge, order):
        i = con.target[2]
        if i not in targets:
            continue
        right[i] = con.evaluate(left, right)
        kr[i] = True
    C[tr] = from_canonical(right, edge.right_sigma)
    known[tr] = from_canonical(kr, edge.right_sigma).astype(bool)


def propagate(T: Triangulation, mds: MinimalDeterminingSet, values, check: bool = True) -> GlobalSpline:
    """Fill all coefficients from MDS values.

    ``values`` may be ``(n,)`` or ``(n, k)`` for k value vectors at once; the
    coefficient array of the result is then ``(n_T, 28)`` or ``(n_T, 28, k)``.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[0] != len(mds):
        raise ValueError(f"expected {len(mds)} values, got {values.shape[0]}")
    extra = values.shape[1:]
    C = np.zeros((T.n_triangles, 28) + extra)
    known = np.zeros((T.n_triangles, 28) + extra, dtype=bool)
    for e, val in zip(mds.entries, values):
        C[e.triangle, e.index] = val
        known[e.triangle, e.index] = True
    # vertex rings, breadth-first from the owner
    for v in range(T.n_vertices):
        owner = mds.vertex_owner[v]
        done = {owner}
        q = deque([owner])
        while q:
            t = q.popleft()
            for n in T.neighbors(t):
                if n in done or v not in T.triangles[n]:
                    continue
                shared = set(T.triangles[t].tolist()) & set(T.triangles[n].tolist())
                if v not in shared:
                    continue
                w = next(x for x in shared if x != v)
                edge = canonicalize_edge(T.vertices, T.triangles, (v, w), first=v, left=t)
                _transfer(T, edge, C, known, _VERTEX_TARGETS)
                done.add(n)
                q.append(n)
    # edge fills
    for e in T.interior_edges:
        owner = mds.edge_owner[e]
        edge = canonicalize_edge(T.vertices, T.triangles, e, left=owner)
        _transfer(T, edge, C, known, _EDGE_TARGETS)
    if not known.all():
        t, i = np.argwhere(known.reshape(T.n_triangles, 28, -1).all(-1) == 0)[0]
        raise PropagationError(f"coefficient {i} of triangle {t} was not determined")
    s = GlobalSpline(T, C)
    if check:
        worst, where = constraint_residual(s)
        scale = max(1.0, float(np.abs(C).max()))
        if worst > 1e-8 * scale:
            raise PropagationError(f"smoothness conditions violated by {worst:.3e} on edge {where}")
    return s


def constraint_residual(s: GlobalSpline):
    """Largest violation of the C^2 conditions over interior edges, and where."""
    T = s.triangulation
    worst, where = 0.0, None
    for e in T.interior_edges:
        edge = canonicalize_edge(T.vertices, T.triangles, e)
        left = to_canonical(s.coeffs[edge.left], edge.left_sigma)
        right = to_canonical(s.coeffs[edge.right], edge.right_sigma)
        expect = apply_constraints(edge, left, right)
        r = float(np.abs(expect - right).max())
        if r > worst:
            worst, where = r, e
    return worst, where


def propagation_matrix(T: Triangulation, mds: MinimalDeterminingSet | None = None) -> np.ndarray:
    """``(28 n_T, |mds|)`` matrix mapping MDS values to all Bt coefficients."""
    mds = build_mds(T) if mds is None else mds
    s = propagate(T, mds, np.eye(len(mds)), check=False)
    return s.coeffs.reshape(T.n_triangles * 28, len(mds))


def global_basis_fn(T: Triangulation, mds: MinimalDeterminingSet, entry: int) -> GlobalSpline:
    vals = np.zeros(len(mds))
    vals[entry] = 1.0
    return propagate(T, mds, vals)


def constraint_matrix(T: Triangulation) -> np.ndarray:
    """All 15 conditions per interior edge as rows over the ``28 n_T`` Bt coefficients."""
    rows = []
    n = T.n_triangles * 28
    for e in T.interior_edges:
        edge = canonicalize_edge(T.vertices, T.triangles, e)
        ls, rs = edge.left_sigma, edge.right_sigma
        for con in c0_constraints(edge) + c1_constraints(edge) + c2_constraints(edge):
            r = np.zeros(n)
            r[edge.right * 28 + rs[con.target[2]]] -= 1.0
            for side, _, i, c in con.sources:
                if side == "L":
                    r[edge.left * 28 + ls[i]] += c
                else:
                    r[edge.right * 28 + rs[i]] += c
            rows.append(r)
    return np.array(rows).reshape(-1, n)


def jump_matrix(T: Triangulation, n_points: int = 7) -> np.ndarray:
    """Sampled two-sided jumps of values and derivatives up to order 2 on interior edges.

    Independent of the coefficient conditions: rows are differences of
    basis-function derivatives evaluated from both sides.
    """
    rows = []
    n = T.n_triangles * 28
    ex, ey = np.eye(2)
    dirs = [[], [ex], [ey], [ex, ex], [ex, ey], [ey, ey]]
    for e in T.interior_edges:
        a, b = T.vertices[list(e)]
        t = (np.arange(n_points) + 0.5) / n_points
        pts = a + t[:, None] * (b - a)
        tl, tr = T.edge_triangles[e]
        h = max(T.bases[tl].triangle.h, T.bases[tr].triangle.h)
        for d in dirs:
            block = np.zeros((n_points, n))
            for sign, k in ((1.0, tl), (-1.0, tr)):
                bas = T.bases[k]
                vals = directional_derivatives(bas, pts, [bas.triangle.bary_direction(u) for u in d], "Bt")
                block[:, k * 28:(k + 1) * 28] += sign * vals * h ** len(d)
            rows.append(block)
    return np.vstack(rows) if rows else np.zeros((0, n))


# ---------------------------------------------------------------------------
# evaluation and fitting
# ---------------------------------------------------------------------------

def locate_triangles(T: Triangulation, pts) -> np.ndarray:
    """Lowest-id triangle containing each point (closed triangles)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    out = np.full(len(pts), -1)
    for k, tri in enumerate(T.triangles):
        todo = out < 0
        if not todo.any():
            break
        beta = to_bary(T.bases[k].triangle, pts[todo])
        inside = (beta >= -1e-12).all(axis=1)
        idx = np.flatnonzero(todo)[inside]
        out[idx] = k
    if (out < 0).any():
        bad = pts[np.flatnonzero(out < 0)[0]]
        raise OutOfDomainError(f"point {bad.tolist()} is outside the mesh")
    return out


def eval_global(s: GlobalSpline, pts, derivative=()) -> np.ndarray:
    """Values (or a directional derivative along Cartesian vectors) at points."""
    p = np.asarray(pts, dtype=float)
    P = np.atleast_2d(p)
    T = s.triangulation
    where = locate_triangles(T, P)
    out = np.empty(len(P))
    for k in np.unique(where):
        sel = where == k
        bas = T.bases[k]
        if derivative:
            vals = directional_derivatives(bas, P[sel], [bas.triangle.bary_direction(u) for u in derivative], "Bt")
        else:
            vals = eval_basis_many(bas, P[sel], "Bt")
        out[sel] = vals @ s.coeffs[k]
    return out[0] if p.ndim == 1 else out


def fit_hermite(T: Triangulation, fn) -> GlobalSpline:
    """Per-triangle Hermite interpolation of a smooth function.

    The interpolation data are shared between neighbors, so the result is
    globally C^2 when ``fn`` is.
    """
    C = np.array([hermite_interpolate(b, hermite_data(b, fn), "Bt").values for b in T.bases])
    return GlobalSpline(T, C)


def fit_mds(T: Triangulation, mds: MinimalDeterminingSet, fn) -> GlobalSpline:
    """Take MDS values from the per-triangle Hermite interpolant and propagate them."""
    local = fit_hermite(T, fn)
    vals = np.array([local.coeffs[e.triangle, e.index] for e in mds.entries])
    return propagate(T, mds, vals)


# ---------------------------------------------------------------------------
# stability
# ---------------------------------------------------------------------------

def _lattice(m: int) -> np.ndarray:
    pts = [(i / m, j / m, (m - i - j) / m) for i in range(m + 1) for j in range(m + 1 - i)]
    return np.array(pts)


def _random_vectors(rng, n, k):
    half = k // 2
    signs = rng.choice([-1.0, 1.0], size=(n, half))
    unif = rng.uniform(-1.0, 1.0, size=(n, k - half))
    return np.hstack([signs, unif])


def local_stability_probe(basis: LocalBasis, tag="B", trials: int = 200, grid: int = 40, seed: int = 0):
    """Empirical ``(min, max)`` of ``||sum c_i B_i||_inf / ||c||_inf``."""
    rng = np.random.default_rng(seed)
    pts = from_bary(basis.triangle, _lattice(grid))
    V = eval_basis_many(basis, pts, tag)
    c = _random_vectors(rng, 28, trials)
    ratio = np.abs(V @ c).max(axis=0) / np.abs(c).max(axis=0)
    return float(ratio.min()), float(ratio.max())


def stability_probe(T: Triangulation, mds: MinimalDeterminingSet | None = None, trials: int = 100,
                    grid: int = 20, seed: int = 0, relative_to: str = "coefficients"):
    """Empirical ``(K_minus, K_plus)``: range of the sampled sup norm of random splines.

    Random MDS values are propagated to full splines.  With
    ``relative_to="coefficients"`` the sup norm is divided by the largest
    Bt coefficient over all triangles; with ``relative_to="mds"`` by the
    largest MDS value.
    """
    if relative_to not in ("coefficients", "mds"):
        raise ValueError("relative_to must be 'coefficients' or 'mds'")
    mds = build_mds(T) if mds is None else mds
    rng = np.random.default_rng(seed)
    c = _random_vectors(rng, len(mds), trials)
    s = propagate(T, mds, c, check=False)
    lat = _lattice(grid)
    sup = np.zeros(trials)
    for k, bas in enumerate(T.bases):
        V = eval_basis_many(bas, from_bary(bas.triangle, lat), "Bt")
        sup = np.maximum(sup, np.abs(V @ s.coeffs[k]).max(axis=0))
    denom = np.abs(c).max(axis=0) if relative_to == "mds" else np.abs(s.coeffs).max(axis=(0, 1))
    ratio = sup / denom
    return float(ratio.min()), float(ratio.max())


# ---------------------------------------------------------------------------
# meshes
# ---------------------------------------------------------------------------

def structured_mesh(nx: int, ny: int | None = None, x0=0.0, x1=1.0, y0=0.0, y1=1.0) -> Triangulation:
    """Square grid split along one diagonal family."""
    ny = nx if ny is None else ny
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    V = np.array([(x, y) for y in ys for x in xs])
    tris = []
    for j in range(ny):
        for i in range(nx):
            a = j * (nx + 1) + i
            b, c, d = a + 1, a + nx + 1, a + nx + 2
            tris += [(a, b, d), (a, d, c)]
    return Triangulation(V, np.array(tris))


def uniform_refine(T: Triangulation) -> Triangulation:
    """Split every triangle into four by its edge midpoints."""
    V = [tuple(v) for v in T.vertices]
    mid = {}
    for a, b in T.edges:
        mid[(a, b)] = len(V)
        V.append(tuple((T.vertices[a] + T.vertices[b]) / 2))
    tris = []
    for i, j, k in T.triangles:
        m = lambda a, b: mid[tuple(sorted((int(a), int(b))))]
        ij, jk, ik = m(i, j), m(j, k), m(i, k)
        tris += [(i, ij, ik), (ij, j, jk), (ik, jk, k), (ij, jk, ik)]
    return Triangulation(np.array(V), np.array(tris))
