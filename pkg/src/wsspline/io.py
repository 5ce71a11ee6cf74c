"""Text formats: meshes, Hermite data files, spline coefficient CSV, exports.

Mesh file::

    # comment
    v x y          (one per vertex, ids are 1-based in file order)
    t i j k        (one per triangle)

Hermite file (global C^2 Hermite data, one record per line)::

    vertex v value <val>
    vertex v d1 x|y <val>
    vertex v d2 xx|xy|yy <val>
    edge a b normal-d1 <val>          first normal derivative at the midpoint
    edge a b normal-d2 1/3|2/3 <val>  second normal derivative at a + t (b - a)
    triangle t value <val>            value at the centroid

Edge records use the unit normal obtained by rotating ``b - a`` a quarter
turn counterclockwise, where ``a`` is the smaller vertex id.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import WsSplit, from_bary
from .global_space import GlobalSpline, Triangulation
from .local_basis import (
    CONTROL_NET_FACES,
    LocalCoeffs,
    control_net,
    convert,
    eval_basis_many,
    hermite_functionals,
)

__all__ = [
    "MeshFormatError",
    "HermiteFormatError",
    "SplineFormatError",
    "MeshMismatchError",
    "fmt",
    "read_mesh",
    "write_mesh",
    "parse_mesh",
    "hermite_records",
    "write_hermite",
    "read_hermite",
    "hermite_local_data",
    "write_spline",
    "read_spline",
    "split_csv",
    "split_svg",
    "sample_obj",
]


class MeshFormatError(ValueError):
    pass


class HermiteFormatError(ValueError):
    pass


class SplineFormatError(ValueError):
    pass


class MeshMismatchError(SplineFormatError):
    """Spline file was written for a different mesh."""


def fmt(x: float) -> str:
    """Shortest round-trip decimal."""
    return repr(float(x))


# ---------------------------------------------------------------------------
# meshes
# ---------------------------------------------------------------------------

def parse_mesh(text: str) -> Triangulation:
    V, Tr = [], []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "v" and len(parts) == 3:
                V.append((float(parts[1]), float(parts[2])))
            elif parts[0] == "t" and len(parts) == 4:
                Tr.append(tuple(int(p) - 1 for p in parts[1:]))
            else:
                raise ValueError
        except ValueError:
            raise MeshFormatError(f"line {n}: cannot parse {raw!r}") from None
    if not V or not Tr:
        raise MeshFormatError("mesh needs at least one vertex and one triangle")
    return Triangulation(np.array(V), np.array(Tr))


def read_mesh(path) -> Triangulation:
    return parse_mesh(Path(path).read_text(encoding="utf-8"))


def write_mesh(T: Triangulation, path) -> None:
    lines = [f"v {fmt(x)} {fmt(y)}" for x, y in T.vertices]
    lines += [f"t {i + 1} {j + 1} {k + 1}" for i, j, k in T.triangles]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Hermite data
# ---------------------------------------------------------------------------

def _edge_frame(T: Triangulation, a: int, b: int):
    pa, pb = T.vertices[a], T.vertices[b]
    d = pb - pa
    n = np.array([-d[1], d[0]]) / np.linalg.norm(d)
    return pa, pb, n


def hermite_records(T: Triangulation, fn) -> list[tuple]:
    """Records of the global Hermite data of a function (0-based ids)."""
    recs = []
    for v, p in enumerate(T.vertices):
        g = np.asarray(fn.grad(p))
        H = np.asarray(fn.hess(p))
        recs.append(("vertex", (v,), "value", "", float(fn.value(p))))
        recs += [("vertex", (v,), "d1", "x", float(g[0])), ("vertex", (v,), "d1", "y", float(g[1]))]
        recs += [("vertex", (v,), "d2", "xx", float(H[0, 0])), ("vertex", (v,), "d2", "xy", float(H[0, 1])),
                 ("vertex", (v,), "d2", "yy", float(H[1, 1]))]
    for a, b in T.edges:
        pa, pb, n = _edge_frame(T, a, b)
        m = (pa + pb) / 2
        recs.append(("edge", (a, b), "normal-d1", "", float(np.asarray(fn.grad(m)) @ n)))
        for t in ("1/3", "2/3"):
            q = pa + (1 / 3 if t == "1/3" else 2 / 3) * (pb - pa)
            recs.append(("edge", (a, b), "normal-d2", t, float(n @ np.asarray(fn.hess(q)) @ n)))
    for k, tri in enumerate(T.triangles):
        c = T.vertices[tri].mean(axis=0)
        recs.append(("triangle", (k,), "value", "", float(fn.value(c))))
    return recs


def write_hermite(records, path) -> None:
    out = []
    for kind, ids, op, arg, val in records:
        fields = [kind] + [str(i + 1) for i in ids] + [op] + ([arg] if arg else []) + [fmt(val)]
        out.append(" ".join(fields))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


_HERMITE_OPS = {
    ("vertex", "value"): {""},
    ("vertex", "d1"): {"x", "y"},
    ("vertex", "d2"): {"xx", "xy", "yy"},
    ("edge", "normal-d1"): {""},
    ("edge", "normal-d2"): {"1/3", "2/3"},
    ("triangle", "value"): {""},
}


def read_hermite(path) -> dict:
    """Map ``(kind, ids, op, arg) -> value`` with 0-based ids."""
    data = {}
    for n, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        p = line.split()
        try:
            kind = p[0]
            nid = {"vertex": 1, "edge": 2, "triangle": 1}[kind]
            ids = tuple(int(x) - 1 for x in p[1:1 + nid])
            rest = p[1 + nid:]
            if len(ids) != nid or len(rest) not in (2, 3):
                raise ValueError
            op = rest[0]
            arg = rest[1] if len(rest) == 3 else ""
            if arg not in _HERMITE_OPS[(kind, op)]:
                raise ValueError
            val = float(rest[-1])
            if kind == "edge":
                ids = tuple(sorted(ids))
            key = (kind, ids, op, arg)
        except (KeyError, IndexError, ValueError):
            raise HermiteFormatError(f"line {n}: cannot parse {raw!r}") from None
        if key in data:
            raise HermiteFormatError(f"line {n}: duplicate record {key}")
        data[key] = val
    return data


def hermite_local_data(T: Triangulation, data: dict, t: int) -> np.ndarray:
    """The 28 local interpolation values of triangle ``t`` from global records."""
    tri = [int(v) for v in T.triangles[t]]
    basis = T.bases[t]
    vals = []
    try:
        for v in tri:
            vals.append(data[("vertex", (v,), "value", "")])
            vals += [data[("vertex", (v,), "d1", a)] for a in ("x", "y")]
            vals += [data[("vertex", (v,), "d2", a)] for a in ("xx", "xy", "yy")]
        funcs = hermite_functionals(basis)
        for k in range(3):  # normal derivative at midpoints of edges opposite p_k
            a, b = sorted(tri[m] for m in range(3) if m != k)
            _, _, n = _edge_frame(T, a, b)
            inward = funcs[18 + k][2][0]
            sign = 1.0 if inward @ n > 0 else -1.0
            vals.append(sign * data[("edge", (a, b), "normal-d1", "")])
        for j, (k, l) in enumerate(((1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2))):
            site = funcs[21 + j][1]
            a, b = sorted(tri[m] for m in range(3) if m != k - 1)
            pa, pb, _ = _edge_frame(T, a, b)
            s = (site - pa) @ (pb - pa) / ((pb - pa) @ (pb - pa))
            tag = "1/3" if abs(s - 1 / 3) < 1e-6 else "2/3"
            vals.append(data[("edge", (a, b), "normal-d2", tag)])
        vals.append(data[("triangle", (t,), "value", "")])
    except KeyError as exc:
        raise HermiteFormatError(f"missing Hermite record {exc.args[0]}") from None
    return np.array(vals)


# ---------------------------------------------------------------------------
# spline coefficients
# ---------------------------------------------------------------------------

def write_spline(s: GlobalSpline, path) -> None:
    T = s.triangulation
    lines = ["# ws-spline 1", f"# mesh_hash {T.mesh_hash()}", "# basis Bt",
             "triangle," + ",".join(f"c{i + 1}" for i in range(28))]
    for k, row in enumerate(s.coeffs):
        lines.append(f"{k + 1}," + ",".join(fmt(x + 0.0) for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_spline(path, T: Triangulation) -> GlobalSpline:
    """Read coefficients; raises SplineFormatError on a mesh hash mismatch."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    meta = {}
    rows = []
    for line in text:
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2:
                meta[parts[0]] = parts[1]
            continue
        if not line.strip() or line.startswith("triangle"):
            continue
        vals = line.split(",")
        rows.append([float(x) for x in vals[1:]])
    if meta.get("mesh_hash") != T.mesh_hash():
        raise MeshMismatchError(
            f"spline was written for mesh {meta.get('mesh_hash')}, got {T.mesh_hash()}")
    C = np.array(rows)
    if C.shape != (T.n_triangles, 28):
        raise SplineFormatError(f"expected {T.n_triangles} rows of 28 coefficients")
    if meta.get("basis", "Bt") == "B":
        C = np.array([convert(LocalCoeffs(c, "B")).values for c in C])
    return GlobalSpline(T, C)


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def _vertex_ids(split: WsSplit, poly: np.ndarray) -> list[int]:
    d = np.linalg.norm(split.vertices[None, :, :] - poly[:, None, :], axis=-1)
    return d.argmin(axis=1).tolist()


def split_csv(splits: list[WsSplit]) -> tuple[str, str]:
    """``(vertices_csv, cells_csv)``; ids are per macro-triangle."""
    vrows = ["triangle,id,x,y"]
    crows = ["triangle,id,loop"]
    for t, sp in enumerate(splits, 1):
        for i, (x, y) in enumerate(sp.vertices, 1):
            vrows.append(f"{t},{i},{fmt(x)},{fmt(y)}")
        for c, poly in enumerate(sp.cell_polygons, 1):
            loop = " ".join(str(i + 1) for i in _vertex_ids(sp, poly))
            crows.append(f"{t},{c},{loop}")
    return "\n".join(vrows) + "\n", "\n".join(crows) + "\n"


def split_svg(splits: list[WsSplit], size: int = 600) -> str:
    pts = np.vstack([sp.triangle.vertices for sp in splits])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = 0.05 * size

    def tr(p):
        x = pad + (p[0] - lo[0]) / span * (size - 2 * pad)
        y = size - pad - (p[1] - lo[1]) / span * (size - 2 * pad)
        return f"{x:.3f},{y:.3f}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">']
    for sp in splits:
        for poly in sp.cell_polygons:
            out.append(f'<polygon points="{" ".join(tr(p) for p in poly)}" '
                       'fill="none" stroke="#888" stroke-width="0.5"/>')
        out.append(f'<polygon points="{" ".join(tr(p) for p in sp.triangle.vertices)}" '
                   'fill="none" stroke="black" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def sample_obj(s: GlobalSpline, n: int) -> str:
    """Height field over every triangle (lattice of size n) plus the control nets."""
    T = s.triangulation
    lines = ["o surface"]
    faces = []
    base = 1
    lat = [(i, j) for i in range(n + 1) for j in range(n + 1 - i)]
    index = {ij: k for k, ij in enumerate(lat)}
    bary = np.array([(i / n, j / n, (n - i - j) / n) for i, j in lat])
    for k, bas in enumerate(T.bases):
        xy = from_bary(bas.triangle, bary)
        z = eval_basis_many(bas, xy, "Bt") @ s.coeffs[k]
        lines += [f"v {fmt(x)} {fmt(y)} {fmt(w)}" for (x, y), w in zip(xy, z)]
        for i, j in lat:
            if i + j < n:
                a, b, c = index[(i, j)], index[(i + 1, j)], index[(i, j + 1)]
                faces.append((base + a, base + b, base + c))
                if i + j + 1 < n:
                    d = index[(i + 1, j + 1)]
                    faces.append((base + b, base + d, base + c))
        base += len(lat)
    lines += [f"f {a} {b} {c}" for a, b, c in faces]
    lines.append("o control_net")
    for k, bas in enumerate(T.bases):
        net = control_net(bas, LocalCoeffs(s.coeffs[k], "Bt"))
        lines += [f"v {fmt(x)} {fmt(y)} {fmt(w)}" for x, y, w in net.points]
        for f in CONTROL_NET_FACES:
            lines.append("f " + " ".join(str(base + i) for i in f))
        base += 28
    return "\n".join(lines) + "\n"
