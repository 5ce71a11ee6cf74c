import numpy as np
import pytest

from wsspline.cli import main, sample_grid
from wsspline.functions import builtin
from wsspline.global_space import eval_global, structured_mesh
from wsspline.io import hermite_records, read_mesh, read_spline, write_hermite, write_mesh

TRI = ["--triangle", "0", "0", "1", "0", "0", "1"]


@pytest.fixture
def pair_mesh(tmp_path):
    p = tmp_path / "pair.msh"
    p.write_text("v 0 0\nv 1 0\nv 0 1\nv 1 1\nt 1 2 3\nt 2 4 3\n")
    return p


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("d, expect", [
    (3, "interior lines: 18, vertices: 58, cells: 75, dim: 28"),
    (2, "interior lines: 6, vertices: 10, cells: 12, dim: 12"),
    (1, "interior lines: 0, vertices: 3, cells: 1, dim: 3"),
])
def test_split_counts(capsys, d, expect):
    code, out, _ = run(capsys, "split", *TRI, "--degree", str(d))
    assert code == 0 and out.strip() == expect


def test_split_writes_files(capsys, tmp_path, pair_mesh):
    prefix = str(tmp_path / "sp")
    assert run(capsys, "split", "--mesh", str(pair_mesh), "--out", prefix)[0] == 0
    assert (tmp_path / "sp_vertices.csv").exists() and (tmp_path / "sp_cells.csv").exists()
    assert run(capsys, "split", "--mesh", str(pair_mesh), "--out", prefix, "--format", "svg")[0] == 0
    assert (tmp_path / "sp.svg").read_text().startswith("<svg")


def test_split_errors(capsys, tmp_path):
    bad = tmp_path / "bad.msh"
    bad.write_text("v 0 0\nnonsense\n")
    code, _, err = run(capsys, "split", "--mesh", str(bad))
    assert code == 2 and "parse" in err
    degen = tmp_path / "degen.msh"
    degen.write_text("v 0 0\nv 1 0\nv 2 0\nt 1 2 3\n")
    assert run(capsys, "split", "--mesh", str(degen))[0] == 3
    assert run(capsys, "split", "--triangle", "0", "0", "1", "1", "2", "2")[0] == 3


def test_bad_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["basis-table", *TRI, "--what", "bogus"])
    assert exc.value.code == 2


def _table(out):
    lines = out.strip().splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


def test_basis_table_values(capsys):
    _, out, _ = run(capsys, "basis-table", *TRI, "--what", "weights")
    _, rows = _table(out)
    assert float(rows[27][1]) == 0.5 / 15
    _, out, _ = run(capsys, "basis-table", *TRI, "--what", "hermite-matrix")
    _, rows = _table(out)
    assert float(rows[0][1]) == 1.0 and len(rows) == 28 and len(rows[0]) == 29
    _, out, _ = run(capsys, "basis-table", *TRI, "--what", "domain-points")
    _, rows = _table(out)
    assert [float(x) for x in rows[18][1:4]] == [7 / 15, 7 / 15, 1 / 15]
    _, out, _ = run(capsys, "basis-table", *TRI, "--what", "knots")
    _, rows = _table(out)
    assert rows[0][1].split() == ["p1", "p1", "p1", "p1", "p31", "p21"]


def test_fit_builtin_cubic(capsys, tmp_path, pair_mesh):
    out_path = tmp_path / "s.csv"
    code, out, _ = run(capsys, "fit", "--mesh", str(pair_mesh), "--sample-fn", "x3", "--out", str(out_path))
    assert code == 0
    assert float(out.split(":")[1]) <= 1e-8
    s = read_spline(out_path, read_mesh(pair_mesh))
    P = np.random.default_rng(0).dirichlet([1, 1, 1], 100) @ np.array([[0, 0], [1, 0], [0, 1.0]])
    assert np.abs(eval_global(s, P) - P[:, 0] ** 3).max() <= 1e-9


def test_fit_from_hermite_file(capsys, tmp_path, pair_mesh):
    T = read_mesh(pair_mesh)
    h = tmp_path / "zero.her"
    write_hermite(hermite_records(T, builtin("zero")), h)
    code, _, _ = run(capsys, "fit", "--mesh", str(pair_mesh), "--hermite", str(h), "--out", str(tmp_path / "z.csv"))
    assert code == 0
    assert np.all(read_spline(tmp_path / "z.csv", T).coeffs == 0.0)
    # dropping one record is a dimension mismatch
    h.write_text("\n".join(h.read_text().splitlines()[:-1]) + "\n")
    assert run(capsys, "fit", "--mesh", str(pair_mesh), "--hermite", str(h), "--out", str(tmp_path / "x.csv"))[0] == 4


def test_fit_constant_on_single_triangle(capsys, tmp_path):
    m = tmp_path / "one.msh"
    m.write_text("v 0 0\nv 1 0\nv 0 1\nt 1 2 3\n")
    T = read_mesh(m)
    write_hermite(hermite_records(T, builtin("one")), tmp_path / "one.her")
    assert run(capsys, "fit", "--mesh", str(m), "--hermite", str(tmp_path / "one.her"),
               "--out", str(tmp_path / "o.csv"))[0] == 0
    assert np.allclose(read_spline(tmp_path / "o.csv", T).coeffs, 1.0, atol=1e-12)


def test_sample_csv_and_obj(capsys, tmp_path, pair_mesh, monkeypatch):
    monkeypatch.setenv("WS_SPLINES_THREADS", "3")
    s_path = tmp_path / "s.csv"
    run(capsys, "fit", "--mesh", str(pair_mesh), "--sample-fn", "x", "--out", str(s_path))
    g = tmp_path / "g.csv"
    assert run(capsys, "sample", "--spline", str(s_path), "--mesh", str(pair_mesh), "--grid", "9", "--out", str(g))[0] == 0
    a = np.loadtxt(g, delimiter=",", skiprows=1)
    assert len(a) == 81
    assert np.abs(a[:, 2] - a[:, 0]).max() <= 1e-12
    o = tmp_path / "g.obj"
    assert run(capsys, "sample", "--spline", str(s_path), "--mesh", str(pair_mesh), "--grid", "4", "--out", str(o))[0] == 0
    assert "o control_net" in o.read_text()


def test_sample_constant_is_one(capsys, tmp_path, pair_mesh):
    s_path = tmp_path / "s.csv"
    run(capsys, "fit", "--mesh", str(pair_mesh), "--sample-fn", "one", "--out", str(s_path))
    g = tmp_path / "g.csv"
    run(capsys, "sample", "--spline", str(s_path), "--mesh", str(pair_mesh), "--grid", "7", "--out", str(g))
    a = np.loadtxt(g, delimiter=",", skiprows=1)
    assert np.abs(a[:, 2] - 1.0).max() <= 1e-12


def test_sample_matches_in_memory_evaluation(capsys, tmp_path):
    T = structured_mesh(2)
    m = tmp_path / "m.msh"
    write_mesh(T, m)
    s_path = tmp_path / "s.csv"
    run(capsys, "fit", "--mesh", str(m), "--sample-fn", "cubic", "--seed", "5", "--out", str(s_path))
    g = tmp_path / "g.csv"
    run(capsys, "sample", "--spline", str(s_path), "--mesh", str(m), "--grid", "6", "--out", str(g))
    a = np.loadtxt(g, delimiter=",", skiprows=1)
    P, vals = sample_grid(read_spline(s_path, read_mesh(m)), 6, threads=1)
    assert np.array_equal(a[:, :2], P)
    assert np.array_equal(a[:, 2], vals)


def test_sample_hash_mismatch(capsys, tmp_path, pair_mesh):
    s_path = tmp_path / "s.csv"
    run(capsys, "fit", "--mesh", str(pair_mesh), "--sample-fn", "one", "--out", str(s_path))
    other = tmp_path / "other.msh"
    other.write_text("v 0 0\nv 2 0\nv 0 2\nv 2 2\nt 1 2 3\nt 2 4 3\n")
    code, _, err = run(capsys, "sample", "--spline", str(s_path), "--mesh", str(other), "--grid", "3",
                       "--out", str(tmp_path / "g.csv"))
    assert code == 5 and "mesh" in err


def test_verify_default_passes(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0
    assert len(out.strip().splitlines()) == 6 and "FAIL" not in out


def test_verify_sliver(capsys, tmp_path):
    m = tmp_path / "sliver.msh"
    m.write_text("v 0 0\nv 1 0\nv 0.5 0.0005\nt 1 2 3\n")
    code, out, _ = run(capsys, "verify", "--mesh", str(m))
    assert code == 0
    cond = next(ln for ln in out.splitlines() if "condition" in ln)
    assert float(cond.split("max residual ")[1].split()[0]) < 37


def test_verify_broken_coefficient_fails(capsys, pair_mesh):
    code, out, _ = run(capsys, "verify", "--mesh", str(pair_mesh), "--break-coefficient")
    assert code == 1
    assert "FAIL c2-smoothness" in out
    assert out.count("PASS") == 5


def test_verify_is_deterministic(capsys, pair_mesh):
    a = run(capsys, "verify", "--mesh", str(pair_mesh), "--seed", "9")[1]
    b = run(capsys, "verify", "--mesh", str(pair_mesh), "--seed", "9")[1]
    assert a == b
