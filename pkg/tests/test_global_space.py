import numpy as np
import pytest
from scipy.spatial import Delaunay

from wsspline.functions import random_cubic
from wsspline.geometry import OutOfDomainError
from wsspline.global_space import (
    GlobalSpline,
    NonconformingMeshError,
    PropagationError,
    Triangulation,
    build_mds,
    constraint_matrix,
    constraint_residual,
    dimension,
    eval_global,
    fit_hermite,
    fit_mds,
    global_basis_fn,
    jump_matrix,
    local_stability_probe,
    propagate,
    propagation_matrix,
    stability_probe,
    structured_mesh,
    uniform_refine,
)

SINGLE = Triangulation(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]))
PAIR = Triangulation(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]), np.array([[0, 1, 2], [1, 3, 2]]))


def delaunay_mesh(rng, n_points):
    while True:
        P = rng.uniform(0, 1, size=(n_points, 2))
        tri = Delaunay(P)
        try:
            T = Triangulation(P, tri.simplices)
        except NonconformingMeshError:
            continue
        if T.min_angle() > 0.1:
            return T


def rank_deficit(M, n):
    if M.shape[0] == 0:
        return n
    s = np.linalg.svd(M, compute_uv=False)
    return n - int((s > 1e-9 * s[0]).sum())


@pytest.mark.parametrize("T, dim", [(SINGLE, 28), (PAIR, 41), (structured_mesh(2), 110)])
def test_dimension_values(T, dim):
    assert dimension(T) == dim
    assert len(build_mds(T)) == dim


@pytest.mark.parametrize("seed", range(4))
def test_dimension_equals_rank_deficit(seed):
    rng = np.random.default_rng(seed)
    T = delaunay_mesh(rng, 5 + seed % 2)
    assert T.n_triangles <= 8
    n = 28 * T.n_triangles
    assert rank_deficit(constraint_matrix(T), n) == dimension(T)
    assert rank_deficit(jump_matrix(T), n) == dimension(T)


def test_propagation_spans_the_space():
    T = structured_mesh(2)
    P = propagation_matrix(T)
    assert np.linalg.matrix_rank(P) == dimension(T)
    assert np.abs(constraint_matrix(T) @ P).max() <= 1e-10


@pytest.mark.parametrize("seed", range(3))
def test_cubic_reproduction(seed):
    rng = np.random.default_rng(seed)
    T = delaunay_mesh(rng, 7)
    f = random_cubic(rng)
    s = fit_mds(T, build_mds(T), f)
    P = np.vstack([rng.dirichlet([1, 1, 1], 30) @ T.vertices[t] for t in T.triangles])
    assert np.abs(eval_global(s, P) - f.value(P)).max() <= 1e-9


def test_global_partition_of_unity():
    T = structured_mesh(2)
    mds = build_mds(T)
    total = sum(global_basis_fn(T, mds, k).coeffs for k in range(len(mds)))
    P = np.random.default_rng(0).uniform(0, 1, size=(200, 2))
    assert np.abs(eval_global(GlobalSpline(T, total), P) - 1).max() <= 1e-12


def test_basis_support_is_local():
    T = structured_mesh(3)
    mds = build_mds(T)
    for k, e in enumerate(mds.entries):
        s = global_basis_fn(T, mds, k)
        nonzero = {t for t in range(T.n_triangles) if np.any(s.coeffs[t] != 0.0)}
        if e.kind == "vertex":
            allowed = set(T.vertex_triangles[e.key[0]])
        elif e.kind == "edge":
            allowed = set(T.edge_triangles[e.key])
        else:
            allowed = {e.triangle}
        assert nonzero <= allowed


def test_random_mds_values_give_c2_spline():
    T = structured_mesh(2)
    mds = build_mds(T)
    s = propagate(T, mds, np.random.default_rng(4).uniform(-1, 1, len(mds)))
    assert constraint_residual(s)[0] <= 1e-12


def test_fit_hermite_is_smooth_for_smooth_data():
    T = structured_mesh(2)
    s = fit_hermite(T, random_cubic(np.random.default_rng(1)))
    assert constraint_residual(s)[0] <= 1e-9


def test_wrong_number_of_values():
    T = PAIR
    with pytest.raises(ValueError):
        propagate(T, build_mds(T), np.zeros(40))


def test_corrupted_mds_detected():
    T = structured_mesh(2)
    mds = build_mds(T)
    # duplicate an entry instead of a distinct one: some coefficient stays unknown
    bad = type(mds)(mds.entries[:-1] + (mds.entries[0],), mds.vertex_owner, mds.edge_owner)
    with pytest.raises(PropagationError):
        propagate(T, bad, np.zeros(len(bad)))


def test_eval_outside_mesh():
    with pytest.raises(OutOfDomainError):
        eval_global(GlobalSpline(SINGLE, np.ones((1, 28))), np.array([[2.0, 2.0]]))


@pytest.mark.parametrize("V, tris", [
    ([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]]),                                   # degenerate
    ([[0, 0], [1, 0], [0, 1], [1, 1], [0, -1], [5, 5]], [[0, 1, 2], [1, 3, 2]]),  # isolated vertex
    ([[0, 0], [1, 0], [0, 1], [0.5, 0], [0.5, -1]], [[0, 1, 2], [0, 3, 4]]),  # hanging vertex
    ([[0, 0], [1, 0], [0, 1], [5, 5], [6, 5], [5, 6]], [[0, 1, 2], [3, 4, 5]]),  # disconnected
    ([[0, 0], [1, 0], [0, 1], [1, 1], [0.5, -1]], [[0, 1, 2], [1, 3, 2], [0, 1, 4], [1, 2, 4]]),
])
def test_nonconforming_meshes_rejected(V, tris):
    with pytest.raises(NonconformingMeshError):
        Triangulation(np.array(V, dtype=float), np.array(tris))


def test_bowtie_rejected():
    V = np.array([[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)
    with pytest.raises(NonconformingMeshError):
        Triangulation(V, np.array([[0, 1, 2], [0, 3, 4]]))


def test_refine_counts():
    T = structured_mesh(2)
    R = uniform_refine(T)
    assert R.n_triangles == 4 * T.n_triangles
    assert R.n_vertices == T.n_vertices + T.n_edges


def test_mesh_hash_depends_on_geometry():
    a = structured_mesh(2)
    b = structured_mesh(2, x1=2.0)
    assert a.mesh_hash() == structured_mesh(2).mesh_hash()
    assert a.mesh_hash() != b.mesh_hash()


def test_stability_probe_bounded():
    T = structured_mesh(2)
    kmin, kmax = stability_probe(T, trials=60, grid=10)
    assert 0 < kmin <= kmax <= 3.0
    kmin2, kmax2 = stability_probe(uniform_refine(T), trials=60, grid=10)
    assert kmax2 <= 3.0
    assert 0.5 <= kmin2 / kmin <= 2.0 and 0.5 <= kmax2 / kmax <= 2.0


def test_stability_probe_relative_to_mds():
    kmin, kmax = stability_probe(structured_mesh(2), trials=30, grid=8, relative_to="mds")
    assert 0 < kmin <= kmax
    with pytest.raises(ValueError):
        stability_probe(structured_mesh(1), relative_to="nothing")


def test_local_stability_lower_bound():
    b = SINGLE.bases[0]
    kmin, kmax = local_stability_probe(b, "B", trials=300, grid=20)
    assert kmin >= 1 / 37
    assert kmax <= 1.0 + 1e-12


def test_single_triangle_mds_is_all_points():
    mds = build_mds(SINGLE)
    assert sorted(e.index for e in mds.entries) == list(range(28))


def test_two_triangle_mds_composition():
    kinds = [e.kind for e in build_mds(PAIR).entries]
    assert (kinds.count("vertex"), kinds.count("edge"), kinds.count("triangle")) == (24, 15, 2)


def test_zero_values_give_zero_spline():
    T = structured_mesh(2)
    s = propagate(T, build_mds(T), np.zeros(dimension(T)))
    assert np.all(s.coeffs == 0.0)


def test_affine_values_give_alt_domain_coefficients():
    T = structured_mesh(2)
    mds = build_mds(T)
    f = lambda P: 0.3 - 1.2 * P[..., 0] + 2.0 * P[..., 1]
    vals = [f(T.bases[e.triangle].domain_points_xy("Bt")[e.index]) for e in mds.entries]
    s = propagate(T, mds, vals)
    for k, b in enumerate(T.bases):
        assert np.allclose(s.coeffs[k], f(b.domain_points_xy("Bt")), atol=1e-12)


def test_propagated_cubic_matches_local_hermite():
    rng = np.random.default_rng(21)
    T = delaunay_mesh(rng, 7)
    f = random_cubic(rng)
    assert np.allclose(fit_mds(T, build_mds(T), f).coeffs, fit_hermite(T, f).coeffs, atol=1e-9)


def test_vertex_function_support_on_interior_fan():
    T = structured_mesh(2)
    mds = build_mds(T)
    centre = 4  # interior vertex of the 3x3 grid
    for k, e in enumerate(mds.entries):
        if e.kind == "vertex" and e.key == (centre,):
            C = global_basis_fn(T, mds, k).coeffs
            outside = [t for t in range(T.n_triangles) if t not in T.vertex_triangles[centre]]
            assert np.all(C[outside] == 0.0)


def test_gradient_and_hessian_evaluation():
    T = structured_mesh(2)
    f = random_cubic(np.random.default_rng(6))
    s = fit_hermite(T, f)
    P = np.random.default_rng(1).uniform(0.05, 0.95, size=(50, 2))
    ex, ey = np.eye(2)
    g = f.grad(P)
    H = f.hess(P)
    assert np.allclose(eval_global(s, P, derivative=[ex]), g[:, 0], atol=1e-8)
    assert np.allclose(eval_global(s, P, derivative=[ey]), g[:, 1], atol=1e-8)
    assert np.allclose(eval_global(s, P, derivative=[ex, ey]), H[:, 0, 1], atol=1e-7)
