import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsspline.functions import random_cubic
from wsspline.geometry import Triangle
from wsspline.local_basis import LocalCoeffs, build_local_basis, hermite_data, hermite_interpolate
from wsspline.smoothness import (
    NotSharedError,
    all_constraints,
    apply_constraints,
    c2_relations_b,
    canonicalize_edge,
    from_canonical,
    pair_from_left,
    shared_edge,
    to_canonical,
    verify_smoothness,
)

from conftest import area2


def two_triangles(rng):
    while True:
        p1, p2, p3 = rng.uniform(-1, 1, size=(3, 2))
        if area2((p1, p2, p3)) < 0.2:
            continue
        # p4 on the other side of p1p2
        d = p2 - p1
        n = np.array([-d[1], d[0]])
        p4 = p1 + rng.uniform(-0.5, 1.5) * d - rng.uniform(0.3, 1.0) * n
        return np.array([p1, p2, p3]), np.array([p1, p2, p4])


def joined(rng, order=2):
    L, R = two_triangles(rng)
    lb = build_local_basis(Triangle(L))
    left = LocalCoeffs(rng.normal(size=28), "Bt")
    edge, rb, right = pair_from_left(L, R, left, order)
    # free right coefficients get random values too
    targets = {c.target[2] for c in all_constraints(edge, order)}
    free = [i for i in range(28) if i not in targets]
    vals = right.values.copy()
    vals[free] = rng.normal(size=len(free))
    right = LocalCoeffs(apply_constraints(edge, left.values, vals, order), "Bt")
    return L, R, lb, left, rb, right, edge


@pytest.mark.parametrize("seed", range(5))
def test_c2_join(seed):
    rng = np.random.default_rng(seed)
    L, R, lb, left, rb, right, _ = joined(rng)
    rep = verify_smoothness((lb, left), (rb, right), L[0], L[1])
    assert max(rep.values()) <= 1e-8


@pytest.mark.parametrize("order", [0, 1])
def test_lower_order_join_only_lower_order(order):
    rng = np.random.default_rng(7)
    L, R, lb, left, rb, right, _ = joined(rng, order)
    rep = verify_smoothness((lb, left), (rb, right), L[0], L[1])
    assert max(rep[k] for k in range(order + 1)) <= 1e-8
    assert rep[order + 1] > 1e-6


@pytest.mark.parametrize("target", [10, 11, 21, 24])
def test_breaking_a_c2_target_breaks_only_second_order(target):
    rng = np.random.default_rng(3)
    L, R, lb, left, rb, right, _ = joined(rng)
    v = right.values.copy()
    v[target] += 1.0
    rep = verify_smoothness((lb, left), (rb, LocalCoeffs(v, "Bt")), L[0], L[1])
    assert rep[0] <= 1e-8 and rep[1] <= 1e-8
    assert rep[2] > 1e-3


def test_constraint_weights_sum_to_one():
    rng = np.random.default_rng(0)
    L, R = two_triangles(rng)
    for c in all_constraints(shared_edge(L, R)):
        assert sum(w for *_, w in c.sources) == pytest.approx(1.0, abs=1e-12)


def test_constraints_reproduce_hermite_cubic():
    # a cubic interpolated on both sides must already satisfy every condition
    rng = np.random.default_rng(11)
    L, R = two_triangles(rng)
    f = random_cubic(rng)
    lb, rb = build_local_basis(Triangle(L)), build_local_basis(Triangle(R))
    cl = hermite_interpolate(lb, hermite_data(lb, f), "Bt").values
    cr = hermite_interpolate(rb, hermite_data(rb, f), "Bt").values
    for c in all_constraints(shared_edge(L, R)):
        assert c.evaluate(cl, cr) == pytest.approx(cr[c.target[2]], abs=1e-9 * max(1, np.abs(cr).max()))


def test_b_form_of_c2_relations_matches():
    rng = np.random.default_rng(5)
    L, R = two_triangles(rng)
    f = random_cubic(rng)
    lb, rb = build_local_basis(Triangle(L)), build_local_basis(Triangle(R))
    bl = hermite_interpolate(lb, hermite_data(lb, f), "B").values
    br = hermite_interpolate(rb, hermite_data(rb, f), "B").values
    for right, left in c2_relations_b(shared_edge(L, R)):
        lhs = sum(w * br[i] for i, w in right.items())
        rhs = sum(w * bl[i] for i, w in left.items())
        assert lhs == pytest.approx(rhs, abs=1e-9 * max(1, np.abs(bl).max()))


def test_not_shared():
    L = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    R = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, -1.0]])
    with pytest.raises(NotSharedError):
        shared_edge(L, R)


def test_canonicalize_relabels_mesh_triangles():
    V = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    tris = np.array([[2, 0, 1], [3, 2, 1]])
    e = canonicalize_edge(V, tris, (2, 1))
    assert e.vertices == (1, 2)
    assert (e.left, e.right) == (0, 1)
    assert np.allclose(e.eta, (1.0, 1.0, -1.0))
    assert [int(tris[0][k]) for k in e.left_perm] == [1, 2, 0]
    assert [int(tris[1][k]) for k in e.right_perm] == [1, 2, 3]
    with pytest.raises(NotSharedError):
        canonicalize_edge(V, tris, (0, 3))


def test_canonical_round_trip():
    rng = np.random.default_rng(2)
    sigma = np.random.default_rng(0).permutation(28)
    v = rng.normal(size=28)
    assert np.allclose(from_canonical(to_canonical(v, sigma), sigma), v)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(-1.0, 2.0), st.integers(0, 2 ** 16))
def test_c2_join_for_any_opposite_vertex(depth, along, seed):
    rng = np.random.default_rng(seed)
    L = np.array([[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]])
    R = np.array([L[0], L[1], [along, -depth]])
    lb = build_local_basis(Triangle(L))
    left = LocalCoeffs(rng.normal(size=28), "Bt")
    _, rb, right = pair_from_left(L, R, left)
    rep = verify_smoothness((lb, left), (rb, right), L[0], L[1])
    assert max(rep.values()) <= 1e-8


def test_c0_join_across_mirror_edge_is_not_c1():
    L = np.array([[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]])
    R = np.array([[0.0, 0.0], [1.0, 0.0], [0.3, -0.8]])
    c = LocalCoeffs(np.random.default_rng(0).normal(size=28), "Bt")
    _, rb, right = pair_from_left(L, R, c, 0)
    rep = verify_smoothness((build_local_basis(Triangle(L)), c), (rb, right), L[0], L[1])
    assert rep[0] <= 1e-10 and rep[1] > 1e-3


def test_perturbed_interior_coefficient_breaks_second_order():
    rng = np.random.default_rng(12)
    L, R, lb, left, rb, right, _ = joined(rng)
    v = right.values.copy()
    v[11] += 1.0
    rep = verify_smoothness((lb, left), (rb, LocalCoeffs(v, "Bt")), L[0], L[1])
    assert rep[2] > 0.1
