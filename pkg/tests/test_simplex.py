from math import factorial

import numpy as np
import pytest

from wsspline.geometry import to_bary
from wsspline.simplex import (
    DegenerateKnotsError,
    KnotMultiset,
    OnKnotLineError,
    eval_m,
    eval_m_derivative,
    insert_knot,
)

from conftest import random_points, random_triangle


def bernstein(beta, i, j, k):
    d = i + j + k
    return factorial(d) / (factorial(i) * factorial(j) * factorial(k)) * \
        beta[:, 0] ** i * beta[:, 1] ** j * beta[:, 2] ** k


@pytest.mark.parametrize("ijk", [(0, 0, 0), (1, 0, 0), (1, 1, 0), (3, 0, 0), (1, 1, 1), (2, 0, 1)])
def test_vertex_knots_give_scaled_bernstein(rng, ijk):
    tri = random_triangle(rng)
    i, j, k = ijk
    V = tri.vertices
    knots = KnotMultiset(np.vstack([V[[0]]] * (i + 1) + [V[[1]]] * (j + 1) + [V[[2]]] * (k + 1)))
    d = i + j + k
    P = random_points(tri, rng, 200)
    expect = bernstein(to_bary(tri, P), i, j, k) * (d + 1) * (d + 2) / (2 * tri.area)
    assert np.allclose(eval_m(knots, P), expect, rtol=1e-10, atol=1e-12)


def test_unit_integral(rng):
    # six random knots: M is a cubic spline with integral one over the hull
    K = rng.uniform(0, 1, size=(6, 2))
    knots = KnotMultiset(K)
    n = 400
    xs = (np.arange(n) + 0.5) / n
    P = np.array([(x, y) for x in xs for y in xs])
    assert eval_m(knots, P).sum() / n ** 2 == pytest.approx(1.0, abs=2e-3)


def test_zero_outside_hull(rng):
    knots = KnotMultiset(rng.uniform(0, 1, size=(6, 2)))
    assert np.all(eval_m(knots, rng.uniform(2, 3, size=(20, 2))) == 0.0)


def test_derivative_matches_finite_difference(rng):
    knots = KnotMultiset(rng.uniform(0, 1, size=(6, 2)))
    P = rng.uniform(0.3, 0.7, size=(20, 2))
    u = np.array([0.6, -0.8])
    eps = 1e-6
    fd = (eval_m(knots, P + eps * u) - eval_m(knots, P - eps * u)) / (2 * eps)
    assert np.allclose(eval_m_derivative(knots, P, u), fd, atol=1e-5 * max(1.0, np.abs(fd).max()))


def test_second_derivative_matches_finite_difference(rng):
    knots = KnotMultiset(rng.uniform(0, 1, size=(6, 2)))
    P = rng.uniform(0.3, 0.7, size=(20, 2))
    u, w = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    eps = 1e-5
    d1 = lambda Q: eval_m_derivative(knots, Q, u)
    fd = (d1(P + eps * w) - d1(P - eps * w)) / (2 * eps)
    assert np.allclose(eval_m_derivative(knots, P, [u, w]), fd, atol=1e-4 * max(1.0, np.abs(fd).max()))


def test_knot_insertion_identity(rng):
    knots = KnotMultiset(rng.uniform(0, 1, size=(6, 2)))
    y = rng.uniform(0.2, 0.8, size=2)
    P = rng.uniform(0, 1, size=(100, 2))
    terms = insert_knot(knots, y)
    total = sum(c * eval_m(k, P) for c, k in terms)
    assert np.allclose(total, eval_m(knots, P), atol=1e-10)


def test_insert_knot_rejects_bad_coefficients(rng):
    knots = KnotMultiset(rng.uniform(0, 1, size=(6, 2)))
    with pytest.raises(ValueError):
        insert_knot(knots, np.array([0.5, 0.5]), coeffs=np.full(6, 0.1))


def test_collinear_knots_rejected():
    with pytest.raises(DegenerateKnotsError):
        KnotMultiset(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]))


def test_on_knot_line_policy():
    knots = KnotMultiset(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    p = np.array([0.5, 0.5])  # on the diagonal through (0,1) and (1,0)
    with pytest.raises(OnKnotLineError):
        eval_m(knots, p, policy="error")
    assert np.isfinite(eval_m(knots, p))


def test_degree_is_knot_count_minus_three():
    base = np.eye(3)[:, :2].tolist()
    assert KnotMultiset(base).degree == 0
    assert KnotMultiset(base + [[0.3, 0.3]] * 3).degree == 3


def test_zero_direction_gives_zero(rng):
    knots = KnotMultiset(rng.uniform(0, 1, size=(6, 2)))
    assert np.all(eval_m_derivative(knots, rng.uniform(0.3, 0.6, size=(5, 2)), np.zeros(2)) == 0.0)


def test_triple_point_rejected():
    with pytest.raises(DegenerateKnotsError):
        KnotMultiset(np.array([[0.5, 0.5]] * 3))


def test_constant_piece_is_inverse_area():
    knots = KnotMultiset(np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]))  # area 2
    assert eval_m(knots, np.array([0.5, 0.5])) == pytest.approx(0.5)


def test_insert_existing_knot_is_identity(rng):
    k = rng.uniform(0, 1, size=(6, 2))
    knots = KnotMultiset(k)
    terms = insert_knot(knots, k[2], coeffs=np.eye(6)[2])
    assert len(terms) == 1 and terms[0][0] == 1.0
    assert np.array_equal(np.sort(terms[0][1].knots, axis=0), np.sort(k, axis=0))


@pytest.mark.parametrize("which", [(0, 1), (0, 1, 2)])
def test_insert_midpoint_and_centroid(rng, which):
    k = rng.uniform(0, 1, size=(6, 2))
    knots = KnotMultiset(k)
    w = np.zeros(6)
    w[list(which)] = 1.0 / len(which)
    terms = insert_knot(knots, w @ k, coeffs=w)
    assert len(terms) == len(which)
    assert sum(c for c, _ in terms) == pytest.approx(1.0)
    P = rng.uniform(0, 1, size=(100, 2))
    assert np.abs(sum(c * eval_m(t, P) for c, t in terms) - eval_m(knots, P)).max() <= 1e-9
