import math

import numpy as np
import pytest

from stablesg.errors import DimensionMismatch, NotOnSphere
from stablesg.geometry import (PointConfig, Subspace, check_balanced, check_separated,
                               dim_eps_lower, dim_eps_upper, dist_to_subspace, distance, inner,
                               separation_matrix, svd)

from conftest import crandn, random_unitary


def test_inner_is_linear_in_first_slot():
    u, v = np.array([1j, 0]), np.array([1, 0])
    assert inner(u, v) == 1j
    assert inner(v, u) == -1j


@pytest.mark.parametrize("u,v,expected", [
    ([1, 2, 3], [1, 2, 3], 0.0),
    ([1, 0], [0, 1], math.sqrt(2)),
    ([1j, 0], [0, 1], math.sqrt(2)),
])
def test_distance_examples(u, v, expected):
    assert distance(u, v) == pytest.approx(expected, abs=1e-15)


def test_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        distance([1, 0], [1, 0, 0])


def test_distance_rejects_non_finite():
    with pytest.raises(ValueError):
        distance([np.nan, 0], [1, 0])


def test_dist_to_subspace_examples():
    L = Subspace.span([[1, 0, 0]])
    d, p = dist_to_subspace(np.array([1, 1, 0]) / math.sqrt(2), L)
    assert d == pytest.approx(1 / math.sqrt(2))
    assert np.allclose(p, [1 / math.sqrt(2), 0, 0])
    assert dist_to_subspace([3, 0, 0], L)[0] == pytest.approx(0.0)
    v = np.array([1, 2j, 3])
    assert dist_to_subspace(v, Subspace.zero(3))[0] == pytest.approx(np.linalg.norm(v))


def test_dist_to_subspace_projection_uses_conjugate(rng):
    # complex basis vectors: projection must be sum <v, b> b
    B = Subspace.span(crandn(rng, 2, 5))
    v = crandn(rng, 5)
    _, p = dist_to_subspace(v, B)
    assert np.allclose(B.basis.conj() @ (v - p), 0, atol=1e-12)


def test_dist_to_subspace_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        dist_to_subspace([1, 0], Subspace.zero(3))


def test_pythagoras_and_unitary_invariance(rng):
    for _ in range(20):
        d = int(rng.integers(2, 8))
        L = Subspace.span(crandn(rng, int(rng.integers(0, d + 1)), d), d)
        v = crandn(rng, d)
        dist, p = dist_to_subspace(v, L)
        assert dist ** 2 + np.linalg.norm(p) ** 2 == pytest.approx(np.linalg.norm(v) ** 2, rel=1e-9)
        assert dist <= np.linalg.norm(v) + 1e-12
        U = random_unitary(rng, d)
        LU = Subspace(d, L.basis @ U.T) if L.dim else L
        assert dist_to_subspace(U @ v, LU)[0] == pytest.approx(dist, abs=1e-9)
        w = crandn(rng, d)
        assert distance(U @ v, U @ w) == pytest.approx(distance(v, w), abs=1e-9)


def test_subspace_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        Subspace(2, [[1, 0], [1, 1e-3]])


def test_subspace_span_drops_null_directions():
    L = Subspace.span([[1, 0, 0], [2, 0, 0], [0, 0, 0]])
    assert L.dim == 1


def test_svd_examples(rng):
    assert np.allclose(svd(np.eye(3)).singular_values, [1, 1, 1])
    assert np.allclose(svd(np.diag([3.0, 2.0, 0.0])).singular_values, [3, 2, 0])
    A = crandn(rng, 8, 5)
    s = svd(A)
    assert np.sum(s.singular_values ** 2) == pytest.approx(np.linalg.norm(A) ** 2, rel=1e-9)
    assert np.linalg.norm(s.reconstruct() - A) <= 1e-8 * np.linalg.norm(A)
    assert np.all(np.diff(s.singular_values) <= 0)
    assert np.allclose(s.right_vectors @ s.right_vectors.conj().T, np.eye(5), atol=1e-10)
    assert np.allclose(s.left_vectors.conj().T @ s.left_vectors, np.eye(5), atol=1e-10)


def test_svd_rejects_non_finite():
    with pytest.raises(ValueError):
        svd([[np.inf, 0], [0, 1]])


def test_dim_eps_upper_examples():
    v = np.array([1, 1j, 2])
    assert dim_eps_upper([v, 2 * v, -3j * v], 0.0)[0] == 1
    k, L = dim_eps_upper(np.eye(2), 1.0)
    assert k == 0 and L.dim == 0
    assert dim_eps_upper(np.eye(4), 0.0)[0] == 4


def test_dim_eps_upper_subspace_is_within_eps(rng):
    A = crandn(rng, 30, 6) @ np.diag([5, 4, 3, 0.1, 0.05, 0.01])
    for eps in (0.0, 0.2, 1.0, 3.0):
        k, L = dim_eps_upper(A, eps)
        assert L.dim == k
        assert L.distances(A).max() <= eps + 1e-9


def test_dim_eps_lower_examples(example1_small):
    assert dim_eps_lower(np.eye(3), 10.0) == 0
    assert dim_eps_lower(np.eye(4), 0.5) == 3
    from stablesg.generators import gen_example_affine
    P = gen_example_affine(10.0, 30).config.points
    assert dim_eps_lower(P, 1.0) >= 28


def test_dim_eps_lower_closed_form_example1():
    # per-axis singular value sqrt(1 + (B-1)^2 + B^2): residual after k axes is (d-k) s^2
    B, d = 10.0, 30
    s2 = 1 + (B - 1) ** 2 + B ** 2
    n = 3 * d
    expected = next(k for k in range(d + 1) if (d - k) * s2 <= n * 1.0)
    from stablesg.generators import gen_example_affine
    assert dim_eps_lower(gen_example_affine(B, d).config.points, 1.0) == expected


def test_bracket_order_and_monotone(rng):
    for _ in range(30):
        A = crandn(rng, int(rng.integers(2, 20)), int(rng.integers(1, 6)))
        grid = np.linspace(0, 3, 7)
        lo = [dim_eps_lower(A, e) for e in grid]
        up = [dim_eps_upper(A, e)[0] for e in grid]
        assert all(a <= b for a, b in zip(lo, up))
        assert all(np.diff(lo) <= 0) and all(np.diff(up) <= 0)


def test_dim_eps_negative_eps():
    with pytest.raises(ValueError):
        dim_eps_lower(np.eye(2), -1)
    with pytest.raises(ValueError):
        dim_eps_upper(np.eye(2), -1)


def test_check_balanced_examples(example1_small):
    assert check_balanced([[0, 0], [1, 0]], 1.0).ok
    res = check_balanced([[0, 0], [2, 0], [0, 0]], 3.0)
    assert not res.ok and res.pair == (0, 2) and res.value == 0.0
    P = example1_small.config.points
    assert check_balanced(P, 10 * math.sqrt(2)).ok
    assert not check_balanced(P, 10.0).ok


def test_check_balanced_reports_far_pair():
    res = check_balanced([[0], [1], [5]], 2.0)
    assert not res.ok and res.pair == (0, 2) and res.value == pytest.approx(5.0)


def test_check_separated_examples():
    assert not check_separated([[1, 0], [-1, 0]], 1e-3).ok
    assert check_separated([[1, 0], [0, 1]], math.sqrt(2)).ok
    with pytest.raises(NotOnSphere):
        check_separated([[2, 0], [0, 1]], 0.1)


def test_phase_invariant_separation_is_stricter():
    # u and i u are far from +-u but coincide up to a unit phase
    P = np.array([[1, 0], [1j, 0]])
    assert check_separated(P, 1.0).ok
    assert not check_separated(P, 1.0, phase_invariant=True).ok
    assert separation_matrix(P, True)[0, 1] == pytest.approx(0.0, abs=1e-7)


def test_point_config_is_read_only():
    cfg = PointConfig.from_points([[1, 2], [3, 4]])
    assert cfg.n == 2 and cfg.dim == 2
    with pytest.raises(ValueError):
        cfg.points[0, 0] = 5
    with pytest.raises(DimensionMismatch):
        PointConfig.from_points([[1, 2], [3]])
