import math

import numpy as np
import pytest

from stablesg.collinearity import line_distance
from stablesg.designs import collect, sg_hypothesis_check
from stablesg.errors import GenerationError
from stablesg.generators import (GeneratorSpec, gen_example_affine, gen_example_chain,
                                 gen_planted_affine, gen_planted_lcc, gen_planted_projective,
                                 gen_sphere_packing, generate)
from stablesg.geometry import check_balanced, check_separated, dim_eps_lower
from stablesg.reductions import analyze_affine


def test_example_affine_points():
    g = gen_example_affine(10.0, 2)
    P = g.config.points
    assert P.shape == (6, 2)
    assert np.allclose(P[2], [9, 0]) and np.allclose(P[4], [10, 0])


def test_example_affine_u_within_one_over_B():
    B, d = 10.0, 2
    P = gen_example_affine(B, d).config.points
    dist = line_distance(P[d], P[2 * d], P[1])[0]
    assert dist <= 1 / B
    assert dist == pytest.approx(1 / math.sqrt(B * B + 1), abs=1e-15)


def test_example_affine_v_radius_is_exact():
    B, d = 10.0, 3
    g = gen_example_affine(B, d)
    assert g.metadata["v_radius"] == pytest.approx(1 / math.sqrt((B - 1) ** 2 + 1), abs=1e-14)
    assert not g.metadata["v_within_1_over_B"]


@pytest.mark.xfail(strict=True, reason="v_i sits at 1/sqrt((B-1)^2+1) > 1/B; see ledger")
def test_example_affine_v_within_one_over_B():
    B, d = 10.0, 2
    P = gen_example_affine(B, d).config.points
    assert line_distance(P[2 * d], P[d], P[1])[0] <= 1 / B


def test_example_affine_no_low_dim_approximation():
    P = gen_example_affine(10.0, 30).config.points
    assert dim_eps_lower(P, 1.0) >= 28


def test_example_affine_rejects_bad_params():
    with pytest.raises(GenerationError):
        gen_example_affine(2.0, 3)


def test_example_chain_points_and_constant():
    P = gen_example_chain(10.0, 3).config.points
    expected = [[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 10, 0], [0, 11, 0], [0, 0, 100], [0, 0, 101]]
    assert np.allclose(P, expected)
    assert line_distance(P[0], P[3], P[4])[0] == pytest.approx(0, abs=1e-15)
    m = gen_example_chain(50.0, 3).metadata
    assert m["max_pair_radius"] <= 2 / 50
    assert m["tube_constant"] == pytest.approx(m["max_pair_radius"] * 50)


def test_example_chain_overflow_guard():
    with pytest.raises(GenerationError):
        gen_example_chain(1e10, 40)


def test_sphere_packing_separated():
    g = gen_sphere_packing(3, 0.8, 7)
    assert check_separated(g.config.points, 0.8).ok
    assert g.metadata["max_arc_census"] >= 1
    assert g.metadata["largest_gap"] >= 0


def test_sphere_packing_beyond_sqrt2_has_one_point():
    # +-separation never exceeds sqrt(2), so mu = 1.9 admits a single point
    g = gen_sphere_packing(2, 1.9, 0)
    assert g.config.n == 1


@pytest.mark.xfail(strict=True, reason="+-separation is at most sqrt(2); see ledger")
def test_sphere_packing_mu_1_9_has_two_points():
    assert gen_sphere_packing(2, 1.9, 0).config.n >= 2


def test_planted_affine_seeded_instance(planted_affine):
    g = planted_affine
    m = g.metadata
    assert m["delta"] >= 0.25
    assert check_balanced(g.config.points, m["B"]).ok
    assert sg_hypothesis_check(g.config.points, m["eps"], m["delta"], "affine").passed
    assert m["truth_distance"] <= m["noise"]
    assert m["eps"] < 1 / (16 * m["B"])


def test_planted_affine_noise_free():
    g = gen_planted_affine(20, 2, 60, 4.0, 0.0, 5)
    a = analyze_affine(g.config, 4.0, g.metadata["delta"], g.metadata["eps"])
    assert a.passed and a.certificate.eps_prime <= 1e-9


def test_planted_affine_rejects_large_noise():
    with pytest.raises(GenerationError):
        gen_planted_affine(20, 2, 60, 4.0, 0.1, 5)


def test_planted_projective_instance(planted_projective):
    g = planted_projective
    m = g.metadata
    assert check_separated(g.config.points, m["mu"], phase_invariant=True).ok
    assert m["eps"] < m["mu"] ** 2 / 32
    assert m["truth_distance"] <= m["noise"]


def test_planted_lcc_instance(planted_lcc):
    g = planted_lcc
    m = g.metadata
    assert g.truth.k > m["n"] / 10
    g.truth.validate(g.config.points)


def test_planted_lcc_noise_free():
    g = gen_planted_lcc(3, 40, 3, 3.0, 0.0, 1)
    assert max(t.residual for ts in g.truth.tuples for t in ts) <= 1e-9


def test_generate_dispatch_and_seed_required():
    g = generate(GeneratorSpec("example_affine", {"B": 10.0, "d": 2}))
    assert g.config.n == 6
    with pytest.raises((GenerationError, ValueError)):
        GeneratorSpec("planted_affine", {"d": 5, "k_planted": 2, "n": 30, "B": 4.0, "noise": 0})
    with pytest.raises((GenerationError, ValueError)):
        GeneratorSpec("nonsense", {})


def test_generators_deterministic():
    a = gen_planted_projective(20, 3, 25, 0.5, 1e-4, 11)
    b = gen_planted_projective(20, 3, 25, 0.5, 1e-4, 11)
    assert np.array_equal(a.config.points, b.config.points)


@pytest.mark.parametrize("fixture", ["planted_affine", "planted_affine_2d"])
def test_density_on_generated_tubes(request, fixture):
    # B-balanced points in one eps-tube: at most 5B of them
    g = request.getfixturevalue(fixture)
    coll = collect(g.config.points, g.metadata["eps"], "affine")
    assert coll.family.pair_counts().max() + 2 <= 5 * g.metadata["B"]


def test_arc_density_on_planted(planted_projective):
    g = planted_projective
    coll = collect(g.config.points, g.metadata["eps"], "arc")
    assert coll.family.pair_counts().max() + 2 <= 8 / g.metadata["mu"]
