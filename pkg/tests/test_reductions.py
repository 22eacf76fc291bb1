import math

import numpy as np
import pytest

from stablesg.designs import collect
from stablesg.errors import HypothesisNotMet
from stablesg.generators import gen_example_affine, gen_sphere_packing
from stablesg.reductions import (PROJECTIVE_GATE, analyze_affine, analyze_affine_simple,
                                 analyze_projective, subset_variant, triple_target)


def collinear(n=5, d=2):
    P = np.zeros((n, d), dtype=complex)
    P[:, 0] = np.arange(n)
    return P


def great_circle(k=6, d=3):
    # real angles in [0, pi): consecutive points are 2 sin(15 deg) apart up to sign
    th = np.arange(k) * math.pi / k
    P = np.zeros((k, d), dtype=complex)
    P[:, 0], P[:, 1] = np.cos(th), np.sin(th)
    return P


def test_triple_target():
    assert triple_target(1.0, 5) == 2
    assert triple_target(0.01, 5) == 1
    assert triple_target(0.3, 200) == 30


def test_affine_collinear_exact():
    a = analyze_affine(collinear(), 4.0, 1.0, 1e-9)
    assert a.passed, a.failing()
    assert a.certificate.dim == 1
    assert a.certificate.eps_prime == pytest.approx(0, abs=1e-8)


def test_affine_simple_collinear():
    a = analyze_affine_simple(collinear(3), 2.0, 1e-9)
    assert a.passed and a.certificate.dim == 1 and a.delta == 1.0


def test_affine_simple_orthonormal_rejected():
    with pytest.raises(HypothesisNotMet, match="delta-fraction"):
        analyze_affine_simple(np.eye(4) * math.sqrt(2) / math.sqrt(2), 2.0, 0.01)


def test_affine_planted_2d(planted_affine_2d):
    g = planted_affine_2d
    a = analyze_affine(g.config, g.metadata["B"], g.metadata["delta"], g.metadata["eps"])
    assert a.passed, a.failing()
    assert a.certificate.dim <= a.headline["dim_bound"]
    assert a.certificate.eps_prime <= a.headline["eps_prime_bound"]
    assert a.params.g < 5 * g.metadata["B"]
    assert a.params.p >= a.p_target
    assert len(a.design) <= a.n * a.p_target


def test_affine_planted_3d_full(planted_affine):
    g = planted_affine
    a = analyze_affine(g.config, g.metadata["B"], g.metadata["delta"], g.metadata["eps"])
    assert a.passed, a.failing()
    # an affine 3-flat off the origin spans 4 linear dimensions
    assert a.certificate.dim == 4


def test_headline_dominates_engine_bound(planted_affine):
    g = planted_affine
    a = analyze_affine(g.config, 4.0, g.metadata["delta"], g.metadata["eps"])
    assert a.certificate.dim_bound <= a.headline["dim_bound"] + 1e-9
    assert a.certificate.eps_prime_bound <= a.headline["eps_prime_bound"] + 1e-12
    # closed form with p = target, g = 5B, mu = 1/(4B)
    n, pt, B = a.n, a.p_target, 4.0
    assert a.headline["dim_bound"] == pytest.approx(2 * n ** 2 * (5 * B) ** 2 * (4 * B) ** 4 / pt ** 2)


def test_example1_rejected_by_gate():
    g = gen_example_affine(10.0, 30)
    with pytest.raises(HypothesisNotMet, match=r"eps < 1/\(16B\)"):
        analyze_affine(g.config, 10.0, 1 / 3, 0.1)


def test_gate_names_balance():
    P = collinear(4) * 10
    with pytest.raises(HypothesisNotMet, match="B-balanced"):
        analyze_affine(P, 4.0, 1.0, 1e-3)


def test_force_records_failures():
    g = gen_example_affine(10.0, 6)
    a = analyze_affine(g.config, 10.0, 1 / 3, 0.1, force=True)
    assert a.forced and not a.passed
    failing = a.failing()
    assert "hypothesis: eps < 1/(16B)" in failing
    assert "hypothesis: B-balanced" in failing


def test_projective_great_circle():
    P = great_circle()
    a = analyze_projective(P, 0.5, 1.0, 1e-6)
    assert a.passed, a.failing()
    assert a.certificate.dim <= 2
    assert a.certificate.eps_prime == pytest.approx(0, abs=1e-6)


def test_projective_planted(planted_projective):
    g = planted_projective
    a = analyze_projective(g.config, g.metadata["mu"], g.metadata["delta"], g.metadata["eps"])
    assert a.passed, a.failing()
    assert a.params.g < 8 / g.metadata["mu"]
    assert a.certificate.dim == 4


def test_packing_rejected_at_eps_mu():
    g = gen_sphere_packing(6, 0.5, 0, budget=400, probes=100)
    with pytest.raises(HypothesisNotMet, match="mu\\^2/32"):
        analyze_projective(g.config, 0.5, 0.1, 0.5)


def test_projective_gate_configurable():
    P = great_circle()
    eps = 0.25 / 20
    with pytest.raises(HypothesisNotMet):
        analyze_projective(P, 0.5, 1.0, eps)
    assert analyze_projective(P, 0.5, 1.0, eps, gate=16.0).gate == 16.0
    assert PROJECTIVE_GATE == 32.0


def test_projective_separation_gate():
    P = great_circle(12)
    with pytest.raises(HypothesisNotMet, match="mu-separated"):
        analyze_projective(P, 0.9, 1.0, 1e-6)


def test_gates_never_run_engine(monkeypatch):
    import stablesg.reductions as red
    called = []
    monkeypatch.setattr(red, "approximate_sg_subspace", lambda *a, **k: called.append(1))
    with pytest.raises(HypothesisNotMet):
        red.analyze_affine(np.eye(3), 2.0, 0.5, 0.01)
    assert not called


def test_subset_variant_zero_noise():
    a = analyze_affine(collinear(), 4.0, 1.0, 1e-9)
    idx, e2 = subset_variant(a)
    assert idx == tuple(range(5)) and e2 == pytest.approx(0, abs=1e-8)


def test_subset_variant_planted(planted_affine, planted_projective):
    g = planted_affine
    a = analyze_affine(g.config, 4.0, g.metadata["delta"], g.metadata["eps"])
    sv = subset_variant(a)
    assert len(sv.indices) >= a.n - a.certificate.p / a.certificate.g
    g = planted_projective
    a = analyze_projective(g.config, 0.5, g.metadata["delta"], g.metadata["eps"])
    sv = subset_variant(a)
    assert sv.eps_doubleprime <= sv.rho + 1e-12


def test_collect_monotone_within_gate(planted_affine):
    g = planted_affine
    eps = g.metadata["eps"]
    small = set(collect(g.config, eps / 2, "affine").family.triples)
    big = set(collect(g.config, eps, "affine").family.triples)
    assert small <= big
