import itertools

import numpy as np
import pytest
from scipy.optimize import minimize

from stablesg.errors import CertificateError, HypothesisNotMet, SearchExhausted
from stablesg.lcc import (UNKNOWN, YES, DecodingFamily, LccMatrix, RecoveryTuple, _bounded_residual,
                          build_lcc_matrix, contract_with_R, exhaustive_stable_lcc_check,
                          find_decoding_families, lcc_dimension_pipeline, perturb_stable_lcc,
                          verify_stable_lcc)
from stablesg.selftest import _tiny_instance

from conftest import crandn


def duplicated(rng, m=4, copies=2, d=3):
    base = crandn(rng, m, d)
    return np.repeat(base, copies, axis=0)


def dup_family(P, copies):
    # tuple for i: each other copy of the same base point, coefficient 1
    n = P.shape[0]
    tuples = []
    for i in range(n):
        g = i // copies
        tuples.append(tuple(RecoveryTuple(i, (j,), (1.0,), 0.0)
                            for j in range(g * copies, (g + 1) * copies) if j != i))
    return DecodingFamily(n, 1, 1.0, 0.0, tuple(tuples))


def test_recovery_tuple_validation():
    with pytest.raises(CertificateError):
        RecoveryTuple(0, (0, 1), (1, 1), 0.0)
    with pytest.raises(CertificateError):
        RecoveryTuple(0, (1, 1), (1, 1), 0.0)
    with pytest.raises(CertificateError):
        RecoveryTuple(0, (1,), (1, 1), 0.0)


def test_family_rejects_overlap_and_nonuniform():
    t = RecoveryTuple
    with pytest.raises(CertificateError, match="overlapping"):
        DecodingFamily(3, 2, 1.0, 0.0, ((t(0, (1, 2), (1, 1), 0), t(0, (2,), (1,), 0)),
                                        (t(1, (0,), (1,), 0), t(1, (2,), (1,), 0)),
                                        (t(2, (0,), (1,), 0), t(2, (1,), (1,), 0))))
    with pytest.raises(CertificateError, match="non-uniform"):
        DecodingFamily(2, 1, 1.0, 0.0, ((t(0, (1,), (1,), 0),), ()))


def test_find_families_duplicates(rng):
    P = duplicated(rng)
    fam = find_decoding_families(P, 1, 1.0, 0.0, 1, seed=0)
    for i, ts in enumerate(fam.tuples):
        (t,) = ts
        assert t.support == (i ^ 1,)
        assert t.coefficients[0] == pytest.approx(1)
        assert t.residual == pytest.approx(0, abs=1e-12)


def test_find_families_planted(planted_lcc):
    g = planted_lcc
    P = g.config.points
    fam = find_decoding_families(P, 3, 3.0, g.metadata["eps"], 4, seed=5)
    fam.validate(P)
    for ts in fam.tuples:
        for t in ts:
            assert abs(t.residual_on(P) - t.residual) <= 1e-9
            assert t.residual <= g.metadata["eps"] + 1e-12


def test_find_families_deterministic(planted_lcc):
    P = planted_lcc.config.points
    a = find_decoding_families(P, 3, 3.0, 1e-3, 2, seed=9)
    b = find_decoding_families(P, 3, 3.0, 1e-3, 2, seed=9)
    assert a == b


def test_find_families_exhausted():
    with pytest.raises(SearchExhausted):
        find_decoding_families(np.eye(4), 1, 1.0, 0.1, 1, seed=0)


def test_verify_verdicts(rng):
    P = duplicated(rng, m=3, copies=4)
    fam = dup_family(P, 4)            # k = 3
    n = P.shape[0]
    v = verify_stable_lcc(P, fam, 1, 2 / n, 1.0, 0.0)
    assert v.status == YES and v.margin == pytest.approx(1)
    v = verify_stable_lcc(P, fam, 1, 3 / n, 1.0, 0.0)
    assert v.status == UNKNOWN


def test_exhaustive_examples():
    assert exhaustive_stable_lcc_check(np.ones((4, 2)), 1, 0.25, 1.0, 0.0)
    assert not exhaustive_stable_lcc_check(np.eye(4), 2, 0.25, 1.0, 0.1)


def test_exhaustive_too_large():
    with pytest.raises(ValueError):
        exhaustive_stable_lcc_check(np.ones((13, 2)), 1, 0.1, 1.0, 0.0)


def test_exhaustive_matches_blocked_set_semantics(rng):
    # three copies of each point survive any single blocked index, two copies do not
    P3 = duplicated(rng, m=3, copies=3)
    assert exhaustive_stable_lcc_check(P3, 1, 1 / 9, 1.0, 0.0)
    P2 = duplicated(rng, m=4, copies=2)
    assert exhaustive_stable_lcc_check(P2, 1, 0.0, 1.0, 0.0)
    assert not exhaustive_stable_lcc_check(P2, 1, 1 / 8, 1.0, 0.0)


def test_bounded_residual_q1_closed_form(rng):
    # in one complex coordinate the box is a disk and clipping the LS solution is optimal
    for _ in range(200):
        w, v = crandn(rng, 2, 3)
        B = float(rng.uniform(0.2, 2))
        b = np.vdot(w, v) / np.vdot(w, w)
        b = b if abs(b) <= B else b * B / abs(b)
        opt = np.linalg.norm(v - b * w)
        for eps in (opt * 0.98, opt * 1.02):
            assert _bounded_residual(w[:, None], v, B, eps) == (eps >= opt)


def test_bounded_residual_q2_against_slsqp(rng):
    for _ in range(40):
        W = crandn(rng, 3, 2)
        v = crandn(rng, 3)
        B = float(rng.uniform(0.2, 1.5))

        def f(x):
            b = x[:2] + 1j * x[2:]
            return float(np.linalg.norm(v - W @ b) ** 2)

        cons = [{"type": "ineq", "fun": lambda x, j=j: B ** 2 - x[j] ** 2 - x[j + 2] ** 2}
                for j in range(2)]
        best = min(minimize(f, x0, constraints=cons, method="SLSQP",
                            options={"ftol": 1e-14, "maxiter": 500}).fun
                   for x0 in rng.uniform(-B / 2, B / 2, (6, 4)))
        opt = np.sqrt(max(best, 0.0))
        assert _bounded_residual(W, v, B, opt * 1.02 + 1e-9)
        assert not _bounded_residual(W, v, B, opt * 0.98)


def test_lcc_matrix_duplicates(rng):
    P = duplicated(rng)
    fam = dup_family(P, 2)
    M, chk = build_lcc_matrix(P, fam, 0.0)
    D = M.dense()
    assert chk.total == pytest.approx(0, abs=1e-20)
    for r in range(D.shape[0]):
        nz = np.flatnonzero(D[r])
        assert sorted(D[r, nz].real.tolist()) == [-1.0, 1.0]


def test_lcc_matrix_overlap_rejected():
    blocks = np.zeros((3, 2, 3), dtype=complex)
    for i in range(3):
        blocks[i, :, i] = 1
    blocks[0, 0, 1] = blocks[0, 1, 1] = -0.5
    blocks[1, 0, 0] = blocks[1, 1, 2] = -0.5
    blocks[2, 0, 0] = blocks[2, 1, 1] = -0.5
    with pytest.raises(CertificateError, match="share a column"):
        LccMatrix(3, 2, 1.0, blocks)


def test_lcc_matrix_block_structure(planted_lcc):
    g = planted_lcc
    M, chk = build_lcc_matrix(g.config.points, g.truth, g.metadata["eps"])
    assert chk.ok
    for i in range(M.n):
        supp = M.blocks[i] != 0
        for r, s in itertools.combinations(range(M.k), 2):
            assert set(np.flatnonzero(supp[r] & supp[s])) == {i}
    stored = np.array([t.residual for ts in g.truth.tuples for t in ts])
    assert np.abs(chk.row_norms - stored).max() <= 1e-9


def test_contract_single_block_and_duplicates(rng):
    P = duplicated(rng, m=2, copies=4)
    fam = dup_family(P, 4)   # k = 3 disjoint duplicates
    M, _ = build_lcc_matrix(P, fam, 0.0)
    Mh, Eh = contract_with_R(M, M.dense() @ P)
    assert np.all(np.diag(Mh) == 3)
    off = Mh - np.diag(np.diag(Mh))
    assert set(np.unique(off.real).tolist()) <= {0.0, -1.0}
    # k = 1: the contraction is the matrix itself
    P1 = duplicated(rng)
    M1, _ = build_lcc_matrix(P1, dup_family(P1, 2), 0.0)
    Mh1, _ = contract_with_R(M1, M1.dense() @ P1)
    assert np.array_equal(Mh1, M1.dense())


def test_contract_shape_mismatch(rng):
    P = duplicated(rng)
    M, _ = build_lcc_matrix(P, dup_family(P, 2), 0.0)
    with pytest.raises(ValueError):
        contract_with_R(M, np.zeros((3, 3)))


def test_pipeline_planted(planted_lcc):
    g = planted_lcc
    c = lcc_dimension_pipeline(g.config.points, g.truth, 3, g.metadata["delta"], 3.0,
                               g.metadata["eps"])
    assert c.passed, c.failing()
    assert c.verdict.status == YES
    assert c.dim >= 3
    for row in c.table():
        assert row["holds"], row


def test_pipeline_exact_containment():
    from stablesg.generators import gen_planted_lcc
    g = gen_planted_lcc(3, 60, 3, 3.0, 0.0, 4)
    c = lcc_dimension_pipeline(g.config.points, g.truth, 3, g.metadata["delta"], 3.0, 0.0)
    assert c.passed, c.failing()
    assert c.eps_prime <= 1e-9
    assert c.per_point_dists.max() <= 1e-9


def test_pipeline_unknown_requires_ack(rng):
    P = duplicated(rng, m=3, copies=2)
    fam = dup_family(P, 2)
    with pytest.raises(HypothesisNotMet):
        lcc_dimension_pipeline(P, fam, 1, 0.5, 1.0, 0.0)
    c = lcc_dimension_pipeline(P, fam, 1, 0.5, 1.0, 0.0, allow_unknown=True)
    assert c.verdict.status == UNKNOWN


def test_perturbation_examples(rng):
    P = duplicated(rng)
    fam = dup_family(P, 2)
    Q, fam2 = perturb_stable_lcc(P, fam, 0.0, 1)
    assert np.array_equal(Q, P)
    assert [t.residual for ts in fam2.tuples for t in ts] == [0.0] * 8
    Q, fam2 = perturb_stable_lcc(P, fam, 0.01, 1)
    assert max(t.residual for ts in fam2.tuples for t in ts) <= 0.02 + 1e-12
    assert np.linalg.norm(Q - P, axis=1).max() <= 0.01 + 1e-15
    fam2.validate(Q)


def test_perturbation_planted(planted_lcc):
    g = planted_lcc
    Q, fam2 = perturb_stable_lcc(g.config.points, g.truth, 1e-3, 7)
    bound = g.truth.eps + (3 * 3.0 + 1) * 1e-3
    assert fam2.eps == pytest.approx(bound)
    assert max(t.residual for ts in fam2.tuples for t in ts) < bound


def test_tiny_oracle_agreement():
    for c in range(15):
        V, fam, q, B, eps, delta = _tiny_instance(c, 700 + c)
        v = verify_stable_lcc(V, fam, q, delta, B, eps)
        if v.status == YES:
            assert exhaustive_stable_lcc_check(V, q, delta, B, eps)
