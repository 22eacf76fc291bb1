"""Seeded invariant suite, one check per acceptance criterion.

Each ``check_*`` function returns a :class:`CheckResult`; ``run_all`` runs
them in order. The suite is deterministic: every instance is derived from
a fixed seed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .collinearity import line_distance
from .errors import GenerationError, HypothesisNotMet, SearchExhausted
from .generators import (gen_example_affine, gen_example_chain, gen_planted_affine,
                         gen_planted_lcc, gen_planted_projective)
from .geometry import SLACK, dim_eps_lower, dim_eps_upper
from .lcc import (exhaustive_stable_lcc_check, find_decoding_families, lcc_dimension_pipeline,
                  perturb_stable_lcc, verify_stable_lcc)
from .reductions import analyze_affine, analyze_projective
from .spectral import small_eig_count_bound


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str
    seconds: float
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] criterion {self.criterion:>2} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(criterion: int, name: str, fn) -> CheckResult:
    t0 = time.perf_counter()
    passed, detail, data = fn()
    return CheckResult(criterion, name, bool(passed), detail, time.perf_counter() - t0, data)


def random_hermitian_with_floor(rng, n: int, K: float) -> np.ndarray:
    """Hermitian matrix with diagonal entries >= K and off-diagonal scale varied widely."""
    scale = K * 10 ** rng.uniform(-2, 0.5) / math.sqrt(n)
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    X = scale * (Z + Z.conj().T) / 2
    np.fill_diagonal(X, K + np.abs(rng.standard_normal(n)) * K * rng.uniform(0, 2))
    return X


def check_small_eigs(cases: int = 200, seed: int = 101) -> CheckResult:
    """Number of eigenvalues <= K/4 never exceeds 2S/K^2."""
    def run():
        rng = np.random.default_rng(seed)
        worst, nontrivial = -math.inf, 0
        for _ in range(cases):
            n = int(rng.integers(2, 65))
            K = float(rng.uniform(0.5, 5.0))
            X = random_hermitian_with_floor(rng, n, K)
            lam = np.linalg.eigvalsh(X)
            count = int(np.sum(lam <= K / 4))
            off = X - np.diag(np.diag(X))
            bound = small_eig_count_bound(K, float(np.sum(np.abs(off) ** 2)))
            nontrivial += count > 0
            worst = max(worst, count - bound)
            if count > bound + SLACK:
                return False, f"count {count} > bound {bound:.4g} at n={n}", {}
        return True, f"{cases} matrices, {nontrivial} with small eigenvalues, " \
                     f"max(count - bound) = {worst:.3g}", {"nontrivial": nontrivial}
    return _timed(1, "small-eigenvalue count", run)


def hw_matching_gap(X: np.ndarray) -> tuple[float, float]:
    """``(sum |lambda - D|^2 under optimal matching, ||X - D||_F^2)``."""
    lam = np.linalg.eigvalsh(X)
    D = np.real(np.diag(X))
    cost = (lam[:, None] - D[None, :]) ** 2
    r, c = linear_sum_assignment(cost)
    off = X - np.diag(np.diag(X))
    return float(cost[r, c].sum()), float(np.sum(np.abs(off) ** 2))


def check_hoffman_wielandt(cases: int = 100, seed: int = 202) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst = -math.inf
        for _ in range(cases):
            n = int(rng.integers(1, 9))
            Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            X = (Z + Z.conj().T) / 2 * rng.uniform(0.1, 3)
            lhs, rhs = hw_matching_gap(X)
            worst = max(worst, lhs - rhs)
            if lhs > rhs + SLACK:
                return False, f"matched sum {lhs:.6g} > {rhs:.6g} at n={n}", {}
        return True, f"{cases} matrices, max(lhs - rhs) = {worst:.3g}", {}
    return _timed(2, "Hoffman-Wielandt matching", run)


def _planted_affine_case(rng, seed: int):
    k = int(rng.choice([2, 3]))
    n = int(rng.integers(60, 241 if k == 3 else 121))
    d = int(rng.integers(k, 65))
    noise = float(rng.choice([0.0, 1e-4, 5e-4, 1e-3]))
    for B in (4.0, 5.0, 6.0):
        try:
            return gen_planted_affine(d, k, n, B, noise, seed), B
        except GenerationError:
            continue
    raise GenerationError(f"no balance constant fits k={k}, n={n}")


def check_engine(cases: int = 50, seed: int = 303) -> CheckResult:
    """Every engine flag on planted affine configurations."""
    def run():
        rng = np.random.default_rng(seed)
        dims = []
        for c in range(cases):
            g, B = _planted_affine_case(rng, seed * 1000 + c)
            m = g.metadata
            a = analyze_affine(g.config, B, m["delta"], m["eps"])
            cert = a.certificate
            if not cert.passed:
                return False, f"case {c}: failing {cert.failing()}", {}
            if not (cert.dim <= cert.dim_bound and cert.distance_sum <= cert.distance_sum_bound
                    + SLACK and cert.eps_prime <= cert.eps_prime_bound + SLACK):
                return False, f"case {c}: headline inequality failed", {}
            dims.append(cert.dim)
        return True, f"{cases} configs, dim(L') in [{min(dims)}, {max(dims)}]", {"dims": dims}
    return _timed(3, "subspace engine", run)


def _gate_raises(fn, name: str) -> bool:
    try:
        fn()
    except HypothesisNotMet as exc:
        return exc.inequality == name
    return False


def _gate_passes(fn, name: str) -> bool:
    try:
        fn()
    except HypothesisNotMet as exc:
        return exc.inequality != name
    return True


def check_front_ends(cases: int = 20, seed: int = 404) -> CheckResult:
    def run():
        g = gen_planted_affine(20, 2, 60, 4.0, 1e-4, seed)
        V, m = g.config, g.metadata
        below = math.nextafter(1 / 64, 0.0)
        gates = {
            "affine eps at 1/(16B) rejected": _gate_raises(
                lambda: analyze_affine(V, 4.0, m["delta"], 1 / 64), "eps < 1/(16B)"),
            "affine eps just below 1/(16B) admitted": _gate_passes(
                lambda: analyze_affine(V, 4.0, m["delta"], below), "eps < 1/(16B)"),
            "unbalanced rejected": _gate_raises(
                lambda: analyze_affine(V.points * 0.99, 4.0, m["delta"], m["eps"]),
                "B-balanced"),
        }
        h = gen_planted_projective(12, 3, 25, 0.5, 1e-5, seed)
        W, mh = h.config, h.metadata
        close = W.points.copy()
        close[1] = close[0] + 0.01 * close[2]
        close[1] /= np.linalg.norm(close[1])
        gates.update({
            "projective eps at mu^2/32 rejected": _gate_raises(
                lambda: analyze_projective(W, 0.5, mh["delta"], 0.25 / 32), "eps < mu^2/32"),
            "projective eps just below mu^2/32 admitted": _gate_passes(
                lambda: analyze_projective(W, 0.5, mh["delta"], math.nextafter(0.25 / 32, 0)),
                "eps < mu^2/32"),
            "unseparated rejected": _gate_raises(
                lambda: analyze_projective(close, 0.5, mh["delta"], mh["eps"]), "mu-separated"),
        })
        bad = [k for k, v in gates.items() if not v]
        if bad:
            return False, f"gates misbehaved: {bad}", {}
        rng = np.random.default_rng(seed)
        for c in range(cases):
            g, B = _planted_affine_case(rng, seed * 1000 + c)
            a = analyze_affine(g.config, B, g.metadata["delta"], g.metadata["eps"])
            if not a.passed or not a.params.g < 5 * B:
                return False, f"affine case {c}: failing {a.failing()}", {}
        for c in range(cases):
            k = 4 if c % 2 == 0 else 3
            n = int(rng.integers(40, 101)) if k == 4 else int(rng.integers(15, 32))
            noise = float(rng.choice([0.0, 1e-5, 1e-4]))
            h = gen_planted_projective(int(rng.integers(k, 33)), k, n, 0.5, noise,
                                       seed * 1000 + c)
            a = analyze_projective(h.config, 0.5, h.metadata["delta"], h.metadata["eps"])
            if not a.passed or not a.params.g < 8 / 0.5:
                return False, f"projective case {c}: failing {a.failing()}", {}
        return True, f"6 gates exact, {cases} affine + {cases} projective runs pass", {}
    return _timed(4, "front-ends and gates", run)


def check_counterexamples(B: float = 10.0, d: int = 30) -> CheckResult:
    """Obstruction configurations behave as described and are rejected by the gate.

    The membership ``v_i in line(u_i, e_j)`` holds at radius
    ``1/sqrt((B-1)^2+1)``, slightly above ``1/B``; this check verifies the
    exact radius, while every triple still has a member within ``1/B``.
    """
    def run():
        g = gen_example_affine(B, d)
        P, m = g.config.points, g.metadata
        ok_u = m["u_radius"] <= 1 / B
        ok_v = m["v_radius"] <= 1 / (B - 1) and abs(
            m["v_radius"] - 1 / math.sqrt((B - 1) ** 2 + 1)) < 1e-12
        triples_ok = all(
            min(line_distance(P[d + i], P[2 * d + i], P[j])[0],
                line_distance(P[2 * d + i], P[d + i], P[j])[0]) <= 1 / B
            for i in range(d) for j in range(d) if j != i)
        low = dim_eps_lower(P, 1.0)
        gate = _gate_raises(lambda: analyze_affine(P, B, 1 / 3, 1 / B), "eps < 1/(16B)")
        ch = gen_example_chain(50.0, 3)
        chain_ok = ch.metadata["max_pair_radius"] <= 2 / 50.0
        passed = ok_u and ok_v and triples_ok and low >= d - 2 and gate and chain_ok
        detail = (f"u radius {m['u_radius']:.4g} <= 1/B, v radius {m['v_radius']:.4g} "
                  f"(literal 1/B {'holds' if m['v_within_1_over_B'] else 'misses'}), "
                  f"dim_eps_lower(V,1)={low} >= {d - 2}, gate rejects={gate}, "
                  f"chain constant {ch.metadata['tube_constant']:.4g}/B")
        return passed, detail, {"v_radius": m["v_radius"], "lower": low,
                                "chain_constant": ch.metadata["tube_constant"]}
    return _timed(5, "counterexample controls", run)


def check_stable_lcc(cases: int = 20, seed: int = 606) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        zero_cases = 0
        for c in range(cases):
            dp = int(rng.integers(1, 5))
            q = min(3, max(dp, int(rng.integers(1, 4))))
            if q < dp:
                dp = q
            B = float(rng.choice([2.0, 3.0, 4.0]))
            n = int(rng.integers(40, 201))
            noise = 0.0 if c % 4 == 0 else float(rng.choice([1e-5, 1e-4, 1e-3]))
            g = gen_planted_lcc(dp, n, q, B, noise, seed * 1000 + c)
            m = g.metadata
            cert = lcc_dimension_pipeline(g.config, g.truth, q, m["delta"], B, m["eps"])
            if not cert.passed:
                return False, f"case {c}: failing {cert.failing()}", {}
            if noise == 0.0:
                zero_cases += 1
                if cert.eps_prime > 1e-9 or cert.per_point_dists.max() > 1e-9:
                    return False, f"case {c}: eps=0 but eps'={cert.eps_prime:.3g}", {}
        return True, f"{cases} instances ({zero_cases} exact) pass all flags", {}
    return _timed(6, "stable LCC pipeline", run)


def _tiny_instance(c: int, seed: int):
    rng = np.random.default_rng([seed, c])
    if c % 3 == 0:
        # each base point repeated m times; q = 1 recovers from any copy
        r = int(rng.integers(2, 5))
        m = int(rng.integers(2, 12 // r + 1))
        base = rng.standard_normal((r, 3)) + 1j * rng.standard_normal((r, 3))
        P = np.repeat(base, m, axis=0)
        k = m - 1
        fam = find_decoding_families(P, 1, 1.0, 0.0, k, seed + c)
        return P, fam, 1, 1.0, 0.0, (k - 0.5) / P.shape[0]
    n = int(rng.integers(6, 13))
    dp = int(rng.integers(1, 3))
    g = gen_planted_lcc(dp, n, dp, 4.0, float(rng.choice([0.0, 1e-3])), seed + c, d=dp + 2)
    m = g.metadata
    return g.config.points, g.truth, dp, 4.0, m["eps"], m["delta"]


def check_tiny_oracle(cases: int = 50, seed: int = 707) -> CheckResult:
    def run():
        yes = confirmed = exhausted = 0
        for c in range(cases):
            try:
                P, fam, q, B, eps, delta = _tiny_instance(c, seed)
            except SearchExhausted:
                exhausted += 1
                continue
            v = verify_stable_lcc(P, fam, q, delta, B, eps)
            if v.certified:
                yes += 1
                if exhaustive_stable_lcc_check(P, q, delta, B, eps):
                    confirmed += 1
                else:
                    return False, f"case {c}: YES verdict refuted by brute force", {}
        passed = yes == confirmed and yes >= cases // 2
        return passed, f"{yes} YES verdicts, {confirmed} confirmed, {exhausted} searches " \
                       f"exhausted, of {cases}", {"yes": yes}
    return _timed(7, "tiny-n oracle agreement", run)


def check_perturbation(cases: int = 50, seed: int = 808) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst = -math.inf
        for c in range(cases):
            if c % 2 == 0:
                g = gen_planted_lcc(2, 40, 2, 3.0, 1e-4, seed + c)
                P, fam = g.config.points, g.truth
            else:
                base = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
                P = np.repeat(base, 3, axis=0)
                fam = find_decoding_families(P, 1, 1.0, 0.0, 2, seed + c)
            alpha = float(rng.uniform(0, 0.05))
            Q, fam2 = perturb_stable_lcc(P, fam, alpha, seed + c)
            if np.linalg.norm(Q - P, axis=1).max() > alpha + SLACK:
                return False, f"case {c}: perturbation exceeds alpha", {}
            bound = fam.eps + (fam.q * fam.B + 1) * alpha
            for ts in fam2.tuples:
                for t in ts:
                    worst = max(worst, t.residual - bound)
                    if t.residual > bound + SLACK:
                        return False, f"case {c}: residual {t.residual} > {bound}", {}
        return True, f"{cases} perturbations, max(residual - bound) = {worst:.3g}", {}
    return _timed(8, "perturbation bound", run)


def check_dim_eps_bracket(cases: int = 100, seed: int = 909) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        for c in range(cases):
            n, d = int(rng.integers(2, 41)), int(rng.integers(1, 11))
            r = int(rng.integers(1, d + 1))
            A = (rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))) @ \
                (rng.standard_normal((r, d)) + 1j * rng.standard_normal((r, d)))
            A += rng.uniform(0, 0.3) * (rng.standard_normal((n, d))
                                        + 1j * rng.standard_normal((n, d)))
            grid = np.sort(rng.uniform(0, 2 * np.linalg.norm(A, axis=1).max(), 8))
            lows = [dim_eps_lower(A, e) for e in grid]
            ups = [dim_eps_upper(A, e)[0] for e in grid]
            if any(lo > up for lo, up in zip(lows, ups)):
                return False, f"case {c}: lower exceeds upper", {}
            if np.any(np.diff(lows) > 0) or np.any(np.diff(ups) > 0):
                return False, f"case {c}: bracket not monotone in eps", {}
        return True, f"{cases} configs x 8 radii: lower <= upper, both non-increasing", {}
    return _timed(9, "dim_eps bracket", run)


CHECKS = (check_small_eigs, check_hoffman_wielandt, check_engine, check_front_ends,
          check_counterexamples, check_stable_lcc, check_tiny_oracle, check_perturbation,
          check_dim_eps_bracket)


def run_all(echo=print) -> list[CheckResult]:
    out = []
    for fn in CHECKS:
        res = fn()
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out
