"""Stable locally correctable configurations.

A configuration is a stable LCC when every point can be approximated by a
bounded combination of at most ``q`` others, even after any small blocked
set is removed. This module finds disjoint recovery tuples, certifies the
property (sufficiently via pigeonhole, exactly for tiny ``n``), builds the
block matrix with one row per tuple, and runs the dimension pipeline.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificateError, HypothesisNotMet, SearchExhausted, TheoremViolation
from .geometry import SLACK, Subspace, as_config
from .spectral import column_distance_sum, right_spectrum, small_eig_count_bound, transfer_to_rows

#: Re-evaluated residuals must agree with stored ones to this tolerance.
RESIDUAL_TOL = 1e-9
#: Largest ``n`` accepted by the exhaustive oracle.
EXHAUSTIVE_MAX_N = 12

YES = "YES"
UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class RecoveryTuple:
    """``v_target ~ sum_j b_j v_j`` over ``support`` with ``|b_j| <= B``."""

    target: int
    support: tuple[int, ...]
    coefficients: tuple[complex, ...]
    residual: float

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(int(j) for j in self.support))
        object.__setattr__(self, "coefficients", tuple(complex(b) for b in self.coefficients))
        if len(self.support) != len(self.coefficients):
            raise CertificateError("support and coefficients differ in length")
        if len(set(self.support)) != len(self.support):
            raise CertificateError(f"repeated index in support {self.support}")
        if self.target in self.support:
            raise CertificateError(f"target {self.target} inside its own support")

    def residual_on(self, P: np.ndarray) -> float:
        approx = sum((b * P[j] for b, j in zip(self.coefficients, self.support)),
                     np.zeros(P.shape[1], dtype=np.complex128))
        return float(np.linalg.norm(P[self.target] - approx))

    def check(self, P: np.ndarray, q: int, B: float, eps: float) -> None:
        if len(self.support) > q:
            raise CertificateError(f"tuple for {self.target} has {len(self.support)} > q={q} indices")
        if self.coefficients and max(abs(b) for b in self.coefficients) > B + SLACK:
            raise CertificateError(f"tuple for {self.target} has a coefficient above B={B}")
        r = self.residual_on(P)
        if abs(r - self.residual) > RESIDUAL_TOL:
            raise CertificateError(
                f"tuple for {self.target}: stored residual {self.residual} vs recomputed {r}")
        if r > eps + SLACK:
            raise CertificateError(f"tuple for {self.target}: residual {r} exceeds eps={eps}")


@dataclass(frozen=True)
class DecodingFamily:
    """For each index ``i``, ``k`` recovery tuples with pairwise disjoint supports."""

    n: int
    q: int
    B: float
    eps: float
    tuples: tuple[tuple[RecoveryTuple, ...], ...]

    def __post_init__(self):
        tuples = tuple(tuple(ts) for ts in self.tuples)
        object.__setattr__(self, "tuples", tuples)
        if len(tuples) != self.n:
            raise CertificateError(f"family covers {len(tuples)} of {self.n} indices")
        ks = {len(ts) for ts in tuples}
        if len(ks) > 1:
            raise CertificateError(f"non-uniform tuple counts {sorted(ks)}")
        for i, ts in enumerate(tuples):
            seen: set = set()
            for t in ts:
                if t.target != i:
                    raise CertificateError(f"tuple filed under {i} targets {t.target}")
                if seen.intersection(t.support):
                    raise CertificateError(f"overlapping supports for index {i}")
                seen.update(t.support)

    @property
    def k(self) -> int:
        return len(self.tuples[0]) if self.tuples else 0

    def validate(self, V) -> None:
        P = as_config(V).points
        if P.shape[0] != self.n:
            raise CertificateError(f"family for n={self.n}, configuration has {P.shape[0]}")
        for ts in self.tuples:
            for t in ts:
                t.check(P, self.q, self.B, self.eps)


def _solve_batch(P: np.ndarray, i: int, J: np.ndarray):
    W = np.swapaxes(P[J], 1, 2)                     # (batch, d, q)
    coef = np.linalg.pinv(W) @ P[i]
    res = np.linalg.norm(P[i][None, :] - np.einsum("bdq,bq->bd", W, coef), axis=1)
    return coef, res


def find_decoding_families(V, q: int, B: float, eps: float, k: int, seed: int,
                           max_attempts: int | None = None) -> DecodingFamily:
    """Randomized greedy search for ``k`` disjoint recovery ``q``-tuples per index.

    Each index draws from its own generator seeded by ``(seed, i)``.
    Candidates are solved by unconstrained least squares and rejected (never
    clipped) if a coefficient exceeds ``B`` or the residual exceeds ``eps``.
    """
    if q < 1 or B < 1 or eps < 0 or k < 0:
        raise ValueError("need q >= 1, B >= 1, eps >= 0, k >= 0")
    P = as_config(V).points
    n = P.shape[0]
    budget = max_attempts if max_attempts is not None else 200 + 50 * k
    out = []
    for i in range(n):
        rng = np.random.default_rng([int(seed), i])
        used = np.zeros(n, dtype=bool)
        used[i] = True
        found: list[RecoveryTuple] = []
        tried = 0
        while len(found) < k and tried < budget:
            free = np.flatnonzero(~used)
            if free.size < q:
                break
            batch = min(32, budget - tried)
            J = np.stack([rng.choice(free, size=q, replace=False) for _ in range(batch)])
            coef, res = _solve_batch(P, i, J)
            tried += batch
            for t in range(batch):
                if used[J[t]].any():
                    continue
                if np.abs(coef[t]).max() > B + SLACK or res[t] > eps + SLACK:
                    continue
                tup = RecoveryTuple(i, tuple(J[t].tolist()), tuple(coef[t]), 0.0)
                tup = RecoveryTuple(i, tup.support, tup.coefficients, tup.residual_on(P))
                if tup.residual > eps + SLACK:
                    continue
                found.append(tup)
                used[J[t]] = True
                if len(found) == k:
                    break
        if len(found) < k:
            raise SearchExhausted(i, len(found), k)
        out.append(tuple(found))
    return DecodingFamily(n, q, B, eps, tuple(out))


@dataclass(frozen=True)
class Verdict:
    status: str
    k: int
    blocked: float      # delta * n
    margin: float       # k - delta * n

    @property
    def certified(self) -> bool:
        return self.status == YES


def verify_stable_lcc(V, family: DecodingFamily, q: int, delta: float, B: float,
                      eps: float) -> Verdict:
    """YES when ``k > delta n`` disjoint valid tuples exist for every index.

    A blocked set of size at most ``delta n`` meets at most that many
    disjoint supports, so some tuple survives. With ``k <= delta n`` the
    family proves nothing either way and the verdict is UNKNOWN.
    """
    P = as_config(V).points
    n = P.shape[0]
    if family.n != n:
        raise CertificateError(f"family for n={family.n}, configuration has {n}")
    for ts in family.tuples:
        for t in ts:
            t.check(P, q, B, eps)
    blocked = delta * n
    status = YES if family.k > blocked + 1e-12 else UNKNOWN
    return Verdict(status, family.k, blocked, family.k - blocked)


def _bounded_residual(W: np.ndarray, v: np.ndarray, B: float, eps: float) -> bool:
    """Decide ``min_{|b_j| <= B} ||v - W b|| <= eps`` for a small dense ``W``.

    Unconstrained least squares settles most cases; otherwise projected
    gradient with a Frank-Wolfe duality gap gives certified upper and lower
    bounds on the optimum.
    """
    if W.shape[1] == 0:
        return float(np.linalg.norm(v)) <= eps + SLACK
    b, *_ = np.linalg.lstsq(W, v, rcond=None)
    r0 = float(np.linalg.norm(v - W @ b))
    if r0 > eps + SLACK:
        return False
    if np.abs(b).max() <= B + SLACK:
        return True
    step = 1.0 / max(np.linalg.norm(W, 2) ** 2, 1e-300)
    x = b * np.minimum(1.0, B / np.maximum(np.abs(b), 1e-300))
    y, t = x.copy(), 1.0
    tol2 = (eps + SLACK) ** 2
    for _ in range(5000):
        g = W.conj().T @ (W @ y - v)
        z = y - step * g
        x_new = z * np.minimum(1.0, B / np.maximum(np.abs(z), 1e-300))
        t_new = (1 + math.sqrt(1 + 4 * t * t)) / 2
        y = x_new + ((t - 1) / t_new) * (x_new - x)
        x, t = x_new, t_new
        r = W @ x - v
        f = float(np.real(np.vdot(r, r)))
        if f <= tol2:
            return True
        gx = W.conj().T @ r
        gap = 2 * float(np.real(np.vdot(gx, x))) + 2 * B * float(np.abs(gx).sum())
        if f - gap > tol2:
            return False
    return f <= tol2 + 1e-12


def exhaustive_stable_lcc_check(V, q: int, delta: float, B: float, eps: float) -> bool:
    """Decide the stable-LCC property by brute force over blocked sets (``n <= 12``).

    Feasibility is monotone in the blocked set, so only blocked sets of the
    largest allowed size that avoid the target need checking.
    """
    P = as_config(V).points
    n = P.shape[0]
    if n > EXHAUSTIVE_MAX_N:
        raise ValueError(f"exhaustive check limited to n <= {EXHAUSTIVE_MAX_N}, got {n}")
    s = math.floor(delta * n + 1e-9)
    for i in range(n):
        others = [j for j in range(n) if j != i]
        feasible = []
        for size in range(0, min(q, len(others)) + 1):
            for J in itertools.combinations(others, size):
                if any(f & sum(1 << j for j in J) == f for f in feasible):
                    continue        # a subset is already feasible
                if _bounded_residual(P[list(J)].T, P[i], B, eps):
                    feasible.append(sum(1 << j for j in J))
        if not feasible:
            return False
        for S in itertools.combinations(others, min(s, len(others))):
            mask = sum(1 << j for j in S)
            if not any(f & mask == 0 for f in feasible):
                return False
    return True


@dataclass(frozen=True)
class LccMatrix:
    """``n`` blocks of shape ``k x n``; row ``r`` of block ``i`` encodes tuple ``r`` of ``i``."""

    n: int
    q: int
    B: float
    blocks: np.ndarray      # (n, k, n) complex

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=np.complex128)
        if b.ndim != 3 or b.shape[0] != self.n or b.shape[2] != self.n:
            raise CertificateError(f"blocks of shape {b.shape} for n={self.n}")
        for i in range(self.n):
            blk = b[i]
            if not np.all(blk[:, i] == 1):
                raise CertificateError(f"block {i} lacks the value 1 at column {i}")
            supp = blk != 0
            if supp.sum(axis=1).max(initial=0) > self.q + 1:
                raise CertificateError(f"block {i} has a row with more than q+1 entries")
            off = np.delete(blk, i, axis=1)
            if np.abs(off).max(initial=0.0) > self.B + SLACK:
                raise CertificateError(f"block {i} has an entry above B={self.B}")
            overlap = supp.astype(np.int64).sum(axis=0)
            overlap[i] = 0
            if overlap.max(initial=0) > 1:
                raise CertificateError(f"rows of block {i} share a column besides {i}")
        b = b.copy()
        b.flags.writeable = False
        object.__setattr__(self, "blocks", b)

    @property
    def k(self) -> int:
        return self.blocks.shape[1]

    def dense(self) -> np.ndarray:
        return self.blocks.reshape(self.n * self.k, self.n)


@dataclass(frozen=True)
class MatrixCheck:
    row_norms: np.ndarray
    total: float        # ||M A||^2
    bound: float        # n k eps^2
    ok: bool


def build_lcc_matrix(V, family: DecodingFamily, eps: float) -> tuple[LccMatrix, MatrixCheck]:
    """Row for tuple ``(i, J, b)``: 1 at ``i`` and ``-b_j`` at ``j``; rows of ``M A`` re-checked."""
    P = as_config(V).points
    n, k = family.n, family.k
    if P.shape[0] != n:
        raise CertificateError(f"family for n={n}, configuration has {P.shape[0]}")
    blocks = np.zeros((n, k, n), dtype=np.complex128)
    stored = np.zeros((n, k))
    for i, ts in enumerate(family.tuples):
        for r, t in enumerate(ts):
            blocks[i, r, i] = 1.0
            for j, b in zip(t.support, t.coefficients):
                blocks[i, r, j] = -b
            stored[i, r] = t.residual
    M = LccMatrix(n, family.q, family.B, blocks)
    E = M.dense() @ P
    norms = np.linalg.norm(E, axis=1)
    if np.abs(norms - stored.ravel()).max(initial=0.0) > RESIDUAL_TOL:
        raise CertificateError("a row of M A disagrees with its stored residual")
    if norms.max(initial=0.0) > eps + SLACK:
        raise CertificateError(f"a row of M A exceeds eps={eps}")
    total = float(np.sum(norms ** 2))
    bound = n * k * eps ** 2
    return M, MatrixCheck(norms, total, bound, total <= bound + SLACK)


def contract_with_R(M: LccMatrix, E: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum each block's rows: ``M_hat = R^T M`` and ``E_hat = R^T E``."""
    E = np.asarray(E, dtype=np.complex128)
    if E.ndim != 2 or E.shape[0] != M.n * M.k:
        raise ValueError(f"E has shape {E.shape}, expected ({M.n * M.k}, d)")
    M_hat = M.blocks.sum(axis=1)
    E_hat = E.reshape(M.n, M.k, -1).sum(axis=1)
    if not np.all(np.diag(M_hat) == M.k):
        raise CertificateError("diagonal of M_hat differs from k")
    off = M_hat - np.diag(np.diag(M_hat))
    if np.abs(off).max(initial=0.0) > M.B + SLACK:
        raise CertificateError("off-diagonal of M_hat exceeds B")
    e2, eh2 = float(np.sum(np.abs(E) ** 2)), float(np.sum(np.abs(E_hat) ** 2))
    if eh2 > M.n * e2 + SLACK:
        raise CertificateError(f"||E_hat||^2={eh2} exceeds n ||E||^2={M.n * e2}")
    return M_hat, E_hat


@dataclass
class LccCertificate:
    """Measured quantities of one LCC pipeline run next to their bounds."""

    subspace: Subspace
    coefficient_subspace_dim: int
    dim_bound: float
    count_dim_bound: float
    good: tuple[int, ...]
    recovered: dict         # bad index -> (support, bound, measured)
    good_threshold: float   # squared distance cut for the good set
    eps_prime: float
    eps_prime_bound: float
    per_point_dists: np.ndarray
    verdict: Verdict
    n: int
    k: int
    q: int
    B: float
    delta: float
    eps: float
    flags: dict = field(default_factory=dict)
    measured: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.subspace.dim

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def failing(self) -> list[str]:
        return [k for k, v in self.flags.items() if not v]

    def table(self) -> list[dict]:
        rows = [
            ("dim(L')", self.dim, self.dim_bound),
            ("|J| vs 2S/K^2", self.coefficient_subspace_dim, self.count_dim_bound),
            ("good-set threshold", self.good_threshold, self.measured["closed_form_threshold"]),
            ("eps'", self.eps_prime, self.eps_prime_bound),
            ("eps' (closed form)", self.eps_prime, self.measured["closed_form_eps_prime"]),
        ]
        return [{"name": n, "measured": float(a), "bound": float(b),
                 "holds": bool(a <= b + SLACK)} for n, a, b in rows]


def lcc_dimension_pipeline(V, family: DecodingFamily, q: int, delta: float, B: float,
                           eps: float, *, allow_unknown: bool = False) -> LccCertificate:
    """Certified low-dimensional approximation of a stable LCC configuration."""
    P = as_config(V).points
    n = P.shape[0]
    verdict = verify_stable_lcc(P, family, q, delta, B, eps)
    if not verdict.certified and not allow_unknown:
        raise HypothesisNotMet("k > delta n disjoint tuples per index",
                               f"k={verdict.k}, delta n={verdict.blocked}")
    k = family.k
    if k == 0:
        raise HypothesisNotMet("k >= 1", "empty decoding family")
    M, mcheck = build_lcc_matrix(P, family, eps)
    E = M.dense() @ P
    M_hat, E_hat = contract_with_R(M, E)

    X = M_hat.conj().T @ M_hat
    X = (X + X.conj().T) / 2
    diag = np.real(np.diag(X))
    off = X - np.diag(np.diag(X))
    K = float(k ** 2)
    S = float(np.sum(np.abs(off) ** 2))
    off_bound = 2 * k * B + n * B ** 2
    e2 = mcheck.total
    eh2 = float(np.sum(np.abs(E_hat) ** 2))
    flags = {
        "||MA||^2 <= n k eps^2": mcheck.ok,
        "||E_hat||^2 <= n ||E||^2": eh2 <= n * e2 + SLACK,
        "diag(X) >= k^2": bool(diag.min() >= K - SLACK),
        "|X offdiag| <= 2kB + nB^2": bool(np.abs(off).max(initial=0.0) <= off_bound + SLACK),
    }

    sigma, rows = right_spectrum(X)
    small = np.flatnonzero(sigma < k / 2)
    L = Subspace(n, rows[small].conj())
    count_bound = small_eig_count_bound(K, S)
    dim_bound = 2 * n ** 2 * off_bound ** 2 / k ** 4
    flags["|J| <= 2S/K^2"] = L.dim <= count_bound + SLACK
    flags["|J| <= 2n^2(2kB+nB^2)^2/k^4"] = L.dim <= dim_bound + SLACK

    col_sum = column_distance_sum(P, L)
    flags["sum dist(u_j,L)^2 <= 4||E_hat||^2/k^2"] = col_sum <= 4 * eh2 / k ** 2 + SLACK
    L_prime = transfer_to_rows(P, L)
    dists = L_prime.distances(P)
    row_sum = float(np.sum(dists ** 2))
    flags["dim(L') <= dim(L)"] = L_prime.dim <= L.dim
    flags["row sum <= column sum"] = row_sum <= col_sum + SLACK

    # Markov: fewer than delta n / 2 points exceed twice the average share
    t = 2 * col_sum / (delta * n) if delta > 0 else math.inf
    closed_t = 8 * n ** 2 * eps ** 2 / (delta * k ** 2) if delta > 0 else math.inf
    good_mask = dists <= math.sqrt(t) + SLACK
    bad = np.flatnonzero(~good_mask)
    flags["|bad| < delta n / 2"] = bool(bad.size == 0 or bad.size < delta * n / 2)
    flags["good threshold <= 8n^2eps^2/(delta k^2)"] = t <= closed_t + SLACK

    max_good = float(dists[good_mask].max()) if good_mask.any() else 0.0
    recovered = {}
    for i in bad.tolist():
        for tup in family.tuples[i]:
            if all(good_mask[j] for j in tup.support):
                bound = tup.residual + sum(abs(b) * dists[j]
                                           for j, b in zip(tup.support, tup.coefficients))
                recovered[i] = (tup.support, float(bound), float(dists[i]))
                break
        else:
            raise TheoremViolation("bad point has a recovery tuple inside the good set",
                                   f"index {i}, {bad.size} bad points, k={k}")
    flags["recovered points within their bound"] = all(
        meas <= bound + SLACK for _, bound, meas in recovered.values())
    cands = [b for _, b, _ in recovered.values()] + [max_good]
    eps_prime = max(cands)
    eps_bound = eps + q * B * math.sqrt(t)
    closed_eps = eps + q * B * math.sqrt(closed_t)
    flags["max dist <= eps'"] = float(dists.max(initial=0.0)) <= eps_prime + SLACK
    flags["eps' <= eps + qB sqrt(t)"] = eps_prime <= eps_bound + SLACK
    flags["eps' <= eps + qB sqrt(8n^2eps^2/(delta k^2))"] = eps_prime <= closed_eps + SLACK

    return LccCertificate(
        subspace=L_prime, coefficient_subspace_dim=L.dim, dim_bound=dim_bound,
        count_dim_bound=count_bound, good=tuple(int(i) for i in np.flatnonzero(good_mask)),
        recovered=recovered, good_threshold=t, eps_prime=eps_prime,
        eps_prime_bound=eps_bound, per_point_dists=dists, verdict=verdict, n=n, k=k, q=q,
        B=B, delta=delta, eps=eps, flags={a: bool(b) for a, b in flags.items()},
        measured={"K": K, "S": S, "||E||^2": e2, "||E_hat||^2": eh2,
                  "column_sum": col_sum, "row_sum": row_sum, "closed_form_threshold": closed_t,
                  "closed_form_eps_prime": closed_eps, "singular_values": sigma})


def perturb_stable_lcc(V, family: DecodingFamily, alpha: float,
                       seed: int) -> tuple[np.ndarray, DecodingFamily]:
    """Move every point by at most ``alpha`` and re-evaluate each tuple unchanged.

    Each residual grows by at most ``(1 + sum |b_j|) alpha``, so the family
    stays valid at ``eps + (qB + 1) alpha``.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    P = as_config(V).points
    n, d = P.shape
    rng = np.random.default_rng(int(seed))
    z = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    z /= np.linalg.norm(z, axis=1)[:, None]
    Q = P + z * (alpha * rng.uniform(0.0, 1.0, n))[:, None]
    new_eps = family.eps + (family.q * family.B + 1) * alpha
    out = []
    for ts in family.tuples:
        row = []
        for t in ts:
            r = RecoveryTuple(t.target, t.support, t.coefficients, 0.0).residual_on(Q)
            if r > new_eps + SLACK:
                raise TheoremViolation("perturbed residual <= eps + (qB+1) alpha",
                                       f"index {t.target}: {r} > {new_eps}")
            row.append(RecoveryTuple(t.target, t.support, t.coefficients, r))
        out.append(tuple(row))
    return Q, DecodingFamily(n, family.q, family.B, new_eps, tuple(out))
