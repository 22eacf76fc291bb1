"""Dependency-matrix engine turning a design of dependent triples into a subspace.

Pipeline: stack one row per certified triple into ``M`` (so ``M A`` has
short rows), keep the right singular vectors of ``M`` whose singular
values fall below ``mu sqrt(p) / 2``, push the columns of the point
matrix onto that span, read off the row space, and finally pull in the
few far points through triples whose other two members are close.
Every inequality along the way is measured and recorded next to its bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .collinearity import DependenceCertificate
from .designs import TripleFamily, design_parameters
from .errors import CertificateError, HypothesisNotMet, TheoremViolation
from .geometry import SLACK, Subspace, as_config


@dataclass(frozen=True)
class DependencyMatrix:
    """Sparse ``m x n`` matrix with one row ``(alpha, beta, gamma)`` per triple."""

    n: int
    indices: np.ndarray        # (m, 3) int
    coefficients: np.ndarray   # (m, 3) complex

    @property
    def m(self) -> int:
        return self.indices.shape[0]

    def sparse(self) -> sp.csr_matrix:
        rows = np.repeat(np.arange(self.m), 3)
        return sp.csr_matrix((self.coefficients.ravel(), (rows, self.indices.ravel())),
                             shape=(self.m, self.n))

    def dense(self) -> np.ndarray:
        return self.sparse().toarray()

    def gram(self) -> np.ndarray:
        """``M^* M`` as a dense Hermitian ``n x n`` array."""
        S = self.sparse()
        X = (S.conj().T @ S).toarray()
        return (X + X.conj().T) / 2


def build_dependency_matrix(V, T: TripleFamily, certs, mu: float,
                            eps: float) -> DependencyMatrix:
    """Rows of ``M`` from certificates, after re-checking each one against ``V``."""
    P = as_config(V).points
    by_triple = {}
    for c in certs:
        key = tuple(sorted(c.indices))
        if key in by_triple:
            raise CertificateError(f"two certificates for triple {key}")
        by_triple[key] = c
    if set(by_triple) != set(T.triples):
        missing = sorted(set(T.triples) - set(by_triple))[:5]
        extra = sorted(set(by_triple) - set(T.triples))[:5]
        raise CertificateError(f"certificates do not match triples (missing {missing}, extra {extra})")
    idx = np.zeros((len(T), 3), dtype=np.int64)
    coef = np.zeros((len(T), 3), dtype=np.complex128)
    for r, t in enumerate(T.triples):
        c: DependenceCertificate = by_triple[t]
        mags = c.magnitudes
        if mags.max() > 1 + SLACK or mags.min() < mu - SLACK:
            raise CertificateError(f"triple {t}: magnitudes {mags} outside [{mu}, 1]")
        res = c.recompute_residual(P)
        if abs(res - c.residual) > SLACK:
            raise CertificateError(f"triple {t}: stored residual {c.residual} != {res}")
        if res > eps + SLACK:
            raise CertificateError(f"triple {t}: residual {res} exceeds eps={eps}")
        idx[r] = c.indices
        coef[r] = c.coefficients
    M = DependencyMatrix(P.shape[0], idx, coef)
    E = M.sparse() @ P
    if len(T) and np.linalg.norm(E, axis=1).max() > eps + SLACK:
        raise CertificateError("a row of M A exceeds eps")
    return M


def small_eig_count_bound(K: float, S: float) -> float:
    """Upper bound ``2 S / K^2`` on the number of eigenvalues ``<= K/4``.

    Valid for any Hermitian matrix whose diagonal entries are all at least
    ``K`` and whose off-diagonal entries have squared sum ``S``.
    """
    if not K > 0:
        raise ValueError("diagonal floor K must be positive")
    if S < 0:
        raise ValueError("off-diagonal squared sum must be non-negative")
    return 2.0 * S / K ** 2


@dataclass(frozen=True)
class Extraction:
    subspace: Subspace          # in coefficient space C^n
    small: np.ndarray           # indices J of kept singular directions
    singular_values: np.ndarray  # all n, non-increasing
    threshold: float


def right_spectrum(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Singular values of ``M`` and right singular vectors (rows) from ``X = M^* M``."""
    lam, vecs = np.linalg.eigh(X)
    order = np.argsort(lam)[::-1]
    lam, vecs = lam[order], vecs[:, order]
    return np.sqrt(np.maximum(lam, 0.0)), vecs.T.conj()


def extract_subspace(M: DependencyMatrix, sigma_threshold: float) -> Extraction:
    """Span of right singular vectors of ``M`` with singular value at most the threshold."""
    if not sigma_threshold > 0:
        raise ValueError("threshold must be positive")
    sigma, rows = right_spectrum(M.gram())
    small = np.flatnonzero(sigma <= sigma_threshold)
    # rows are conjugated eigenvectors; the subspace of C^n is spanned by the eigenvectors
    L = Subspace(M.n, rows[small].conj())
    return Extraction(L, small, sigma, sigma_threshold)


def column_distance_sum(A, L: Subspace) -> float:
    """``sum_j dist(u_j, L)^2`` over the columns ``u_j`` of ``A``."""
    A = np.asarray(A, dtype=np.complex128)
    return float(np.sum(L.distances(A.T) ** 2))


def transfer_to_rows(A, L: Subspace) -> Subspace:
    """Row space of ``Y``, the matrix whose columns are the ``L``-projections of ``A``'s columns.

    Row ``i`` of ``Y`` lies in the returned subspace, hence
    ``sum_i dist(v_i, L') <= ||Y - A||^2`` which equals the column sum.
    """
    A = np.asarray(A, dtype=np.complex128)
    if L.dim == 0:
        return Subspace.zero(A.shape[1])
    # Y = B^T conj(B) A with B the basis rows; its row space is that of conj(B) A
    return Subspace.span(L.basis.conj() @ A, d=A.shape[1])


@dataclass(frozen=True)
class Refinement:
    eps_prime: float
    far: tuple[int, ...]
    rho: float
    certified: dict            # far index -> (triple, bound, measured)
    far_bound: float           # (eps + 2 rho) / mu


def refine_all_points(V, T: TripleFamily, L_prime: Subspace, certs, *, p: int, g: int,
                      m: int, mu: float, eps: float, dists=None) -> Refinement:
    """Certify the points left far from ``L'`` through triples with two near partners.

    ``far`` holds the indices with ``dist^2 > 4 g m eps^2 / (mu^2 p^2)``; for
    each, the first triple (in family order) whose other members are near
    bounds its distance by ``(res + |a| d_a + |b| d_b) / |c|``.
    """
    P = as_config(V).points
    if dists is None:
        dists = L_prime.distances(P)
    rho = 2 * eps * math.sqrt(g * m) / (p * mu)
    far = np.flatnonzero(dists > rho + SLACK)
    far_set = set(far.tolist())
    by_triple = {tuple(sorted(c.indices)): c for c in certs}
    certified = {}
    for i in far.tolist():
        for t in T.triples:
            if i not in t or any(x in far_set for x in t if x != i):
                continue
            c = by_triple[t]
            pos = c.indices.index(i)
            num = c.residual + sum(abs(c.coefficients[s]) * dists[c.indices[s]]
                                   for s in range(3) if s != pos)
            certified[i] = (t, num / abs(c.coefficients[pos]), float(dists[i]))
            break
        else:
            raise TheoremViolation(
                "far point has a triple with two near partners",
                f"index {i}, far set of size {len(far_set)}")
    near = np.setdiff1d(np.arange(P.shape[0]), far)
    candidates = [v[1] for v in certified.values()]
    if near.size:
        candidates.append(float(dists[near].max()))
    eps_prime = max(candidates, default=0.0)
    return Refinement(eps_prime, tuple(int(x) for x in far), rho, certified,
                      (eps + 2 * rho) / mu)


@dataclass
class SubspaceCertificate:
    """Measured quantities of one engine run, each paired with its bound."""

    subspace: Subspace
    coefficient_subspace_dim: int
    dim_bound: float
    count_dim_bound: float
    column_distance_sum: float
    distance_sum: float
    distance_sum_bound: float
    eps_prime: float
    eps_prime_bound: float
    rho: float
    far: tuple[int, ...]
    per_point_dists: np.ndarray
    p: int
    g: int
    m: int
    mu: float
    eps: float
    threshold: float
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
        """Rows ``(name, measured, bound, holds)`` for reports."""
        rows = [
            ("dim(L')", self.dim, self.dim_bound),
            ("|J| vs 2S/K^2", self.coefficient_subspace_dim, self.count_dim_bound),
            ("sum dist(u_j, L)^2", self.column_distance_sum, self.distance_sum_bound),
            ("sum dist(v_i, L')^2", self.distance_sum, self.distance_sum_bound),
            ("|I| (far points)", len(self.far), self.p / self.g if self.g else math.inf),
            ("eps'", self.eps_prime, self.eps_prime_bound),
        ]
        return [{"name": n, "measured": float(a), "bound": float(b),
                 "holds": bool(a <= b + SLACK) if "far" not in n else bool(a < b)}
                for n, a, b in rows]


def approximate_sg_subspace(V, T: TripleFamily, certs, mu: float, eps: float,
                            sigma_threshold: float | None = None) -> SubspaceCertificate:
    """Run the full pipeline and record every inequality of the proof chain."""
    P = as_config(V).points
    n = P.shape[0]
    params = design_parameters(T)
    if params.p <= 0:
        raise HypothesisNotMet("p > 0", "some index lies in no triple")
    if not mu > 0:
        raise HypothesisNotMet("mu > 0", f"mu={mu}")
    p, g, m = params.p, params.g, len(T)
    M = build_dependency_matrix(P, T, certs, mu, eps)

    X = M.gram()
    diag = np.real(np.diag(X))
    off = X - np.diag(np.diag(X))
    K = float(diag.min())
    S = float(np.sum(np.abs(off) ** 2))
    flags = {
        "column norms >= p mu^2": bool(K >= p * mu ** 2 - SLACK),
        "column inner products <= g": bool(np.abs(off).max(initial=0.0) <= g + SLACK),
    }

    threshold = mu * math.sqrt(p) / 2 if sigma_threshold is None else float(sigma_threshold)
    ext = extract_subspace(M, threshold)
    dim_bound = 2 * n ** 2 * g ** 2 / (p ** 2 * mu ** 4)
    count_bound = small_eig_count_bound(K, S)
    flags["|J| <= 2n^2g^2/(p^2mu^4)"] = bool(ext.subspace.dim <= dim_bound + SLACK)
    flags["|J| <= 2S/K^2"] = bool(ext.subspace.dim <= count_bound + SLACK)

    E = M.sparse() @ P
    e_sq = float(np.sum(np.abs(E) ** 2))
    col_sum = column_distance_sum(P, ext.subspace)
    sum_bound = 4 * m * eps ** 2 / (mu ** 2 * p)
    flags["||MA||^2 <= m eps^2"] = bool(e_sq <= m * eps ** 2 + SLACK)
    flags["sum dist(u_j,L)^2 <= 4m eps^2/(mu^2 p)"] = bool(col_sum <= sum_bound + SLACK)

    L_prime = transfer_to_rows(P, ext.subspace)
    dists = L_prime.distances(P)
    row_sum = float(np.sum(dists ** 2))
    flags["dim(L') <= dim(L)"] = bool(L_prime.dim <= ext.subspace.dim)
    flags["row sum <= column sum"] = bool(row_sum <= col_sum + SLACK)
    flags["sum dist(v_i,L')^2 <= 4m eps^2/(mu^2 p)"] = bool(row_sum <= sum_bound + SLACK)

    ref = refine_all_points(P, T, L_prime, certs, p=p, g=g, m=m, mu=mu, eps=eps,
                            dists=dists)
    eps_bound = 5 * eps * math.sqrt(g * m) / (p * mu ** 2)
    flags["|I| < p/g"] = bool(len(ref.far) < p / g)
    flags["far points within (eps + 2 rho)/mu"] = all(
        meas <= bound + SLACK and bound <= ref.far_bound + SLACK
        for _, bound, meas in ref.certified.values())
    flags["max dist <= eps'"] = bool(dists.max() <= ref.eps_prime + SLACK)
    flags["eps' <= 5 eps sqrt(gm)/(p mu^2)"] = bool(ref.eps_prime <= eps_bound + SLACK)

    return SubspaceCertificate(
        subspace=L_prime, coefficient_subspace_dim=ext.subspace.dim,
        dim_bound=dim_bound, count_dim_bound=count_bound,
        column_distance_sum=col_sum, distance_sum=row_sum, distance_sum_bound=sum_bound,
        eps_prime=ref.eps_prime, eps_prime_bound=eps_bound, rho=ref.rho, far=ref.far,
        per_point_dists=dists, p=p, g=g, m=m, mu=mu, eps=eps, threshold=threshold,
        flags=flags,
        measured={"K": K, "S": S, "||MA||^2": e_sq, "far_point_bound": ref.far_bound,
                  "singular_values": ext.singular_values})
