"""Complex vector primitives, subspaces, and the two-sided bracket of dim_eps.

All vectors live in ``C^d`` and are stored as ``complex128`` numpy arrays.
The inner product is linear in the first argument,
``<u, v> = sum_i u_i * conj(v_i)``, so ``inner(u, v) == np.vdot(v, u)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, NotOnSphere

#: Gram-matrix tolerance for declaring a basis orthonormal.
ORTHO_TOL = 1e-10
#: Additive slack used when checking any certificate inequality.
SLACK = 1e-9
#: Below this, points coincide and projections vanish.
DEGENERATE_TOL = 1e-12
#: Allowed deviation of ``||v||`` from 1 for points on the sphere.
UNIT_TOL = 1e-9


def as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.complex128)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector has non-finite entries")
    return arr


def as_matrix(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def inner(u, v) -> complex:
    """``<u, v>``, conjugate-linear in the second slot."""
    return complex(np.vdot(v, u))


@dataclass(frozen=True)
class PointConfig:
    """An ordered list of ``n`` points in ``C^d`` (rows of ``points``)."""

    points: np.ndarray

    def __post_init__(self):
        pts = as_matrix(self.points)
        if pts.shape[0] < 1:
            raise ValueError("a configuration needs at least one point")
        if pts.shape[1] < 1:
            raise ValueError("ambient dimension must be positive")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, points) -> PointConfig:
        if isinstance(points, PointConfig):
            return points
        rows = [as_vector(p) for p in points]
        if len({len(r) for r in rows}) > 1:
            raise DimensionMismatch("points have different dimensions")
        return cls(np.array(rows))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.points[i]


def as_config(V) -> PointConfig:
    if isinstance(V, PointConfig):
        return V
    return PointConfig(np.asarray(V, dtype=np.complex128))


@dataclass(frozen=True)
class Subspace:
    """A linear subspace of ``C^d`` given by orthonormal basis rows.

    ``basis`` has shape ``(k, d)``; ``k == 0`` is the zero subspace.
    """

    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=np.complex128).reshape(-1, self.ambient_dim)
        if b.shape[0] > self.ambient_dim:
            raise DimensionMismatch("more basis vectors than ambient dimensions")
        gram = b @ b.conj().T
        if b.shape[0] and np.max(np.abs(gram - np.eye(b.shape[0]))) > ORTHO_TOL:
            raise ValueError("basis is not orthonormal")
        b = b.copy()
        b.flags.writeable = False
        object.__setattr__(self, "basis", b)

    @classmethod
    def zero(cls, d: int) -> Subspace:
        return cls(d, np.zeros((0, d), dtype=np.complex128))

    @classmethod
    def span(cls, vectors, d: int | None = None, rtol: float = 1e-12) -> Subspace:
        """Orthonormalize the row span of ``vectors``, dropping numerically null directions."""
        a = np.asarray(vectors, dtype=np.complex128)
        if d is None:
            d = a.shape[-1]
        a = a.reshape(-1, d)
        if a.shape[0] == 0:
            return cls.zero(d)
        _, s, vh = np.linalg.svd(a, full_matrices=False)
        if s.size == 0 or s[0] <= DEGENERATE_TOL:
            return cls.zero(d)
        keep = s > max(rtol * s[0], DEGENERATE_TOL)
        return cls(d, vh[keep])

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def project(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.complex128)
        if v.shape[-1] != self.ambient_dim:
            raise DimensionMismatch(
                f"vector of length {v.shape[-1]} vs subspace of C^{self.ambient_dim}")
        # coefficients <v, b_j> = sum v conj(b_j)
        return (v @ self.basis.conj().T) @ self.basis

    def distances(self, points) -> np.ndarray:
        """Distance of every row of ``points`` to the subspace."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.complex128))
        return np.linalg.norm(pts - self.project(pts), axis=1)


@dataclass(frozen=True)
class SpectrumSummary:
    """Singular values (non-increasing) with left and right singular vectors.

    ``right_vectors`` holds the right singular vectors as rows, so that
    ``A == left_vectors @ diag(singular_values) @ right_vectors``.
    """

    singular_values: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors


def distance(u, v) -> float:
    u, v = as_vector(u), as_vector(v)
    if u.shape != v.shape:
        raise DimensionMismatch(f"lengths {u.shape[0]} and {v.shape[0]}")
    return float(np.linalg.norm(u - v))


def dist_to_subspace(v, L: Subspace) -> tuple[float, np.ndarray]:
    v = as_vector(v)
    if v.shape[0] != L.ambient_dim:
        raise DimensionMismatch(f"vector in C^{v.shape[0]}, subspace in C^{L.ambient_dim}")
    proj = L.project(v)
    return float(np.linalg.norm(v - proj)), proj


def svd(A) -> SpectrumSummary:
    a = as_matrix(A)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    return SpectrumSummary(s, vh, u)


def dim_eps_upper(V, eps: float) -> tuple[int, Subspace]:
    """Smallest PCA truncation rank whose span is within ``eps`` of every point.

    This is an upper bound on ``dim_eps(V)``; the true value may be smaller
    since the minimax-optimal subspace need not be a PCA truncation.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    A = as_config(V).points
    n, d = A.shape
    u, s, vh = np.linalg.svd(A, full_matrices=False)
    # residual of row i after keeping k directions: sum_{j >= k} |u_ij s_j|^2
    contrib = np.abs(u * s) ** 2
    tails = np.concatenate([np.cumsum(contrib[:, ::-1], axis=1)[:, ::-1],
                            np.zeros((n, 1))], axis=1)
    for k in range(s.size + 1):
        if np.sqrt(tails[:, k].max()) <= eps + SLACK:
            L = Subspace(d, vh[:k])
            if L.distances(A).max() <= eps + SLACK:
                return k, L
    return s.size, Subspace(d, vh)


def dim_eps_lower(V, eps: float) -> int:
    """Largest ``k`` ruled out by the best-rank-k residual identity.

    Any k-dimensional ``L`` has ``sum_i dist(v_i, L)^2 >= sum_{j>k} sigma_j^2``,
    while ``dist(v_i, L) <= eps`` for all i forces that sum below ``n eps^2``.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    A = as_config(V).points
    n = A.shape[0]
    s = np.linalg.svd(A, compute_uv=False)
    sq = s ** 2
    tails = np.concatenate([np.cumsum(sq[::-1])[::-1], [0.0]])
    budget = n * eps ** 2 + 1e-12 * max(sq.sum(), 1.0)
    for k in range(s.size + 1):
        if tails[k] <= budget:
            return k
    return s.size


def _pairwise_distances(A: np.ndarray) -> np.ndarray:
    sq = np.sum(np.abs(A) ** 2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2 * np.real(A @ A.conj().T)
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(np.maximum(d2, 0.0))


class PairCheck(NamedTuple):
    ok: bool
    pair: tuple[int, int] | None
    value: float | None


def check_balanced(V, B: float) -> PairCheck:
    """``1 <= dist(v, v') <= B`` for all pairs; on failure report the worst pair."""
    if B < 1:
        raise ValueError("B must be at least 1")
    A = as_config(V).points
    n = A.shape[0]
    if n < 2:
        return PairCheck(True, None, None)
    D = _pairwise_distances(A)
    iu = np.triu_indices(n, 1)
    vals = D[iu]
    lo, hi = int(np.argmin(vals)), int(np.argmax(vals))
    if vals[lo] < 1 - SLACK:
        return PairCheck(False, (int(iu[0][lo]), int(iu[1][lo])), float(vals[lo]))
    if vals[hi] > B + SLACK:
        return PairCheck(False, (int(iu[0][hi]), int(iu[1][hi])), float(vals[hi]))
    return PairCheck(True, None, None)


def require_unit(A: np.ndarray) -> None:
    norms = np.linalg.norm(A, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1) > UNIT_TOL)
    if bad.size:
        i = int(bad[0])
        raise NotOnSphere(f"point {i} has norm {norms[i]!r}")


def separation_matrix(A: np.ndarray, phase_invariant: bool = False) -> np.ndarray:
    """``min(dist(u, v), dist(u, -v))`` for unit rows; with ``phase_invariant``
    the minimum runs over all unit-modulus multiples of ``v``."""
    G = A @ A.conj().T
    c = np.abs(G) if phase_invariant else np.abs(np.real(G))
    return np.sqrt(np.maximum(2 - 2 * c, 0.0))


def check_separated(V, mu: float, phase_invariant: bool = False) -> PairCheck:
    """mu-separation on the unit sphere.

    The default compares against ``v`` and ``-v`` only. Over C that does not
    rule out ``u = i v``; ``phase_invariant=True`` compares against every
    ``e^{i theta} v``, which is what the coefficient-floor arguments need.
    """
    A = as_config(V).points
    require_unit(A)
    n = A.shape[0]
    if n < 2:
        return PairCheck(True, None, None)
    S = separation_matrix(A, phase_invariant)
    iu = np.triu_indices(n, 1)
    vals = S[iu]
    lo = int(np.argmin(vals))
    if vals[lo] < mu - SLACK:
        return PairCheck(False, (int(iu[0][lo]), int(iu[1][lo])), float(vals[lo]))
    return PairCheck(True, None, None)
