"""Tube and arc membership, and bounded-coefficient dependence certificates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, HypothesisNotMet, NotOnSphere, TheoremViolation
from .geometry import (DEGENERATE_TOL, SLACK, UNIT_TOL, as_config, as_vector,
                       separation_matrix)

AFFINE = "affine_line"
ARC = "spherical_arc"
_KIND_ALIASES = {"affine": AFFINE, "line": AFFINE, AFFINE: AFFINE,
                 "arc": ARC, "projective": ARC, "sphere": ARC, ARC: ARC}


def normalize_kind(kind: str) -> str:
    try:
        return _KIND_ALIASES[kind]
    except KeyError:
        raise ValueError(f"unknown tube kind {kind!r}") from None


@dataclass(frozen=True)
class TubeQuery:
    kind: str
    eps: float

    def __post_init__(self):
        object.__setattr__(self, "kind", normalize_kind(self.kind))
        if not self.eps >= 0:
            raise ValueError("eps must be non-negative")


@dataclass(frozen=True)
class DependenceCertificate:
    """Coefficients witnessing that ``alpha v_i + beta v_j + gamma v_k`` is short."""

    indices: tuple[int, int, int]
    coefficients: tuple[complex, complex, complex]
    residual: float
    mu_floor: float

    def __post_init__(self):
        if len(set(self.indices)) != 3:
            raise ValueError("certificate indices must be distinct")
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        object.__setattr__(self, "coefficients", tuple(complex(c) for c in self.coefficients))

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(np.array(self.coefficients))

    def combination(self, points) -> np.ndarray:
        P = as_config(points).points
        return sum(c * P[i] for c, i in zip(self.coefficients, self.indices))

    def recompute_residual(self, points) -> float:
        return float(np.linalg.norm(self.combination(points)))

    def revalidate(self, points, tol: float = SLACK) -> bool:
        mags = self.magnitudes
        return (abs(self.recompute_residual(points) - self.residual) <= tol
                and mags.max() <= 1 + tol and mags.min() >= self.mu_floor - tol)


def line_distance(w, u, v) -> tuple[float, complex]:
    """Distance from ``w`` to the complex line ``{a u + (1-a) v}`` and the minimizing ``a``."""
    w, u, v = as_vector(w), as_vector(u), as_vector(v)
    d = u - v
    dd = float(np.real(np.vdot(d, d)))
    if dd <= DEGENERATE_TOL ** 2:
        raise DegenerateInput("line through coincident points")
    x = w - v
    alpha = complex(np.vdot(d, x)) / dd
    return float(np.linalg.norm(x - alpha * d)), alpha


def _require_unit(*vs):
    for v in vs:
        if abs(np.linalg.norm(v) - 1) > UNIT_TOL:
            raise NotOnSphere(f"vector of norm {np.linalg.norm(v)!r}")


def arc_distance(w, u, v) -> tuple[float, complex, complex]:
    """Distance from unit ``w`` to ``span{u, v}`` intersected with the sphere.

    Returns ``(dist, alpha, beta)`` where ``alpha u + beta v`` is the
    orthogonal projection of ``w`` onto the span.
    """
    w, u, v = as_vector(w), as_vector(u), as_vector(v)
    _require_unit(w, u, v)
    basis = np.stack([u, v], axis=1)
    coef, *_ = np.linalg.lstsq(basis, w, rcond=None)
    p = basis @ coef
    pn = np.linalg.norm(p)
    if pn <= DEGENERATE_TOL:
        return float(np.sqrt(2.0)), 0j, 0j
    return float(np.linalg.norm(w - p / pn)), complex(coef[0]), complex(coef[1])


def _balanced_triple(pts, B):
    a, b, c = pts
    dists = (np.linalg.norm(a - b), np.linalg.norm(a - c), np.linalg.norm(b - c))
    return all(1 - SLACK <= x <= B + SLACK for x in dists), dists


def affine_dependence_certificate(v_i, v_j, v_k, B: float, indices=(0, 1, 2),
                                  check: bool = True) -> DependenceCertificate:
    """Certificate for ``v_k`` lying in a thin tube around ``line(v_i, v_j)``.

    The least-squares ``a`` with ``v_k ~ a v_i + (1-a) v_j`` gives the raw
    triple ``(a, 1-a, -1)``, rescaled so the largest magnitude is 1. For a
    B-balanced triple with tube radius below 1/2 every magnitude stays
    above ``1/(4B)``. ``check=False`` skips the hypotheses and reports the
    smallest magnitude as the floor instead.
    """
    v_i, v_j, v_k = as_vector(v_i), as_vector(v_j), as_vector(v_k)
    floor = 1.0 / (4.0 * B)
    eps, alpha = line_distance(v_k, v_i, v_j)
    if check:
        ok, dists = _balanced_triple((v_i, v_j, v_k), B)
        if not ok:
            raise HypothesisNotMet("B-balanced triple",
                                   f"pairwise distances {tuple(round(x, 6) for x in dists)}, B={B}")
        if not eps < 0.5:
            raise HypothesisNotMet("tube radius < 1/2", f"radius {eps!r}")
        if min(abs(alpha), abs(1 - alpha)) < floor - SLACK:
            raise TheoremViolation("line coefficient floor 1/(4B)",
                                   f"alpha={alpha!r}, B={B}")
    raw = np.array([alpha, 1 - alpha, -1.0], dtype=np.complex128)
    coeffs = raw / np.abs(raw).max()
    residual = float(np.linalg.norm(coeffs[0] * v_i + coeffs[1] * v_j + coeffs[2] * v_k))
    mags = np.abs(coeffs)
    if check:
        if mags.min() < floor - SLACK:
            raise TheoremViolation("rescaled coefficient floor 1/(4B)", f"magnitudes {mags}")
        mu_floor = floor
    else:
        mu_floor = min(floor, float(mags.min()))
    return DependenceCertificate(tuple(indices), tuple(coeffs), residual, mu_floor)


def projective_dependence_certificate(u, v, w, mu: float, indices=(0, 1, 2),
                                      check: bool = True) -> DependenceCertificate:
    """Certificate for unit ``w`` lying near ``arc(u, v)``.

    Takes the projection coefficients ``(a, b)`` of ``w`` onto ``span{u, v}``,
    forms ``(a, b, -1)`` and divides by ``max(|a|, |b|)`` when that exceeds 1.
    Under mu-separation and arc radius below ``mu/8`` all magnitudes land in
    ``[mu/8, 1]``.
    """
    u, v, w = as_vector(u), as_vector(v), as_vector(w)
    floor = mu / 8.0
    eps, a, b = arc_distance(w, u, v)
    if check:
        sep = separation_matrix(np.stack([u, v, w]))
        iu = np.triu_indices(3, 1)
        if sep[iu].min() < mu - SLACK:
            raise HypothesisNotMet("mu-separated triple",
                                   f"separation {sep[iu].min()!r} < mu={mu}")
        if not eps < floor:
            raise HypothesisNotMet("arc radius < mu/8", f"radius {eps!r}, mu={mu}")
    raw = np.array([a, b, -1.0], dtype=np.complex128)
    big = max(abs(a), abs(b))
    coeffs = raw / big if big > 1 else raw
    residual = float(np.linalg.norm(coeffs[0] * u + coeffs[1] * v + coeffs[2] * w))
    mags = np.abs(coeffs)
    if check:
        if mags.min() < floor - SLACK:
            phase_sep = separation_matrix(np.stack([u, v, w]), phase_invariant=True)
            if phase_sep[np.triu_indices(3, 1)].min() < mu - SLACK:
                # +-v separation leaves u = e^{i t} v unconstrained over C
                raise HypothesisNotMet(
                    "phase-invariant mu-separation",
                    f"coefficient magnitudes {mags} fall below mu/8={floor}")
            raise TheoremViolation("arc coefficient floor mu/8", f"magnitudes {mags}")
        mu_floor = floor
    else:
        mu_floor = min(floor, float(mags.min()))
    return DependenceCertificate(tuple(indices), tuple(coeffs), residual, mu_floor)


def tube_distance(P: np.ndarray, k: int, i: int, j: int, kind: str) -> float:
    kind = normalize_kind(kind)
    if kind == AFFINE:
        return line_distance(P[k], P[i], P[j])[0]
    return arc_distance(P[k], P[i], P[j])[0]


def tube_census(V, i: int, j: int, q: TubeQuery) -> list[int]:
    """Indices ``k`` (ascending, excluding i and j) inside the eps-tube of ``(v_i, v_j)``."""
    if i == j:
        raise ValueError("tube census needs two distinct indices")
    P = as_config(V).points
    return [k for k in range(P.shape[0])
            if k not in (i, j) and tube_distance(P, k, i, j, q.kind) <= q.eps + SLACK]


def tube_members(P: np.ndarray, i: int, eps: float, kind: str):
    """All ``(k, j)`` with ``v_k`` in the eps-tube of ``(v_i, v_j)``, for a fixed ``i``.

    A Gram-matrix formula screens every pair at once; survivors are then
    re-measured directly so cancellation in the screen never decides
    membership. Returns ``(k_idx, j_idx, dist)`` sorted by ``(j, k)``.
    """
    kind = normalize_kind(kind)
    n = P.shape[0]
    if kind == AFFINE:
        X = P - P[i]
        G = X @ X.conj().T
        nn = np.real(np.diag(G)).copy()
        good_j = nn > DEGENERATE_TOL ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            d2 = nn[:, None] - np.abs(G) ** 2 / np.where(good_j, nn, 1.0)[None, :]
        d2[:, ~good_j] = np.inf
        margin = 1e-6 * (1.0 + np.sqrt(nn.max()))
    else:
        G = P @ P.conj().T
        c = G[:, i]
        denom = 1.0 - np.abs(c) ** 2
        full = denom > DEGENERATE_TOL
        t = G - np.conj(c)[None, :] * G[:, i][:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            pn2 = np.abs(G[:, i])[:, None] ** 2 + np.where(
                full[None, :], np.abs(t) ** 2 / np.where(full, denom, 1.0)[None, :], 0.0)
        d2 = 2.0 - 2.0 * np.sqrt(np.minimum(pn2, 1.0))
        margin = 1e-6
    d2[i, :] = np.inf
    d2[:, i] = np.inf
    np.fill_diagonal(d2, np.inf)
    kk, jj = np.nonzero(np.sqrt(np.maximum(d2, 0.0)) <= eps + margin)
    if kk.size == 0:
        return kk, jj, np.zeros(0)
    if kind == AFFINE:
        D = X[jj]
        W = X[kk]
        alpha = np.sum(D.conj() * W, axis=1) / np.sum(np.abs(D) ** 2, axis=1)
        dist = np.linalg.norm(W - alpha[:, None] * D, axis=1)
    else:
        e = P[i]
        W = P[kk]
        a = W @ e.conj()
        F = P[jj] - c[jj][:, None] * e[None, :]
        fn = np.sqrt(np.maximum(denom[jj], 0.0))
        F = np.where(full[jj][:, None], F / np.where(fn > 0, fn, 1.0)[:, None], 0.0)
        b = np.sum(W * F.conj(), axis=1)
        p = a[:, None] * e[None, :] + b[:, None] * F
        pn = np.linalg.norm(p, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            dist = np.where(pn > DEGENERATE_TOL,
                            np.linalg.norm(W - p / np.where(pn > 0, pn, 1.0)[:, None], axis=1),
                            np.sqrt(2.0))
    keep = dist <= eps + SLACK
    kk, jj, dist = kk[keep], jj[keep], dist[keep]
    order = np.lexsort((kk, jj))
    return kk[order], jj[order], dist[order]
