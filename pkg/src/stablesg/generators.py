"""Instance generators: the classical obstructions and planted positive instances.

Every generator verifies its own output before returning it and records
what it measured in ``metadata``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .collinearity import line_distance, tube_members
from .designs import sg_hypothesis_check
from .errors import GenerationError
from .geometry import (PointConfig, Subspace, check_balanced, check_separated,
                       separation_matrix)
from .lcc import DecodingFamily, find_decoding_families

KINDS = ("example_affine", "example_chain", "sphere_packing",
         "planted_affine", "planted_projective", "planted_lcc")
RANDOMIZED = {"sphere_packing", "planted_affine", "planted_projective", "planted_lcc"}


@dataclass(frozen=True)
class Generated:
    """A generated configuration, its verification record, and optional ground truth.

    Unpacks as ``(config, truth)``.
    """

    config: PointConfig
    metadata: dict = field(default_factory=dict)
    truth: Any = None

    def __iter__(self):
        return iter((self.config, self.truth))


def _random_isometry(rng, k: int, d: int) -> np.ndarray:
    """``k x d`` matrix with orthonormal rows."""
    Z = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    Q, _ = np.linalg.qr(Z)
    return Q.T


def _unit_noise(rng, n: int, d: int, noise: float) -> np.ndarray:
    z = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    z /= np.linalg.norm(z, axis=1)[:, None]
    return z * (noise * rng.uniform(0.0, 1.0, n))[:, None]


def gen_example_affine(B: float, d: int) -> Generated:
    """Points ``e_i``, ``(B-1) e_i`` and ``B e_i`` for each axis.

    Rows are ordered ``e_1..e_d, u_1..u_d, v_1..v_d``. Exact tube radii are
    recorded: ``u_i`` sits at ``1/sqrt(B^2+1)`` from ``line(v_i, e_j)`` and
    ``v_i`` at ``1/sqrt((B-1)^2+1)`` from ``line(u_i, e_j)``.
    """
    if not B > 2 or d < 2:
        raise GenerationError("need B > 2 and d >= 2")
    E = np.eye(d, dtype=np.complex128)
    P = np.vstack([E, (B - 1) * E, B * E])
    u_rad = max(line_distance(P[d + i], P[2 * d + i], P[j])[0]
                for i in range(d) for j in range(d) if j != i)
    v_rad = max(line_distance(P[2 * d + i], P[d + i], P[j])[0]
                for i in range(d) for j in range(d) if j != i)
    meta = {
        "kind": "example_affine", "B": B, "d": d, "n": 3 * d,
        "u_radius": u_rad, "u_radius_exact": 1 / math.sqrt(B ** 2 + 1),
        "v_radius": v_rad, "v_radius_exact": 1 / math.sqrt((B - 1) ** 2 + 1),
        "u_within_1_over_B": bool(u_rad <= 1 / B),
        "v_within_1_over_B": bool(v_rad <= 1 / B),
    }
    if not (abs(u_rad - meta["u_radius_exact"]) < 1e-12
            and abs(v_rad - meta["v_radius_exact"]) < 1e-12):
        raise GenerationError("tube radii disagree with their closed forms")
    return Generated(PointConfig(P), meta)


def _pair_radii(P: np.ndarray) -> np.ndarray:
    """For each ordered pair, the smallest tube radius over third points (affine)."""
    n = P.shape[0]
    R = np.full((n, n), np.inf)
    for i, j in itertools.permutations(range(n), 2):
        R[i, j] = min(line_distance(P[k], P[i], P[j])[0] for k in range(n) if k not in (i, j))
    return R


def gen_example_chain(B: float, d: int) -> Generated:
    """Origin plus ``B^(i-1) e_i`` and ``(B^(i-1)+1) e_i`` along each axis.

    Records ``tube_constant = B * max_pairs min_k radius`` so the pairwise
    tube condition holds with ``eps = tube_constant / B``.
    """
    if not B > 4 or d < 2:
        raise GenerationError("need B > 4 and d >= 2")
    if (d - 1) * math.log10(B) > 150:
        raise GenerationError(f"B^(d-1) = {B}^{d - 1} overflows the safe float range")
    E = np.eye(d, dtype=np.complex128)
    rows = [np.zeros(d, dtype=np.complex128)]
    for i in range(d):
        s = float(B) ** i
        rows += [s * E[i], (s + 1) * E[i]]
    P = np.array(rows)
    R = _pair_radii(P)
    worst = float(R[np.isfinite(R)].max())
    meta = {"kind": "example_chain", "B": B, "d": d, "n": P.shape[0],
            "max_pair_radius": worst, "tube_constant": worst * B}
    return Generated(PointConfig(P), meta)


def _random_unit(rng, m: int, d: int) -> np.ndarray:
    z = rng.standard_normal((m, d)) + 1j * rng.standard_normal((m, d))
    return z / np.linalg.norm(z, axis=1)[:, None]


def gen_sphere_packing(d: int, mu: float, seed: int, budget: int = 4000,
                       probes: int = 2000) -> Generated:
    """Greedy mu-separated set from ``budget`` seeded random unit vectors in ``C^d``.

    Maximality is only approximated: ``largest_gap`` is the largest
    separation from the set among ``probes`` fresh random points.
    """
    if not 0 < mu < 2 or d < 1:
        raise GenerationError("need 0 < mu < 2 and d >= 1")
    rng = np.random.default_rng(int(seed))
    cand = _random_unit(rng, budget, d)
    chosen = [cand[0]]
    for v in cand[1:]:
        G = np.array(chosen) @ v.conj()
        if np.sqrt(np.maximum(2 - 2 * np.abs(np.real(G)), 0.0)).min() >= mu:
            chosen.append(v)
    P = np.array(chosen)
    probe = _random_unit(rng, probes, d)
    gaps = np.sqrt(np.maximum(2 - 2 * np.abs(np.real(probe @ P.conj().T)), 0.0)).min(axis=1)
    if not check_separated(P, mu).ok:
        raise GenerationError("greedy packing is not separated")
    census = 0
    if P.shape[0] >= 3:
        for i in range(P.shape[0]):
            _, jj, _ = tube_members(P, i, mu, "arc")
            if jj.size:
                census = max(census, int(np.bincount(jj).max()))
    meta = {"kind": "sphere_packing", "d": d, "mu": mu, "seed": int(seed), "n": P.shape[0],
            "budget": budget, "probes": probes, "largest_gap": float(gaps.max()),
            "max_arc_census": census}
    return Generated(PointConfig(P), meta)


def _lattice_ball(lattice: str, k: int, n: int, rng) -> np.ndarray:
    """The ``n`` points of a complex lattice in ``C^k`` nearest the origin, ties at random.

    ``eisenstein`` is ``Z[w]^k``; ``checkerboard`` is the set of Gaussian
    integer vectors whose coordinate sum lies in ``(1+i) Z[i]``, scaled by
    ``1/sqrt(2)`` (denser in low dimension). Both have minimum distance 1
    and are closed under combinations with ring coefficients, so many
    triples are exactly collinear.
    """
    if lattice == "eisenstein":
        w = np.exp(2j * np.pi / 3)
        scale, ok = 1.0, None
    elif lattice == "checkerboard":
        w = 1j
        scale = 1 / math.sqrt(2)

        def ok(c):
            s = np.sum(c, axis=-1)
            return (np.rint(s.real) + np.rint(s.imag)).astype(np.int64) % 2 == 0
    else:
        raise GenerationError(f"unknown lattice {lattice!r}")
    R = 1
    while True:
        r = range(-R, R + 1)
        g = np.array([a + b * w for a in r for b in r])
        g = g[np.abs(g) * scale <= R]
        if g.size ** k >= 8 * n or R >= 8:
            break
        R += 1
    L = np.array(list(itertools.product(g, repeat=k)))
    if ok is not None:
        L = L[ok(L)]
    L = L * scale
    key = np.round(np.linalg.norm(L, axis=1), 9)
    pick = L[np.lexsort((rng.random(L.shape[0]), key))[:n]]
    if pick.shape[0] < n:
        raise GenerationError(f"lattice too small for n={n}")
    return pick


def recommended_affine_eps(noise: float, B: float) -> float:
    return min(12 * noise, 0.9 / (16 * B))


def gen_planted_affine(d: int, k_planted: int, n: int, B: float, noise: float,
                       seed: int, lattice: str = "auto") -> Generated:
    """Lattice ball in a random ``k_planted``-dim subspace of ``C^d``, plus noise.

    The lattice is scaled by ``1 + 2 noise`` so that perturbations of norm
    at most ``noise`` keep every distance at least 1. ``lattice="auto"``
    tries the Eisenstein lattice and falls back to the checkerboard one when
    the ball is too wide for ``B``. ``delta`` is measured at the recommended
    ``eps`` and reported, not promised.
    """
    if not 1 <= k_planted <= min(d, 6):
        raise GenerationError("need 1 <= k_planted <= min(d, 6)")
    if not 0 <= noise < 1 / (16 * B):
        raise GenerationError("need 0 <= noise < 1/(16B)")
    choices = ("eisenstein", "checkerboard") if lattice == "auto" else (lattice,)
    for name in choices:
        rng = np.random.default_rng(int(seed))
        X = _lattice_ball(name, k_planted, n, rng) * (1 + 2 * noise)
        Q = _random_isometry(rng, k_planted, d)
        P = X @ Q + _unit_noise(rng, n, d, noise)
        bal = check_balanced(P, B)
        if bal.ok:
            break
    else:
        raise GenerationError(f"cannot balance: pair {bal.pair} at distance {bal.value} (B={B})")
    eps = recommended_affine_eps(noise, B)
    rep = sg_hypothesis_check(P, eps, 0.0, "affine")
    truth = Subspace(d, Q)
    meta = {"kind": "planted_affine", "d": d, "k_planted": k_planted, "n": n, "B": B,
            "noise": noise, "seed": int(seed), "lattice": name, "eps": eps,
            "delta": rep.measured_delta, "truth_distance": float(truth.distances(P).max())}
    return Generated(PointConfig(P), meta, truth)


def _gaussian_directions(k: int) -> np.ndarray:
    """Nonzero ``{0, +-1, +-i}^k`` vectors, one per unit-phase class, normalized."""
    ent = (0, 1, -1, 1j, -1j)
    out, seen = [], set()
    for c in itertools.product(ent, repeat=k):
        c = np.array(c, dtype=np.complex128)
        nz = np.flatnonzero(c)
        if nz.size == 0:
            continue
        c = c / c[nz[0]]                 # first nonzero entry becomes 1
        key = tuple(np.round(c, 9))
        if key not in seen:
            seen.add(key)
            out.append(c)
    out = np.array(out)
    return out / np.linalg.norm(out, axis=1)[:, None]


def recommended_projective_eps(noise: float, mu: float) -> float:
    return min(24 * noise, 0.9 * mu ** 2 / 32)


def gen_planted_projective(d: int, k_planted: int, n: int, mu: float, noise: float,
                           seed: int) -> Generated:
    """Unit vectors from ``{0, +-1, +-i}^k`` directions inside a random subspace.

    Directions are chosen greedily (sparsest first, seeded ties) to be
    separated from every unit-phase multiple of each other, with margin for
    the noise, then perturbed and renormalized.
    """
    if not 1 <= k_planted <= min(d, 7):
        raise GenerationError("need 1 <= k_planted <= min(d, 7)")
    if not 0 < mu < 2 or noise < 0:
        raise GenerationError("need 0 < mu < 2 and noise >= 0")
    rng = np.random.default_rng(int(seed))
    C = _gaussian_directions(k_planted)
    height = np.count_nonzero(np.abs(C) > 0, axis=1)
    order = np.lexsort((rng.random(C.shape[0]), height))
    target = mu + 4 * noise
    sel: list[int] = []
    for i in order:
        if sel:
            sep = np.sqrt(np.maximum(2 - 2 * np.abs(C[sel] @ C[i].conj()), 0.0))
            if sep.min() < target:
                continue
        sel.append(int(i))
        if len(sel) == n:
            break
    if len(sel) < n:
        raise GenerationError(f"only {len(sel)} separated directions for n={n}, mu={mu}")
    Q = _random_isometry(rng, k_planted, d)
    P = C[sel] @ Q + _unit_noise(rng, n, d, noise)
    P /= np.linalg.norm(P, axis=1)[:, None]
    sep = check_separated(P, mu, phase_invariant=True)
    if not sep.ok:
        raise GenerationError(f"noise broke separation at pair {sep.pair}")
    eps = recommended_projective_eps(noise, mu)
    rep = sg_hypothesis_check(P, eps, 0.0, "arc")
    truth = Subspace(d, Q)
    meta = {"kind": "planted_projective", "d": d, "k_planted": k_planted, "n": n, "mu": mu,
            "noise": noise, "seed": int(seed), "eps": eps, "delta": rep.measured_delta,
            "min_phase_separation": float(np.min(
                separation_matrix(P, True)[np.triu_indices(n, 1)])),
            "truth_distance": float(truth.distances(P).max())}
    return Generated(PointConfig(P), meta, truth)


def gen_planted_lcc(d_prime: int, n: int, q: int, B: float, noise: float, seed: int,
                    d: int | None = None) -> Generated:
    """Unit vectors in a random ``d_prime``-dim subspace with a disjoint decoding family.

    ``k = n // 10 + 1`` tuples per index and ``delta = (k - 1) / n``, so the
    family certifies with margin exactly 1. Tuples are searched on the
    perturbed points at ``eps = (qB + 1) noise``.
    """
    if q < d_prime:
        raise GenerationError("need q >= d_prime so random q-tuples span")
    if noise < 0:
        raise GenerationError("noise must be non-negative")
    d = d if d is not None else 2 * d_prime + 2
    rng = np.random.default_rng(int(seed))
    base = _random_unit(rng, n, d_prime)
    Q = _random_isometry(rng, d_prime, d)
    P = base @ Q + _unit_noise(rng, n, d, noise)
    k = n // 10 + 1
    delta = (k - 1) / n
    eps = (q * B + 1) * noise
    fam: DecodingFamily = find_decoding_families(P, q, B, eps, k, seed)
    meta = {"kind": "planted_lcc", "d_prime": d_prime, "d": d, "n": n, "q": q, "B": B,
            "noise": noise, "seed": int(seed), "k": k, "delta": delta, "eps": eps,
            "truth_distance": float(Subspace(d, Q).distances(P).max())}
    return Generated(PointConfig(P), meta, fam)


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    params: dict

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GenerationError(f"unknown generator kind {self.kind!r}")
        if self.kind in RANDOMIZED and "seed" not in self.params:
            raise GenerationError(f"{self.kind} needs a seed")


_DISPATCH = {
    "example_affine": gen_example_affine,
    "example_chain": gen_example_chain,
    "sphere_packing": gen_sphere_packing,
    "planted_affine": gen_planted_affine,
    "planted_projective": gen_planted_projective,
    "planted_lcc": gen_planted_lcc,
}


def generate(spec: GeneratorSpec) -> Generated:
    try:
        return _DISPATCH[spec.kind](**spec.params)
    except TypeError as exc:
        raise GenerationError(f"bad parameters for {spec.kind}: {exc}") from None
