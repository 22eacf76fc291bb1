"""Front-ends: gate the hypotheses, certify triples, prune, and run the engine.

The affine path certifies each triple at floor ``1/(4B)`` and expects pair
multiplicity ``g < 5B``; the projective path uses floor ``mu/8`` and expects
``g < 8/mu``. Headline bounds plug the worst admissible design parameters
into the engine's formulas so every accepted run can be compared against
numbers rather than big-O shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .collinearity import (AFFINE, ARC, affine_dependence_certificate,
                           projective_dependence_certificate)
from .designs import (Collection, DesignParams, TripleFamily, collect,
                      design_parameters, prune_to_min_degree, sg_hypothesis_check)
from .errors import HypothesisNotMet
from .geometry import SLACK, as_config, check_balanced, check_separated
from .spectral import SubspaceCertificate, approximate_sg_subspace

#: ``eps < mu^2 / PROJECTIVE_GATE`` is the default projective gate.
PROJECTIVE_GATE = 32.0


def triple_target(delta: float, n: int) -> int:
    """Triples per index guaranteed by a delta-fraction of tube partners.

    Each partner ``j`` of ``i`` comes with a third point ``k``, and the
    unordered triple ``{i, j, k}`` can serve both ``j`` and ``k``, so only
    half the partner count is guaranteed as distinct triples.
    """
    return max(1, math.ceil(delta * (n - 1) / 2 - 1e-9))


@dataclass
class Analysis:
    kind: str
    delta: float
    eps: float
    mu: float
    collection: Collection
    design: TripleFamily
    params: DesignParams
    p_target: int
    certificate: SubspaceCertificate
    headline: dict
    flags: dict = field(default_factory=dict)
    hypotheses: dict = field(default_factory=dict)
    forced: bool = False

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def passed(self) -> bool:
        return (all(self.hypotheses.values()) and all(self.flags.values())
                and self.certificate.passed)

    def failing(self) -> list[str]:
        return ([f"hypothesis: {k}" for k, v in self.hypotheses.items() if not v]
                + [k for k, v in self.flags.items() if not v] + self.certificate.failing())


@dataclass
class AffineAnalysis(Analysis):
    B: float = 0.0


@dataclass
class ProjectiveAnalysis(Analysis):
    gate: float = PROJECTIVE_GATE


def _headline(n: int, pt: int, g_max: float, mu: float, eps: float) -> dict:
    # pruning keeps at most n * pt triples and p >= pt, so sqrt(m)/p <= sqrt(n/pt)
    return {
        "p": pt,
        "g": g_max,
        "mu": mu,
        "m_max": n * pt,
        "dim_bound": 2 * n ** 2 * g_max ** 2 / (pt ** 2 * mu ** 4),
        "eps_prime_bound": 5 * eps * math.sqrt(g_max * n * pt) / (pt * mu ** 2),
        "rho_bound": 2 * eps * math.sqrt(g_max * n * pt) / (pt * mu),
    }


def _gate(ok: bool, name: str, detail: str, force: bool, record: dict) -> None:
    record[name] = bool(ok)
    if not ok and not force:
        raise HypothesisNotMet(name, detail)


def _certify_and_run(P, coll: Collection, make_cert, pt: int, mu: float, eps: float,
                     force: bool):
    counts = coll.family.index_counts()
    target = pt
    if force:
        target = min(pt, int(counts.min()) if counts.size else 0)
        if target <= 0:
            raise HypothesisNotMet("p > 0", "some index lies in no triple; nothing to run")
    T = prune_to_min_degree(coll.family, target)
    certs = []
    for t in T.triples:
        w = coll.witnesses[t]
        a, b = w.pair
        certs.append(make_cert(P[a], P[b], P[w.on_tube], (a, b, w.on_tube)))
    if force:
        # certificates were built unchecked; run the engine at the weakest floor seen
        mu = min([mu] + [float(c.magnitudes.min()) for c in certs])
    return T, certs, approximate_sg_subspace(P, T, certs, mu, eps)


def analyze_affine(V, B: float, delta: float, eps: float, *,
                   force: bool = False) -> AffineAnalysis:
    """Gate, certify and run the engine for a B-balanced delta-SG configuration.

    With ``force=True`` failed gates are recorded instead of raised, and
    certificates skip their own hypothesis checks.
    """
    P = as_config(V).points
    n = P.shape[0]
    hyp: dict = {}
    _gate(eps < 1 / (16 * B), "eps < 1/(16B)", f"eps={eps!r}, 1/(16B)={1 / (16 * B)!r}",
          force, hyp)
    bal = check_balanced(P, B)
    _gate(bal.ok, "B-balanced", f"pair {bal.pair} at distance {bal.value}", force, hyp)
    coll = collect(P, eps, AFFINE)
    sg = sg_hypothesis_check(P, eps, delta, AFFINE, coll)
    _gate(sg.passed, "delta-fraction of partners have a third eps-collinear point",
          f"min partner count {sg.min_count} < {sg.required:.6g} at {sg.deficient[:10]}",
          force, hyp)

    mu = 1 / (4 * B)
    pt = triple_target(delta, n)

    def make(a, b, c, idx):
        return affine_dependence_certificate(a, b, c, B, indices=idx, check=not force)

    T, _, cert = _certify_and_run(P, coll, make, pt, mu, eps, force)
    params = design_parameters(T)
    head = _headline(n, pt, 5 * B, mu, eps)
    flags = {
        "p >= ceil(delta(n-1)/2)": params.p >= pt,
        "g < 5B": params.g < 5 * B,
        "dim(L') <= headline": cert.dim <= head["dim_bound"] + SLACK,
        "eps' <= headline": cert.eps_prime <= head["eps_prime_bound"] + SLACK,
    }
    return AffineAnalysis(AFFINE, delta, eps, mu, coll, T, params, pt, cert, head,
                          flags, hyp, force, B=B)


def analyze_affine_simple(V, B: float, eps: float, *, force: bool = False) -> AffineAnalysis:
    """Every-pair version: each pair has a third point in its tube."""
    return analyze_affine(V, B, 1.0, eps, force=force)


def analyze_projective(V, mu: float, delta: float, eps: float, *, force: bool = False,
                       gate: float = PROJECTIVE_GATE) -> ProjectiveAnalysis:
    """Projective analogue on the unit sphere with separation ``mu``.

    ``gate`` sets the admissible noise ``eps < mu^2 / gate``; the default is
    the proven one, other values are for experiments only.
    """
    P = as_config(V).points
    n = P.shape[0]
    hyp: dict = {}
    _gate(eps < mu ** 2 / gate, f"eps < mu^2/{gate:g}",
          f"eps={eps!r}, mu^2/{gate:g}={mu ** 2 / gate!r}", force, hyp)
    sep = check_separated(P, mu)
    _gate(sep.ok, "mu-separated", f"pair {sep.pair} at separation {sep.value}", force, hyp)
    coll = collect(P, eps, ARC)
    sg = sg_hypothesis_check(P, eps, delta, ARC, coll)
    _gate(sg.passed, "delta-fraction of partners have a third point on the eps-arc",
          f"min partner count {sg.min_count} < {sg.required:.6g} at {sg.deficient[:10]}",
          force, hyp)

    mu_c = mu / 8
    pt = triple_target(delta, n)

    def make(a, b, c, idx):
        return projective_dependence_certificate(a, b, c, mu, indices=idx, check=not force)

    T, _, cert = _certify_and_run(P, coll, make, pt, mu_c, eps, force)
    params = design_parameters(T)
    head = _headline(n, pt, 8 / mu, mu_c, eps)
    flags = {
        "p >= ceil(delta(n-1)/2)": params.p >= pt,
        "g < 8/mu": params.g < 8 / mu,
        "dim(L') <= headline": cert.dim <= head["dim_bound"] + SLACK,
        "eps' <= headline": cert.eps_prime <= head["eps_prime_bound"] + SLACK,
    }
    return ProjectiveAnalysis(ARC, delta, eps, mu_c, coll, T, params, pt, cert, head,
                              flags, hyp, force, gate=gate)


@dataclass(frozen=True)
class SubsetVariant:
    """Indices kept near ``L'`` and the largest distance among them.

    Unpacks as ``(indices, eps_doubleprime)``.
    """

    indices: tuple[int, ...]
    eps_doubleprime: float
    rho: float
    size_floor: float

    def __iter__(self):
        return iter((self.indices, self.eps_doubleprime))


def subset_variant(analysis: Analysis) -> SubsetVariant:
    cert = analysis.certificate
    n = cert.per_point_dists.shape[0]
    far = set(cert.far)
    keep = tuple(i for i in range(n) if i not in far)
    dmax = float(cert.per_point_dists[list(keep)].max()) if keep else 0.0
    floor = n - cert.p / cert.g
    assert len(keep) > floor - SLACK, "far set exceeds p/g"
    assert dmax <= cert.rho + SLACK, "kept point beyond rho"
    return SubsetVariant(keep, dmax, cert.rho, floor)
