"""Triple families, their (p, g)-design parameters, and pruning."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .collinearity import AFFINE, ARC, normalize_kind, tube_members
from .errors import DegenerateInput, HypothesisNotMet
from .geometry import DEGENERATE_TOL, _pairwise_distances, as_config, require_unit


@dataclass(frozen=True)
class TripleFamily:
    """Unordered 3-subsets of ``range(n)``, stored as sorted tuples in sorted order."""

    n: int
    triples: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        canon = sorted({tuple(sorted(int(x) for x in t)) for t in self.triples})
        if len(canon) != len(self.triples):
            raise ValueError("duplicate triples")
        for t in canon:
            if len(t) != 3 or len(set(t)) != 3:
                raise ValueError(f"triple {t} does not have three distinct elements")
            if t[0] < 0 or t[2] >= self.n:
                raise ValueError(f"triple {t} out of range for n={self.n}")
        object.__setattr__(self, "triples", tuple(canon))

    def __len__(self):
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)

    def __contains__(self, t):
        return tuple(sorted(t)) in set(self.triples)

    def as_array(self) -> np.ndarray:
        return np.array(self.triples, dtype=np.int64).reshape(-1, 3)

    def index_counts(self) -> np.ndarray:
        return np.bincount(self.as_array().ravel(), minlength=self.n)

    def pair_counts(self) -> np.ndarray:
        C = np.zeros((self.n, self.n), dtype=np.int64)
        arr = self.as_array()
        for a, b in ((0, 1), (0, 2), (1, 2)):
            np.add.at(C, (arr[:, a], arr[:, b]), 1)
        return C + C.T


@dataclass(frozen=True)
class DesignParams:
    p: int
    g: int


@dataclass(frozen=True)
class Witness:
    """Which point of a triple sits in the tube of the other two."""

    pair: tuple[int, int]
    on_tube: int
    distance: float


@dataclass(frozen=True)
class Collection:
    family: TripleFamily
    witnesses: dict = field(repr=False)
    kind: str
    eps: float
    partners: tuple[int, ...] = ()    # per index, number of j with a third point in tube(i, j)


def design_parameters(T: TripleFamily) -> DesignParams:
    if len(T) == 0:
        return DesignParams(0, 0)
    p = int(T.index_counts().min())
    g = int(T.pair_counts().max())
    return DesignParams(p, g)


def _require_distinct(P: np.ndarray) -> None:
    if P.shape[0] < 2:
        return
    D = _pairwise_distances(P)
    np.fill_diagonal(D, np.inf)
    if D.min() <= DEGENERATE_TOL:
        i, j = np.unravel_index(np.argmin(D), D.shape)
        raise DegenerateInput(f"points {min(i, j)} and {max(i, j)} coincide")


def collect(V, eps: float, kind: str) -> Collection:
    """All triples with some rotation placing one point in the eps-tube of the other two."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    kind = normalize_kind(kind)
    P = as_config(V).points
    if kind == AFFINE:
        _require_distinct(P)
    else:
        require_unit(P)
    best: dict[tuple[int, int, int], Witness] = {}
    partners = []
    for i in range(P.shape[0]):
        kk, jj, dist = tube_members(P, i, eps, kind)
        partners.append(int(np.unique(jj).size))
        for k, j, d in zip(kk.tolist(), jj.tolist(), dist.tolist()):
            t = tuple(sorted((i, j, k)))
            w = best.get(t)
            if w is None or d < w.distance:
                best[t] = Witness((min(i, j), max(i, j)), k, d)
    family = TripleFamily(P.shape[0], tuple(best))
    return Collection(family, best, kind, eps, tuple(partners))


def collect_triples_affine(V, eps: float) -> TripleFamily:
    return collect(V, eps, AFFINE).family


def collect_triples_arc(V, eps: float) -> TripleFamily:
    return collect(V, eps, ARC).family


def required_count(delta: float, n: int) -> int:
    return max(0, math.ceil(delta * (n - 1) - 1e-9))


def prune_to_min_degree(T: TripleFamily, target: int) -> TripleFamily:
    """Greedy sub-family keeping every index in at least ``target`` triples.

    Indices are visited in order; a deficient index takes the triple through
    it that helps the most still-deficient indices, ties broken by
    lexicographic order. Each kept triple raises some deficient count, so
    at most ``n * target`` triples survive.
    """
    counts = T.index_counts()
    short = np.flatnonzero(counts < target)
    if short.size:
        raise HypothesisNotMet(
            f"every index in >= {target} triples",
            f"deficient indices {short.tolist()[:20]}")
    by_index: list[list[tuple[int, int, int]]] = [[] for _ in range(T.n)]
    for t in T.triples:
        for x in t:
            by_index[x].append(t)
    have = np.zeros(T.n, dtype=np.int64)
    kept: set = set()
    for i in range(T.n):
        if have[i] >= target:
            continue
        deficient = have < target
        ranked = sorted((t for t in by_index[i] if t not in kept),
                        key=lambda t: -int(deficient[list(t)].sum()))
        for t in ranked[:target - have[i]]:
            kept.add(t)
            have[list(t)] += 1
    return TripleFamily(T.n, tuple(kept))


def prune_to_design(T: TripleFamily, delta: float) -> TripleFamily:
    """Keep roughly ``delta (n-1)`` triples per index (at least ``ceil(delta (n-1))``)."""
    return prune_to_min_degree(T, required_count(delta, T.n))


@dataclass(frozen=True)
class SGReport:
    """Per-index count of partners ``j`` whose tube with ``i`` holds a third point."""

    counts: tuple[int, ...]
    required: float
    passed: bool
    deficient: tuple[int, ...]

    @property
    def min_count(self) -> int:
        return min(self.counts) if self.counts else 0

    @property
    def measured_delta(self) -> float:
        n = len(self.counts)
        return self.min_count / (n - 1) if n > 1 else 0.0


def partner_counts(V, eps: float, kind: str) -> np.ndarray:
    kind = normalize_kind(kind)
    P = as_config(V).points
    if kind == ARC:
        require_unit(P)
    out = np.zeros(P.shape[0], dtype=np.int64)
    for i in range(P.shape[0]):
        _, jj, _ = tube_members(P, i, eps, kind)
        out[i] = np.unique(jj).size
    return out


def sg_hypothesis_check(V, eps: float, delta: float, kind,
                        collection: Collection | None = None) -> SGReport:
    """Does every index have at least ``delta (n-1)`` tube partners?

    A ``collection`` built at the same ``eps`` and kind supplies the counts
    without another scan.
    """
    kind = normalize_kind(getattr(kind, "kind", kind))
    P = as_config(V).points
    n = P.shape[0]
    if collection is not None and collection.kind == kind and collection.eps == eps:
        counts = np.array(collection.partners, dtype=np.int64)
    else:
        counts = partner_counts(P, eps, kind)
    need = delta * (n - 1)
    deficient = tuple(int(i) for i in np.flatnonzero(counts < need - 1e-9))
    return SGReport(tuple(int(c) for c in counts), need, not deficient, deficient)
