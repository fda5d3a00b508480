"""Closeness to the parity families, goodness/typicality of sets, and
the auxiliary link bipartite graph between ell-sets and (k-ell)-sets.

Goodness ratios are kept as exact rationals throughout so threshold
comparisons never turn into tolerance disputes.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .core import Budget, Hypergraph, as_budget, bits_of, check_vertex_set, comb0, mask_of
from .extremal import ExtremalSpec, build_extremal, edge_count, eta_mask


@dataclass(frozen=True)
class GoodnessReport:
    vertex_set: tuple[int, ...]
    alpha_star: Fraction

    def is_good(self, alpha) -> bool:
        return self.alpha_star <= alpha


def missing_degree(
    h: Hypergraph, spec: ExtremalSpec, s, budget: Budget | int | None = None
) -> int:
    """Number of completions of S that are parity-family edges missing
    from H."""
    vs = check_vertex_set(s, h.n)
    smask = mask_of(vs)
    b = as_budget(budget)
    rest = [v for v in range(h.n) if not (smask >> v) & 1]
    missing = 0
    for t in itertools.combinations(rest, h.k - len(vs)):
        b.spend()
        em = smask | mask_of(t)
        if eta_mask(spec, em) == spec.eta and not h.has_edge_mask(em):
            missing += 1
    return missing


def goodness(
    h: Hypergraph, spec: ExtremalSpec, s, budget: Budget | int | None = None
) -> GoodnessReport:
    """Exact alpha-star: missing parity-degree over the full completion
    count; S is alpha-good iff alpha_star <= alpha."""
    vs = check_vertex_set(s, h.n)
    if len(vs) > h.k - 1:
        raise ValueError(f"|S| must be <= k-1, got {len(vs)}")
    total = comb0(h.n - len(vs), h.k - len(vs))
    miss = missing_degree(h, spec, vs, budget)
    return GoodnessReport(vs, Fraction(miss, total))


def typicality(
    h: Hypergraph, spec: ExtremalSpec, s, alpha, budget: Budget | int | None = None
) -> bool:
    """Every non-empty subset of S is alpha-good."""
    vs = check_vertex_set(s, h.n)
    b = as_budget(budget)
    for size in range(1, len(vs) + 1):
        for sub in itertools.combinations(vs, size):
            if goodness(h, spec, sub, b).alpha_star > alpha:
                return False
    return True


def derived_alpha(k: int, alpha: Fraction) -> float:
    """Square-root blowup threshold sqrt(2^k * alpha) used when passing
    from graph-level closeness to per-set goodness."""
    return float((2**k * Fraction(alpha)) ** Fraction(1, 2))


def derived_eps(k: int, eps: Fraction) -> float:
    """Square-root blowup sqrt(k^k * eps) for closeness-derived goodness."""
    return float((k**k * Fraction(eps)) ** Fraction(1, 2))


# -- closeness ----------------------------------------------------------


@dataclass(frozen=True)
class ClosenessReport:
    distance: int
    a: tuple[int, ...]
    eta: int
    mode: str
    upper_bound_only: bool


def _sym_diff(h_masks: frozenset, h_size: int, spec: ExtremalSpec) -> int:
    in_b = sum(1 for em in h_masks if eta_mask(spec, em) == spec.eta)
    return h_size + edge_count(spec) - 2 * in_b


def closeness(
    h: Hypergraph,
    eta_type: int,
    mode: str = "exact",
    all_sizes: bool = False,
    seed: Optional[int] = None,
    starts: int = 32,
) -> ClosenessReport:
    """Minimum symmetric-difference edge count against near-balanced
    parity families of the given type.

    Exact mode scans every bipartition with |A| the balanced ceiling
    (every |A| with ``all_sizes``); heuristic mode runs steepest-descent
    vertex swaps from seeded random starts and reports an upper bound.
    """
    if eta_type not in (0, 1):
        raise ValueError("eta_type must be 0 or 1")
    n, k = h.n, h.k
    hx = h.to_explicit() if not h.is_explicit else h
    masks = frozenset(mask_of(e) for e in hx.edges)
    h_size = len(masks)
    if mode == "exact":
        if n > 16:
            raise ValueError("exact closeness supports n <= 16")
        sizes = range(n + 1) if all_sizes else [(n + 1) // 2]
        best = None
        best_spec = None
        for a_size in sizes:
            for a in itertools.combinations(range(n), a_size):
                spec = ExtremalSpec(n, k, a, eta_type)
                d = _sym_diff(masks, h_size, spec)
                if best is None or d < best:
                    best, best_spec = d, spec
        return ClosenessReport(best, best_spec.a, eta_type, "exact", False)
    if mode != "heuristic":
        raise ValueError(f"unknown mode {mode!r}")
    if seed is None:
        raise ValueError("heuristic mode requires a seed")
    rng = random.Random(seed)
    a_size = (n + 1) // 2
    best = None
    best_spec = None
    for _ in range(starts):
        a = set(rng.sample(range(n), a_size))
        spec = ExtremalSpec(n, k, tuple(sorted(a)), eta_type)
        d = _sym_diff(masks, h_size, spec)
        improved = True
        while improved:
            improved = False
            for u in sorted(a):
                for v in sorted(set(range(n)) - a):
                    cand = (a - {u}) | {v}
                    cspec = ExtremalSpec(n, k, tuple(sorted(cand)), eta_type)
                    cd = _sym_diff(masks, h_size, cspec)
                    if cd < d:
                        a, spec, d = cand, cspec, cd
                        improved = True
                        break
                if improved:
                    break
        if best is None or d < best:
            best, best_spec = d, spec
    return ClosenessReport(best, best_spec.a, eta_type, "heuristic", True)


# -- link bipartite graph ------------------------------------------------


@dataclass(frozen=True)
class LinkBigraph:
    """Adjacency oracle between all ell-sets and all (k-ell)-sets:
    (L, R) adjacent iff disjoint with L + R an edge."""

    n: int
    k: int
    ell: int
    l_sets: tuple[tuple[int, ...], ...]
    r_sets: tuple[tuple[int, ...], ...]
    adj: tuple[int, ...]  # bitset over r_sets indices, per l_set

    def deg_l(self, i: int) -> int:
        return self.adj[i].bit_count()

    def r_degrees(self) -> list[int]:
        degs = [0] * len(self.r_sets)
        for row in self.adj:
            m = row
            while m:
                low = m & -m
                degs[low.bit_length() - 1] += 1
                m ^= low
        return degs


def build_link_bigraph(h: Hypergraph, ell: int, budget: Budget | int | None = None) -> LinkBigraph:
    b = as_budget(budget)
    l_sets = tuple(itertools.combinations(range(h.n), ell))
    r_sets = tuple(itertools.combinations(range(h.n), h.k - ell))
    r_index = {mask_of(r): i for i, r in enumerate(r_sets)}
    adj = []
    for ls in l_sets:
        lm = mask_of(ls)
        row = 0
        rest = [v for v in range(h.n) if not (lm >> v) & 1]
        for t in itertools.combinations(rest, h.k - ell):
            b.spend()
            tm = mask_of(t)
            if h.has_edge_mask(lm | tm):
                row |= 1 << r_index[tm]
        adj.append(row)
    return LinkBigraph(h.n, h.k, ell, l_sets, r_sets, tuple(adj))


@dataclass(frozen=True)
class LinkProbeReport:
    n: int
    k: int
    ell: int
    gamma: Fraction
    min_deg_l: int
    min_deg_r: int
    n_l: int
    n_r: int
    min_overlap_partners: int
    rich_r_count: int
    property_i: bool
    property_ii: bool


def link_bigraph_probe(
    h: Hypergraph, ell: int, gamma, budget: Budget | int | None = None
) -> LinkProbeReport:
    """Degree and overlap probe of the link bipartite graph.

    Property (i): every L has at least (1/2+gamma)N partners L' with
    common neighborhood at least gamma*N'.  Property (ii): at least
    2*gamma*N' of the R side have degree at least (1/2+gamma)N.
    """
    gamma = Fraction(gamma)
    g = build_link_bigraph(h, ell, budget)
    n_l, n_r = len(g.l_sets), len(g.r_sets)
    deg_l = [row.bit_count() for row in g.adj]
    deg_r = g.r_degrees()
    overlap_threshold = gamma * n_r
    partner_floor = Fraction(1, 2) + gamma
    min_partners = None
    for i, row in enumerate(g.adj):
        partners = sum(1 for other in g.adj if (row & other).bit_count() >= overlap_threshold)
        if min_partners is None or partners < min_partners:
            min_partners = partners
    rich_r = sum(1 for d in deg_r if d >= partner_floor * n_l)
    return LinkProbeReport(
        n=h.n,
        k=h.k,
        ell=ell,
        gamma=gamma,
        min_deg_l=min(deg_l),
        min_deg_r=min(deg_r),
        n_l=n_l,
        n_r=n_r,
        min_overlap_partners=min_partners,
        rich_r_count=rich_r,
        property_i=min_partners >= partner_floor * n_l,
        property_ii=rich_r >= 2 * gamma * n_r,
    )


def perturbed_extremal(
    spec: ExtremalSpec, deletions: int, seed: int
) -> tuple[Hypergraph, Fraction]:
    """The parity family minus a seeded uniform sample of its edges;
    returns the graph and the exact closeness eps = deleted / n^k."""
    base = build_extremal(spec)
    all_edges = [mask_of(e) for e in base.iter_edges()]
    rng = random.Random(seed)
    gone = frozenset(rng.sample(all_edges, deletions))

    def pred(mask: int, _base=base, _gone=gone) -> bool:
        return _base.has_edge_mask(mask) and mask not in _gone

    h = Hypergraph.from_predicate(spec.n, spec.k, pred, structure="pred")
    return h, Fraction(deletions, spec.n**spec.k)
