"""Exhaustive backtracking deciders for matchings, block cycles and
paths, connectors, absorbers, and wrong-parity edge pairs.

Every decider distinguishes a definitive "none" (search space exhausted)
from "unknown" (budget hit): the theorems being probed hold only for
large n, so a capped search must never masquerade as a refutation.

Branching fills the lexicographically least uncovered vertex first,
pruning by edge membership after each block; single-thread searches
return the lexicographically least canonical witness.
"""

from __future__ import annotations

import itertools
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass
from typing import Iterable, Optional

from .core import Hypergraph, bits_of, check_vertex_set, mask_of
from .extremal import ExtremalSpec, eta_mask
from .structures import Matching, SegCycle, SegPath, validate_path

FOUND = "found"
NONE = "none"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class SearchBudget:
    nodes: int = 10**7
    time_s: Optional[float] = None
    threads: int = 1

    def __post_init__(self):
        if self.nodes <= 0:
            raise ValueError("node cap must be positive")
        if self.time_s is not None and self.time_s <= 0:
            raise ValueError("time cap must be positive")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class SearchResult:
    status: str
    witness: object = None
    nodes: int = 0
    reason: str = ""

    @property
    def found(self) -> bool:
        return self.status == FOUND


class _BudgetHit(Exception):
    pass


class _Cancelled(Exception):
    pass


class _Ticker:
    """Node counter with optional deadline and cooperative cancellation."""

    __slots__ = ("cap", "count", "deadline", "stop")

    def __init__(self, budget: SearchBudget, stop: Optional[threading.Event] = None):
        self.cap = budget.nodes
        self.count = 0
        self.deadline = (
            time.monotonic() + budget.time_s if budget.time_s is not None else None
        )
        self.stop = stop

    def tick(self) -> None:
        self.count += 1
        if self.count > self.cap:
            raise _BudgetHit
        if self.count % 4096 == 0:
            if self.deadline is not None and time.monotonic() > self.deadline:
                raise _BudgetHit
            if self.stop is not None and self.stop.is_set():
                raise _Cancelled


def _combos(pool_mask: int, r: int):
    return itertools.combinations(bits_of(pool_mask), r)


# -- perfect matchings -------------------------------------------------


def find_perfect_matching(
    h: Hypergraph, budget: SearchBudget = SearchBudget()
) -> SearchResult:
    """Exact decision: a perfect matching, a definitive none, or unknown."""
    if h.n % h.k != 0:
        raise ValueError(f"k={h.k} does not divide n={h.n}")
    edges_by_min = None
    if h.is_explicit:
        edges_by_min = [[] for _ in range(h.n)]
        for e in h.edges:
            edges_by_min[e[0]].append(mask_of(e))
    ticker = _Ticker(budget)
    chosen: list[tuple[int, ...]] = []
    full = (1 << h.n) - 1

    def dfs(rem: int) -> bool:
        if rem == 0:
            return True
        v = (rem & -rem).bit_length() - 1
        if edges_by_min is not None:
            for em in edges_by_min[v]:
                ticker.tick()
                if em & ~rem:
                    continue
                chosen.append(bits_of(em))
                if dfs(rem ^ em):
                    return True
                chosen.pop()
            return False
        pool = rem ^ (1 << v)
        for rest in _combos(pool, h.k - 1):
            em = (1 << v) | mask_of(rest)
            ticker.tick()
            if not h.has_edge_mask(em):
                continue
            chosen.append((v,) + rest)
            if dfs(rem ^ em):
                return True
            chosen.pop()
        return False

    try:
        if dfs(full):
            return SearchResult(FOUND, Matching(h.k, tuple(chosen)), ticker.count)
        return SearchResult(NONE, None, ticker.count, "exhausted")
    except _BudgetHit:
        return SearchResult(UNKNOWN, None, ticker.count, "budget exceeded")


# -- Hamilton block cycles ---------------------------------------------


def _cycle_dfs(
    h: Hypergraph,
    ell: int,
    u0: int,
    ticker: _Ticker,
    first_blocks: Optional[tuple[tuple[int, ...], tuple[int, ...]]] = None,
) -> Optional[tuple[tuple[int, ...], ...]]:
    """DFS over block sequences L0,R0,...,L_{t-1},R_{t-1} with u0 the
    minimum vertex over all L-blocks (vertices below u0 live in R-blocks)."""
    n, k = h.n, h.k
    rs = k - ell
    t = n // k
    full = (1 << n) - 1
    low_mask = (1 << u0) - 1
    blocks: list[tuple[int, ...]] = []

    def place(idx: int, rem: int, prev_mask: int, l0_mask: int) -> bool:
        if idx == 2 * t:
            return True
        ticker.tick()
        is_l = idx % 2 == 0
        # R-blocks still open (the current one included when idx is odd)
        r_slots_left = t - idx // 2
        if (rem & low_mask).bit_count() > r_slots_left * rs:
            return False
        if is_l:
            pool = rem & ~low_mask & ~(1 << u0)
            for body in _combos(pool, ell):
                bm = mask_of(body)
                ticker.tick()
                if not h.has_edge_mask(prev_mask | bm):
                    continue
                blocks.append(body)
                if place(idx + 1, rem ^ bm, bm, l0_mask):
                    return True
                blocks.pop()
            return False
        last = idx == 2 * t - 1
        for body in _combos(rem, rs):
            bm = mask_of(body)
            ticker.tick()
            if not h.has_edge_mask(prev_mask | bm):
                continue
            if last and not h.has_edge_mask(bm | l0_mask):
                continue
            blocks.append(body)
            if place(idx + 1, rem ^ bm, bm, l0_mask):
                return True
            blocks.pop()
        return False

    if first_blocks is not None:
        l0, r0 = first_blocks
        l0m, r0m = mask_of(l0), mask_of(r0)
        blocks.extend([l0, r0])
        if place(2, full ^ l0m ^ r0m, r0m, l0m):
            return tuple(blocks)
        return None

    pool0 = full & ~low_mask & ~(1 << u0)
    for body in _combos(pool0, ell - 1):
        l0 = (u0,) + body
        l0m = mask_of(l0)
        blocks.append(l0)
        if place(1, full ^ l0m, l0m, l0m):
            return tuple(blocks)
        blocks.pop()
    return None


def _u0_range(h: Hypergraph, ell: int) -> range:
    rs = h.k - ell
    t = h.n // h.k
    if ell == rs:
        # equal block sizes: the block containing vertex 0 can be declared L0
        return range(0, 1)
    return range(0, min(t * rs, h.n - t * ell) + 1)


def find_ham_cycle(
    h: Hypergraph, ell: int, budget: SearchBudget = SearchBudget()
) -> SearchResult:
    """Exact decision for a spanning block cycle, canonical witness."""
    if h.n % h.k != 0:
        raise ValueError(f"k={h.k} does not divide n={h.n}")
    if not (1 <= ell <= h.k - 1):
        raise ValueError(f"need 1 <= ell <= k-1, got {ell}")
    if h.n // h.k < 2:
        raise ValueError("cycles need t = n/k >= 2")
    if budget.threads > 1:
        return _find_ham_cycle_parallel(h, ell, budget)
    ticker = _Ticker(budget)
    try:
        for u0 in _u0_range(h, ell):
            got = _cycle_dfs(h, ell, u0, ticker)
            if got is not None:
                cyc = SegCycle(h.k, ell, got).canonical()
                return SearchResult(FOUND, cyc, ticker.count)
        return SearchResult(NONE, None, ticker.count, "exhausted")
    except _BudgetHit:
        return SearchResult(UNKNOWN, None, ticker.count, "budget exceeded")


def _find_ham_cycle_parallel(h: Hypergraph, ell: int, budget: SearchBudget) -> SearchResult:
    """Work split over top-level (L0, R0) choices; returns a valid witness,
    not necessarily the least."""
    rs = h.k - ell
    full = (1 << h.n) - 1
    stop = threading.Event()
    tickers: list[_Ticker] = []

    def branch(u0: int, l0: tuple[int, ...], r0: tuple[int, ...]):
        ticker = _Ticker(budget, stop)
        tickers.append(ticker)
        return _cycle_dfs(h, ell, u0, ticker, first_blocks=(l0, r0))

    tasks = []
    per_branch = SearchBudget(budget.nodes, budget.time_s, 1)
    with ThreadPoolExecutor(max_workers=budget.threads) as pool:
        probe = _Ticker(per_branch)
        try:
            for u0 in _u0_range(h, ell):
                low_mask = (1 << u0) - 1
                pool0 = full & ~low_mask & ~(1 << u0)
                for body in _combos(pool0, ell - 1):
                    l0 = (u0,) + body
                    l0m = mask_of(l0)
                    for r0 in _combos(full ^ l0m, rs):
                        probe.tick()
                        if not h.has_edge_mask(l0m | mask_of(r0)):
                            continue
                        tasks.append(pool.submit(branch, u0, l0, r0))
        except _BudgetHit:
            stop.set()
            return SearchResult(UNKNOWN, None, probe.count, "budget exceeded")
        pending = set(tasks)
        hit_budget = False
        while pending:
            done, pending = wait(pending, return_when=FIRST_COMPLETED)
            for fut in done:
                try:
                    got = fut.result()
                except (_BudgetHit, _Cancelled):
                    hit_budget = True
                    continue
                if got is not None:
                    stop.set()
                    for other in pending:
                        other.cancel()
                    cyc = SegCycle(h.k, ell, got).canonical()
                    return SearchResult(FOUND, cyc, sum(t.count for t in tickers))
        nodes = sum(t.count for t in tickers) + probe.count
        if hit_budget:
            return SearchResult(UNKNOWN, None, nodes, "budget exceeded")
        return SearchResult(NONE, None, nodes, "exhausted")


# -- Hamilton block paths with prescribed ends --------------------------


def find_ham_path(
    h: Hypergraph,
    ell: int,
    l_end: Iterable[int],
    r_end: Iterable[int],
    budget: SearchBudget = SearchBudget(),
) -> SearchResult:
    """Spanning block path with ends exactly (L, R), or none/unknown."""
    if not (1 <= ell <= h.k - 1):
        raise ValueError(f"need 1 <= ell <= k-1, got {ell}")
    l0 = check_vertex_set(l_end, h.n)
    r_last = check_vertex_set(r_end, h.n)
    if len(l0) != ell or len(r_last) != h.k - ell:
        raise ValueError(
            f"end sizes must be ({ell}, {h.k - ell}), got ({len(l0)}, {len(r_last)})"
        )
    l0m, rlm = mask_of(l0), mask_of(r_last)
    if l0m & rlm:
        raise ValueError("ends must be disjoint")
    if (h.n - h.k) % h.k != 0:
        raise ValueError(f"alternation cannot close: n={h.n} not a multiple of k={h.k}")
    t = h.n // h.k
    rs = h.k - ell

    if h.is_explicit:
        covered = 0
        for e in h.edges:
            covered |= mask_of(e)
        if covered != (1 << h.n) - 1:
            return SearchResult(NONE, None, 0, "isolated vertex")

    ticker = _Ticker(budget)
    blocks: list[tuple[int, ...]] = [l0]
    full = (1 << h.n) - 1

    def place(idx: int, rem: int, prev_mask: int) -> bool:
        ticker.tick()
        if idx == 2 * t - 1:
            return h.has_edge_mask(prev_mask | rlm)
        size = ell if idx % 2 == 0 else rs
        for body in _combos(rem, size):
            bm = mask_of(body)
            ticker.tick()
            if not h.has_edge_mask(prev_mask | bm):
                continue
            blocks.append(body)
            if place(idx + 1, rem ^ bm, bm):
                return True
            blocks.pop()
        return False

    try:
        if place(1, full ^ l0m ^ rlm, l0m):
            path = SegPath(h.k, ell, tuple(blocks) + (r_last,))
            return SearchResult(FOUND, path, ticker.count)
        return SearchResult(NONE, None, ticker.count, "exhausted")
    except _BudgetHit:
        return SearchResult(UNKNOWN, None, ticker.count, "budget exceeded")


# -- connectors ---------------------------------------------------------


def connector_path(
    h: Hypergraph,
    l_end: tuple[int, ...],
    r_end: tuple[int, ...],
    c: tuple[int, ...],
    ticker: Optional[_Ticker] = None,
) -> Optional[SegPath]:
    """Decide whether the 2k-set C connects (L, R): enumerate ordered
    splits of C into (R', L', R'', L'') and test the five unions."""
    k, ell = h.k, len(l_end)
    rs = k - ell
    lm, rm = mask_of(l_end), mask_of(r_end)
    cm = mask_of(c)
    for r1 in itertools.combinations(c, rs):
        r1m = mask_of(r1)
        if ticker is not None:
            ticker.tick()
        if not h.has_edge_mask(lm | r1m):
            continue
        pool1 = bits_of(cm ^ r1m)
        for l1 in itertools.combinations(pool1, ell):
            l1m = mask_of(l1)
            if ticker is not None:
                ticker.tick()
            if not h.has_edge_mask(r1m | l1m):
                continue
            pool2 = bits_of(cm ^ r1m ^ l1m)
            for r2 in itertools.combinations(pool2, rs):
                r2m = mask_of(r2)
                if ticker is not None:
                    ticker.tick()
                if not h.has_edge_mask(l1m | r2m):
                    continue
                l2m = cm ^ r1m ^ l1m ^ r2m
                l2 = bits_of(l2m)
                if not h.has_edge_mask(r2m | l2m):
                    continue
                if not h.has_edge_mask(l2m | rm):
                    continue
                return SegPath(k, ell, (l_end, r1, l1, r2, l2, r_end))
    return None


@dataclass(frozen=True)
class ConnectorCount:
    count: int
    exhausted: bool
    samples: tuple[SegPath, ...]


def count_connectors(
    h: Hypergraph,
    l_end: Iterable[int],
    r_end: Iterable[int],
    budget: SearchBudget = SearchBudget(),
    sample_cap: int = 4,
) -> ConnectorCount:
    """Number of 2k-sets admitting a block path from L to R across them.

    On budget exhaustion the count so far is returned as a lower bound
    with ``exhausted=False``.
    """
    l0 = check_vertex_set(l_end, h.n)
    r0 = check_vertex_set(r_end, h.n)
    if len(l0) + len(r0) != h.k or mask_of(l0) & mask_of(r0):
        raise ValueError("ends must be a disjoint (ell, k-ell) pair")
    used = mask_of(l0) | mask_of(r0)
    pool = [v for v in range(h.n) if not (used >> v) & 1]
    ticker = _Ticker(budget)
    count = 0
    samples: list[SegPath] = []
    try:
        for c in itertools.combinations(pool, 2 * h.k):
            got = connector_path(h, l0, r0, c, ticker)
            if got is not None:
                count += 1
                if len(samples) < sample_cap:
                    samples.append(got)
        return ConnectorCount(count, True, tuple(samples))
    except _BudgetHit:
        return ConnectorCount(count, False, tuple(samples))


# -- absorbers ----------------------------------------------------------


def is_absorber(
    h: Hypergraph,
    path: SegPath,
    l_end: Iterable[int],
    r_end: Iterable[int],
    budget: SearchBudget = SearchBudget(),
) -> bool:
    """True iff the 10k-vertex path can swallow L and R: some block path
    on V(P) + L + R has exactly P's ends."""
    l0 = check_vertex_set(l_end, h.n)
    r0 = check_vertex_set(r_end, h.n)
    ell = path.ell
    if len(l0) != ell or len(r0) != h.k - ell:
        raise ValueError("absorber target sizes must be (ell, k-ell)")
    pv = path.vertices()
    if len(pv) != 10 * h.k:
        raise ValueError(f"absorber paths span 10k={10 * h.k} vertices, got {len(pv)}")
    pm = mask_of(pv)
    if pm & (mask_of(l0) | mask_of(r0)):
        raise ValueError("L and R must be disjoint from the path")
    if mask_of(l0) & mask_of(r0):
        raise ValueError("L and R must be disjoint")
    verdict = validate_path(h, path)
    if not verdict:
        raise ValueError(f"path invalid in host hypergraph: {verdict.violation}")
    span = tuple(sorted(pv + l0 + r0))
    sub, table = h.restrict(span)
    new_of = {old: i for i, old in enumerate(table)}
    p = path if len(path.blocks[0]) == ell else path.reversed()
    end_l = tuple(sorted(new_of[v] for v in p.blocks[0]))
    end_r = tuple(sorted(new_of[v] for v in p.blocks[-1]))
    res = find_ham_path(sub, ell, end_l, end_r, budget)
    if res.status == UNKNOWN:
        raise RuntimeError("absorber decision hit its search budget")
    return res.found


# -- wrong-parity edge pairs ---------------------------------------------


def find_parity_pair(
    h: Hypergraph,
    spec: ExtremalSpec,
    ell: int,
    budget: SearchBudget = SearchBudget(),
) -> SearchResult:
    """A pair of H-edges of the wrong parity type intersecting in 0 or
    ell vertices; definitive none when the enumeration completes."""
    if h.n != spec.n or h.k != spec.k:
        raise ValueError("hypergraph and spec disagree on (n, k)")
    ticker = _Ticker(budget)
    wrong: list[int] = []
    try:
        for e in h.iter_edges():
            ticker.tick()
            em = mask_of(e)
            if eta_mask(spec, em) != spec.eta:
                for other in wrong:
                    ticker.tick()
                    inter = (other & em).bit_count()
                    if inter == 0 or inter == ell:
                        pair = (bits_of(other), bits_of(em))
                        return SearchResult(FOUND, pair, ticker.count)
                wrong.append(em)
        return SearchResult(NONE, None, ticker.count, "exhausted")
    except _BudgetHit:
        return SearchResult(UNKNOWN, None, ticker.count, "budget exceeded")
