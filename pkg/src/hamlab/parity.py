"""Parity-fixing machinery: relocating bad vertices, covering them by a
short block path inside the parity family, and spending exactly one
wrong-parity edge to flip the parity invariant to zero.

The construction is a deterministic greedy: gadgets and connectors are
always the lexicographically least admissible choice, so identical
inputs give identical paths.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .core import Budget, Hypergraph, as_budget, bits_of, comb0, mask_of
from .extremal import ExtremalSpec, eta_mask, f_parity, spec_minus
from .structures import SegPath, path_odd_matching, validate_path


class ParityObstruction(RuntimeError):
    """No wrong-parity edge is available: the graph sits inside the
    obstructed family and no parity fix exists."""


class ParityFixError(RuntimeError):
    """A construction stage found no admissible set within budget."""


@dataclass(frozen=True)
class ParityConfig:
    """Thresholds, paper defaults.

    ``alpha`` plays the closeness-derived goodness level; ``end_goodness``
    (the sqrt(2 k^k alpha) blowup) is derived from it when unset.  The
    constants assume huge n; desk instances may need looser values.
    """

    relocate_cut: Fraction = Fraction(1, 4)
    probe_cut: Fraction = Fraction(1, 5)
    end_goodness: Optional[float] = None

    def end_threshold(self, k: int, alpha) -> float:
        if self.end_goodness is not None:
            return self.end_goodness
        return float((2 * k**k * Fraction(alpha)) ** Fraction(1, 2))


@dataclass(frozen=True)
class BadVertexReport:
    threshold: Fraction
    v0: tuple[int, ...]
    v0_prime: tuple[int, ...]
    spec1: ExtremalSpec
    alpha_stars: dict = field(compare=False, repr=False, default_factory=dict)


class _GoodnessCache:
    """Memoized missing-degree ratios against a fixed (H, spec)."""

    def __init__(self, h: Hypergraph, spec: ExtremalSpec, budget: Budget):
        self.h = h
        self.spec = spec
        self.budget = budget
        self._cache: dict[int, Fraction] = {}

    def alpha_star(self, smask: int) -> Fraction:
        got = self._cache.get(smask)
        if got is not None:
            return got
        h, spec = self.h, self.spec
        size = smask.bit_count()
        rest = [v for v in range(h.n) if not (smask >> v) & 1]
        missing = 0
        for t in itertools.combinations(rest, h.k - size):
            self.budget.spend()
            em = smask | mask_of(t)
            if eta_mask(spec, em) == spec.eta and not h.has_edge_mask(em):
                missing += 1
        val = Fraction(missing, comb0(h.n - size, h.k - size))
        self._cache[smask] = val
        return val


def relocate_bad(
    h: Hypergraph,
    spec: ExtremalSpec,
    alpha,
    budget: Budget | int | None = None,
) -> BadVertexReport:
    """Vertices not alpha-good, the not-1/4-good core, and the partition
    with the core moved to the other side."""
    alpha = Fraction(alpha)
    b = as_budget(budget)
    cache = _GoodnessCache(h, spec, b)
    stars = {v: cache.alpha_star(1 << v) for v in range(h.n)}
    v0 = tuple(v for v in range(h.n) if stars[v] > alpha)
    quarter = Fraction(1, 4)
    v0p = tuple(v for v in v0 if stars[v] > quarter)
    v0p_mask = mask_of(v0p)
    a1 = tuple(
        sorted(
            [v for v in spec.a if not (v0p_mask >> v) & 1]
            + [v for v in spec.b if (v0p_mask >> v) & 1]
        )
    )
    return BadVertexReport(alpha, v0, v0p, ExtremalSpec(spec.n, spec.k, a1, spec.eta), stars)


@dataclass(frozen=True)
class CoverResult:
    path: Optional[SegPath]
    parity_choice: int

    @property
    def empty(self) -> bool:
        return self.path is None


def _in_h_and_b1(h: Hypergraph, spec1: ExtremalSpec, em: int) -> bool:
    return eta_mask(spec1, em) == spec1.eta and h.has_edge_mask(em)


def cover_bad_vertices(
    h: Hypergraph,
    spec1: ExtremalSpec,
    m_vertices: Iterable[int],
    u_vertices: Iterable[int],
    parity_choice: int,
    ell: int,
    budget: Budget | int | None = None,
    config: ParityConfig = ParityConfig(),
    alpha=Fraction(1, 100),
) -> CoverResult:
    """A block path of 2k|M| - ell vertices covering M, avoiding U, with
    every edge in the parity family, both ends (k-ell)-sets of the chosen
    parity and below the end-goodness threshold.

    Per covered vertex the path spends one gadget: two link edges sharing
    ell-1 vertices whose private parts carry the prescribed parity;
    consecutive gadgets are joined by ell-sets.
    """
    if h.k < 5:
        raise ValueError("bad-vertex covering needs k >= 5")
    if parity_choice not in (0, 1):
        raise ValueError("parity_choice must be 0 or 1")
    m_sorted = tuple(sorted(set(m_vertices)))
    u_mask = mask_of(u_vertices)
    if u_mask.bit_count() > 2 * h.k:
        raise ValueError("U may hold at most 2k vertices")
    if not m_sorted:
        return CoverResult(None, parity_choice)
    b = as_budget(budget)
    cache = _GoodnessCache(h, spec1, b)
    eps2 = config.end_threshold(h.k, alpha)
    m_mask = mask_of(m_sorted)
    rs = h.k - ell
    used = 0
    gadgets = []
    for v in m_sorted:
        gadget = _find_gadget(
            h, spec1, v, m_mask | u_mask | used, parity_choice, ell, cache, eps2, b
        )
        if gadget is None:
            raise ParityFixError(f"no admissible covering gadget for vertex {v}")
        t1, mid, t2 = gadget
        used |= mask_of(t1) | mask_of(mid) | mask_of(t2)
        gadgets.append(gadget)
    blocks: list[tuple[int, ...]] = []
    for i, (t1, mid, t2) in enumerate(gadgets):
        if i > 0:
            prev_end = blocks[-1]
            conn = _find_connector_ell(
                h, spec1, prev_end, t1, m_mask | u_mask | used, ell, b
            )
            if conn is None:
                raise ParityFixError(
                    f"no connecting {ell}-set between gadgets {i - 1} and {i}"
                )
            used |= mask_of(conn)
            blocks.append(conn)
        blocks.extend([t1, mid, t2])
    path = SegPath(h.k, ell, tuple(blocks))
    if len(path.vertices()) != 2 * h.k * len(m_sorted) - ell:
        raise ParityFixError("covering path has the wrong span")
    return CoverResult(path, parity_choice)


def _find_gadget(h, spec1, v, forbidden, parity_choice, ell, cache, eps2, b):
    """Two link edges of v sharing ell-1 vertices, private (k-ell)-parts
    of the prescribed parity, all parts parity-good; lexicographically
    least admissible pair."""
    rs = h.k - ell
    pool = [
        w for w in range(h.n) if w != v and not (forbidden >> w) & 1
    ]
    vbit = 1 << v
    buckets: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    for e in itertools.combinations(pool, h.k - 1):
        b.spend()
        em = vbit | mask_of(e)
        if not _in_h_and_b1(h, spec1, em):
            continue
        ok = True
        for t in itertools.combinations(e, rs):
            if cache.alpha_star(mask_of(t)) > eps2:
                ok = False
                break
        if not ok:
            continue
        for s in itertools.combinations(e, ell - 1):
            smask = mask_of(s)
            t = tuple(w for w in e if not (smask >> w) & 1)
            if eta_mask(spec1, mask_of(t)) != parity_choice:
                continue
            tmask = mask_of(t)
            bucket = buckets.setdefault(s, [])
            for t_prev in bucket:
                if mask_of(t_prev) & tmask:
                    continue
                mid = tuple(sorted(s + (v,)))
                return t_prev, mid, t
            bucket.append(t)
    return None


def _find_connector_ell(h, spec1, end_a, end_b, forbidden, ell, b):
    """Lexicographically least ell-set joining two same-parity ends
    inside the parity family."""
    am, bm = mask_of(end_a), mask_of(end_b)
    pool = [
        w
        for w in range(h.n)
        if not ((forbidden | am | bm) >> w) & 1
    ]
    for cand in itertools.combinations(pool, ell):
        b.spend()
        cm = mask_of(cand)
        if _in_h_and_b1(h, spec1, am | cm) and _in_h_and_b1(h, spec1, cm | bm):
            return cand
    return None


def _find_attached_set(h, spec1, size, attach_masks, forbidden, cache, good_thr, b):
    """Lexicographically least ``size``-set X avoiding ``forbidden`` with
    X + a in the parity family's H-edges for every attach mask a, and X
    parity-good below ``good_thr`` (skipped when None)."""
    pool = [w for w in range(h.n) if not (forbidden >> w) & 1]
    for cand in itertools.combinations(pool, size):
        b.spend()
        cm = mask_of(cand)
        if any(not _in_h_and_b1(h, spec1, cm | am) for am in attach_masks):
            continue
        if good_thr is not None and cache.alpha_star(cm) > good_thr:
            continue
        return cand
    return None


@dataclass(frozen=True)
class ParityFixResult:
    path: SegPath
    case: str
    removed: tuple[int, ...]
    residual_spec: ExtremalSpec
    keep_table: tuple[int, ...]
    residual_f: int
    wrong_edges_in_view: int
    size_bound_ok: bool
    bad_report: BadVertexReport
    notes: tuple[str, ...] = ()


def _first_bad_set(h, spec1, size, cut, cache, b):
    for cand in itertools.combinations(range(h.n), size):
        b.spend()
        if cache.alpha_star(mask_of(cand)) > cut:
            return cand
    return None


def _iter_wrong_pairs(h, spec1, ell, b):
    """Wrong-parity H-edge pairs meeting in 0 or ell vertices, in
    discovery order."""
    wrong: list[int] = []
    for e in h.iter_edges(b):
        em = mask_of(e)
        if eta_mask(spec1, em) == spec1.eta:
            continue
        for other in wrong:
            inter = (other & em).bit_count()
            if inter == 0 or inter == ell:
                yield bits_of(other), e
        wrong.append(em)


def parity_fix(
    h: Hypergraph,
    spec: ExtremalSpec,
    ell: int,
    alpha=Fraction(1, 100),
    budget: Budget | int | None = None,
    config: ParityConfig = ParityConfig(),
) -> ParityFixResult:
    """Build the short path that removes all bad vertices and leaves a
    residual with parity invariant zero.

    Case 1 spends no wrong-parity edge (the relocated invariant is
    already zero); otherwise exactly one wrong-parity edge enters the
    odd-position matching view, flipping the invariant.
    """
    if not (h.k / 2 <= ell <= h.k - 1):
        raise ValueError(f"need k/2 <= ell <= k-1, got ell={ell}, k={h.k}")
    b = as_budget(budget)
    report = relocate_bad(h, spec, alpha, b)
    spec1 = report.spec1
    cache = _GoodnessCache(h, spec1, b)
    eps2 = config.end_threshold(h.k, alpha)
    f1 = f_parity(spec1).value
    notes: list[str] = []
    if f1 == 0:
        path = _case1_path(h, spec1, report, ell, cache, eps2, b, config, alpha)
        case = "case1"
    else:
        path, case, extra = _case2_path(
            h, spec1, report, ell, cache, eps2, b, config, alpha
        )
        notes.extend(extra)
    verdict = validate_path(h, path)
    if not verdict:
        raise ParityFixError(f"constructed path fails validation: {verdict.violation}")
    removed = tuple(sorted(v for blk in path.blocks[1:-1] for v in blk))
    residual = spec_minus(spec1, removed)
    keep = tuple(v for v in range(h.n) if v not in set(removed))
    rf = f_parity(residual).value
    wrong = sum(
        1
        for e in path_odd_matching(path).edges
        if eta_mask(spec1, mask_of(e)) != spec1.eta
    )
    expected_wrong = 0 if case == "case1" else 1
    if wrong != expected_wrong:
        raise ParityFixError(
            f"{case} path carries {wrong} wrong-parity edges in the odd matching view"
        )
    if rf != 0:
        raise ParityFixError(f"residual parity invariant is {rf}, expected 0")
    end_l, end_r = path.ends
    if (eta_mask(spec1, mask_of(end_l)) + eta_mask(spec1, mask_of(end_r))) % 2 != spec1.eta:
        raise ParityFixError("path ends do not union to a parity-family edge")
    return ParityFixResult(
        path=path,
        case=case,
        removed=removed,
        residual_spec=residual,
        keep_table=keep,
        residual_f=rf,
        wrong_edges_in_view=wrong,
        size_bound_ok=len(path.vertices()) <= 0.05 * h.n,
        bad_report=report,
        notes=tuple(notes),
    )


def _case1_path(h, spec1, report, ell, cache, eps2, b, config, alpha):
    cover = cover_bad_vertices(
        h, spec1, report.v0, (), 0, ell, b, config, alpha
    )
    if cover.empty:
        # no bad vertices: the minimal path is a single good parity edge
        r_end = _find_attached_set(h, spec1, h.k - ell, (), 0, cache, eps2, b)
        if r_end is None:
            raise ParityFixError("no parity-good (k-ell)-set available")
        l_end = _find_attached_set(
            h, spec1, ell, (mask_of(r_end),), mask_of(r_end), cache, eps2, b
        )
        if l_end is None:
            raise ParityFixError("no good edge for the trivial case-1 path")
        return SegPath(h.k, ell, (l_end, r_end))
    claim = cover.path
    first = claim.blocks[0]
    forbidden = mask_of(claim.vertices())
    l_end = _find_attached_set(
        h, spec1, ell, (mask_of(first),), forbidden, cache, eps2, b
    )
    if l_end is None:
        raise ParityFixError("no good ell-set attaches to the covering path")
    return SegPath(h.k, ell, (l_end,) + claim.blocks)


def _finish_tail(h, spec1, report, specials_mask, attach_r, parity_choice, ell, cache, eps2, b, config, alpha):
    """Covering path for the leftover bad vertices plus the ell-connector
    from ``attach_r`` into it; degenerates to a fresh good end when no
    bad vertices remain.  Returns (tail_blocks, used_mask)."""
    m_left = tuple(v for v in report.v0 if not (specials_mask >> v) & 1)
    cover = cover_bad_vertices(
        h, spec1, m_left, bits_of(specials_mask), parity_choice, ell, b, config, alpha
    )
    if not cover.empty:
        claim = cover.path
        forbidden = specials_mask | mask_of(claim.vertices())
        conn = _find_attached_set(
            h,
            spec1,
            ell,
            (attach_r, mask_of(claim.blocks[0])),
            forbidden,
            cache,
            None,
            b,
        )
        if conn is None:
            raise ParityFixError("no ell-set joins the special edges to the cover")
        return (conn,) + claim.blocks, forbidden | mask_of(conn)
    conn = _find_attached_set(h, spec1, ell, (attach_r,), specials_mask, cache, None, b)
    if conn is None:
        raise ParityFixError("no ell-set attaches to the wrong-parity block")
    used = specials_mask | mask_of(conn)
    r_term = _find_attached_set(
        h, spec1, h.k - ell, (mask_of(conn),), used, cache, eps2, b
    )
    if r_term is None:
        raise ParityFixError("no terminal (k-ell)-set available")
    return (conn, r_term), used | mask_of(r_term)


def _case2_path(h, spec1, report, ell, cache, eps2, b, config, alpha):
    rs = h.k - ell
    notes: list[str] = []
    bad_l = _first_bad_set(h, spec1, ell, config.probe_cut, cache, b)
    if bad_l is not None:
        lm = mask_of(bad_l)
        r1 = r2 = None
        rest = [v for v in range(h.n) if not (lm >> v) & 1]
        for cand in itertools.combinations(rest, rs):
            b.spend()
            cm = mask_of(cand)
            em = lm | cm
            if eta_mask(spec1, em) == spec1.eta or not h.has_edge_mask(em):
                continue
            if cache.alpha_star(cm) > eps2:
                continue
            if r1 is None:
                r1 = cand
            elif not (mask_of(r1) & cm):
                r2 = cand
                break
        if r1 is None or r2 is None:
            raise ParityFixError(
                "a not-1/5-good ell-set exists but lacks two disjoint good "
                "wrong-parity completions"
            )
        path = _assemble_shared(
            h, spec1, report, bad_l, r1, r2, ell, cache, eps2, b, config, alpha
        )
        return path, "case2.1", notes
    bad_r = _first_bad_set(h, spec1, rs, config.probe_cut, cache, b)
    if bad_r is not None:
        notes.append(
            "a not-1/5-good (k-ell)-set exists without a bad ell-set; "
            "falling through to the edge-pair case"
        )
    found_any = False
    for e1, e2 in _iter_wrong_pairs(h, spec1, ell, b):
        found_any = True
        inter = mask_of(e1) & mask_of(e2)
        try:
            if inter.bit_count() == ell:
                shared = bits_of(inter)
                r1 = tuple(v for v in e1 if not (inter >> v) & 1)
                r2 = tuple(v for v in e2 if not (inter >> v) & 1)
                path = _assemble_shared(
                    h, spec1, report, shared, r1, r2, ell, cache, eps2, b, config, alpha
                )
            else:
                path = _assemble_disjoint(
                    h, spec1, report, e1, e2, ell, cache, eps2, b, config, alpha
                )
        except ParityFixError:
            continue
        return path, "case2.2", notes
    if not found_any:
        has_wrong = any(
            eta_mask(spec1, mask_of(e)) != spec1.eta for e in h.iter_edges(b)
        )
        if not has_wrong:
            raise ParityObstruction(
                "parity obstruction: every edge lies in the parity family and "
                "the invariant is 1"
            )
    raise ParityFixError("no wrong-parity edge pair admits the construction")


def _assemble_shared(h, spec1, report, l_star, r1, r2, ell, cache, eps2, b, config, alpha):
    """Path L1 R1* L* R2* [tail] using the two wrong-parity edges
    L* + R1* and L* + R2*; exactly the first enters the odd matching."""
    specials = mask_of(l_star) | mask_of(r1) | mask_of(r2)
    parity_choice = eta_mask(spec1, mask_of(r1))
    tail, used = _finish_tail(
        h, spec1, report, specials, mask_of(r2), parity_choice, ell, cache, eps2, b, config, alpha
    )
    l1 = _find_attached_set(h, spec1, ell, (mask_of(r1),), used, cache, eps2, b)
    if l1 is None:
        raise ParityFixError("no good ell-set attaches to the first wrong edge")
    return SegPath(h.k, ell, (l1, r1, l_star, r2) + tail)


def _assemble_disjoint(h, spec1, report, e1, e2, ell, cache, eps2, b, config, alpha):
    """Path L4 R1* L1* R3 L2* R2* [tail] from two disjoint wrong-parity
    edges split so the R-parts share a parity type."""
    rs = h.k - ell
    for r1 in itertools.combinations(e1, rs):
        l1 = tuple(v for v in e1 if v not in set(r1))
        for r2 in itertools.combinations(e2, rs):
            if eta_mask(spec1, mask_of(r2)) != eta_mask(spec1, mask_of(r1)):
                continue
            l2 = tuple(v for v in e2 if v not in set(r2))
            specials = mask_of(e1) | mask_of(e2)
            parity_choice = eta_mask(spec1, mask_of(r1))
            try:
                tail, used = _finish_tail(
                    h, spec1, report, specials, mask_of(r2), parity_choice,
                    ell, cache, eps2, b, config, alpha,
                )
                r3 = _find_attached_set(
                    h, spec1, rs, (mask_of(l1), mask_of(l2)), used, cache, None, b
                )
                if r3 is None:
                    raise ParityFixError("no (k-ell)-set joins the two wrong edges")
                used |= mask_of(r3)
                l4 = _find_attached_set(
                    h, spec1, ell, (mask_of(r1),), used, cache, eps2, b
                )
                if l4 is None:
                    raise ParityFixError("no good ell-set attaches to the first wrong edge")
            except ParityFixError:
                continue
            return SegPath(h.k, ell, (l4, r1, l1, r3, l2, r2) + tail)
    raise ParityFixError("no parity-compatible split of the disjoint edge pair")


# -- planted instances ---------------------------------------------------


def plant_parity_pair(
    spec: ExtremalSpec, ell: int, seed: int, intersection: int = 0
) -> tuple[Hypergraph, tuple[tuple[int, ...], tuple[int, ...]]]:
    """The parity family plus two planted wrong-parity edges meeting in
    0 or ell vertices, with a parity-compatible split guaranteed."""
    import random as _random

    if intersection not in (0, ell):
        raise ValueError("planted pairs intersect in 0 or ell vertices")
    rng = _random.Random(seed)
    k = spec.k
    c = 2 if spec.eta == 1 else 1  # wrong parity: c != eta (mod 2)
    a_pool = list(spec.a)
    b_pool = list(spec.b)
    if intersection == 0:
        a_pick = rng.sample(a_pool, 2 * c)
        b_pick = rng.sample(b_pool, 2 * (k - c))
        e1 = tuple(sorted(a_pick[:c] + b_pick[: k - c]))
        e2 = tuple(sorted(a_pick[c:] + b_pick[k - c:]))
    else:
        # shared ell-set with c A-vertices; private (k-ell)-parts in B
        if ell < c:
            raise ValueError("shared planting needs ell >= wrong-parity count")
        a_pick = rng.sample(a_pool, c)
        b_pick = rng.sample(b_pool, (ell - c) + 2 * (k - ell))
        shared = tuple(sorted(a_pick + b_pick[: ell - c]))
        t1 = b_pick[ell - c: ell - c + (k - ell)]
        t2 = b_pick[ell - c + (k - ell):]
        e1 = tuple(sorted(shared + tuple(t1)))
        e2 = tuple(sorted(shared + tuple(t2)))
    base_spec = spec
    planted = frozenset((mask_of(e1), mask_of(e2)))

    def pred(mask: int, _s=base_spec, _p=planted) -> bool:
        return mask in _p or eta_mask(_s, mask) == _s.eta

    h = Hypergraph.from_predicate(spec.n, spec.k, pred, structure="pred")
    return h, (e1, e2)
