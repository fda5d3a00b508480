"""The constructive extremal-case core: partition planning into two
complete-k-partite boxes, an inductive Hamilton block-path builder for
dense k-partite graphs (random gadget family, spine recursion, two Hall
matchings), a greedy tight-path engine, and the end-to-end stability
path that glues everything.

Degrees and goodness in the k-partite setting are normalized by powers
of the part size.  Every randomized step draws from a caller-supplied
seeded generator; retries re-derive deterministic sub-streams, so a
(seed, config) pair pins the output exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, sqrt
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .core import Hypergraph, bits_of, mask_of
from .extremal import ExtremalSpec, eta_mask, f_parity
from .parity import ParityObstruction
from .search import SearchBudget, find_ham_path
from .structures import SegPath, validate_path


class KPartiteError(RuntimeError):
    """The engine exhausted its retries or met an infeasible stage."""


class HallFailure(KPartiteError):
    """A required perfect matching does not exist; carries a deficiency
    certificate: a left set whose neighborhood is smaller than itself."""

    def __init__(self, stage: str, deficient: tuple, neighborhood: tuple):
        super().__init__(
            f"Hall condition fails at {stage}: |N(S)|={len(neighborhood)} < |S|={len(deficient)}"
        )
        self.stage = stage
        self.deficient = deficient
        self.neighborhood = neighborhood


@dataclass(frozen=True)
class KPartiteConfig:
    alpha: float = 0.02
    min_part_recursive: int = 8
    direct_total: int = 24
    retries: int = 64
    triple_tries: int = 256
    q_divisor: int = 16
    projection_divisor: int = 128
    search_nodes: int = 5_000_000


class KPartiteRestriction:
    """Edge family inside the complete k-partite k-graph on given parts,
    stored as a deletion predicate over global-label bitmasks."""

    def __init__(
        self,
        parts: Sequence[Sequence[int]],
        pred: Optional[Callable[[int], bool]] = None,
        deleted: Optional[frozenset] = None,
    ):
        self.parts = tuple(tuple(sorted(p)) for p in parts)
        if len({len(p) for p in self.parts}) != 1:
            raise ValueError("parts must have equal sizes")
        self.k = len(self.parts)
        self.part_size = len(self.parts[0])
        seen = 0
        self.part_of: dict[int, int] = {}
        for i, p in enumerate(self.parts):
            pm = mask_of(p)
            if pm & seen:
                raise ValueError("parts must be pairwise disjoint")
            seen |= pm
            for v in p:
                self.part_of[v] = i
        self.span_mask = seen
        self._deleted = deleted
        self._pred = pred

    @classmethod
    def complete(cls, parts) -> "KPartiteRestriction":
        return cls(parts, deleted=frozenset())

    @classmethod
    def with_deletions(cls, parts, deleted_edges) -> "KPartiteRestriction":
        return cls(parts, deleted=frozenset(mask_of(e) for e in deleted_edges))

    @classmethod
    def from_hypergraph(cls, h: Hypergraph, parts) -> "KPartiteRestriction":
        return cls(parts, pred=h.has_edge_mask)

    def has_edge_mask(self, em: int) -> bool:
        if self._deleted is not None:
            return em not in self._deleted
        return bool(self._pred(em))

    def is_transversal(self, vertices) -> bool:
        seen = set()
        for v in vertices:
            i = self.part_of.get(v)
            if i is None or i in seen:
                return False
            seen.add(i)
        return True

    def as_hypergraph(self, n_global: int) -> Hypergraph:
        def pred(em: int, _self=self) -> bool:
            vs = bits_of(em)
            return _self.is_transversal(vs) and _self.has_edge_mask(em)

        return Hypergraph.from_predicate(
            n_global, self.k, pred, structure="kpartite"
        )

    def missing_count(self, jmask: int) -> int:
        """deg in the complement: transversal completions of J not in F."""
        used_parts = {self.part_of[v] for v in bits_of(jmask)}
        free = [p for i, p in enumerate(self.parts) if i not in used_parts]
        missing = 0
        for combo in itertools.product(*free):
            em = jmask | mask_of(combo)
            if not self.has_edge_mask(em):
                missing += 1
        return missing

    def restrict_parts(self, sub_parts) -> "KPartiteRestriction":
        if self._deleted is not None:
            keep = mask_of(v for p in sub_parts for v in p)
            kept_deleted = frozenset(m for m in self._deleted if m & keep == m)
            return KPartiteRestriction(sub_parts, deleted=kept_deleted)
        return KPartiteRestriction(sub_parts, pred=self._pred)


class _BoxGoodness:
    """Memoized missing-count goodness with power normalization."""

    def __init__(self, f: KPartiteRestriction):
        self.f = f
        self._cache: dict[int, int] = {}

    def missing(self, jmask: int) -> int:
        got = self._cache.get(jmask)
        if got is None:
            got = self.f.missing_count(jmask)
            self._cache[jmask] = got
        return got

    def is_good(self, jmask: int, alpha: float) -> bool:
        j = jmask.bit_count()
        return self.missing(jmask) <= alpha * self.f.part_size ** (self.f.k - j)

    def is_typical(self, vertices, alpha: float) -> bool:
        vs = tuple(vertices)
        for size in range(1, len(vs) + 1):
            for sub in itertools.combinations(vs, size):
                if not self.is_good(mask_of(sub), alpha):
                    return False
        return True


# -- bipartite maximum matching with deficiency certificates -------------


def max_bipartite_matching(
    adj: Sequence[Sequence[int]], n_right: int
) -> tuple[list[int], Optional[tuple[tuple[int, ...], tuple[int, ...]]]]:
    """Augmenting-path maximum matching, deterministic vertex order.

    Returns (match_left, deficiency): match_left[i] is the right vertex
    matched to left i or -1.  When the matching is not perfect on the
    left, deficiency holds (S, N(S)) with |N(S)| < |S|.
    """
    n_left = len(adj)
    match_left = [-1] * n_left
    match_right = [-1] * n_right

    def try_augment(u: int, seen: list[bool]) -> bool:
        for v in adj[u]:
            if seen[v]:
                continue
            seen[v] = True
            if match_right[v] == -1 or try_augment(match_right[v], seen):
                match_left[u] = v
                match_right[v] = u
                return True
        return False

    for u in range(n_left):
        try_augment(u, [False] * n_right)
    if all(m != -1 for m in match_left):
        return match_left, None
    # deficiency: left vertices reachable by alternating paths from an
    # unmatched left vertex form S with N(S) fully matched and |N(S)| < |S|
    s_set: set[int] = set()
    n_set: set[int] = set()
    queue = [u for u in range(n_left) if match_left[u] == -1]
    s_set.update(queue)
    while queue:
        u = queue.pop()
        for v in adj[u]:
            if v not in n_set:
                n_set.add(v)
                w = match_right[v]
                if w != -1 and w not in s_set:
                    s_set.add(w)
                    queue.append(w)
    return match_left, (tuple(sorted(s_set)), tuple(sorted(n_set)))


# -- bipartite base case --------------------------------------------------


def ham_path_bipartite_base(
    f: KPartiteRestriction,
    start: int,
    end: int,
    budget_nodes: int = 2_000_000,
) -> SegPath:
    """Hamilton path alternating the two parts with prescribed endpoints.

    Rotation-extension first; exhaustive DFS with a node budget as the
    fallback.  Dense instances (the only supported regime) fall to the
    heuristic almost always.
    """
    if f.k != 2:
        raise ValueError("base case needs exactly two parts")
    xs, ys = f.parts
    if f.part_of.get(start) == f.part_of.get(end):
        raise ValueError("endpoints must lie in opposite parts")
    if f.part_of[start] == 1:
        xs, ys = ys, xs
    m = len(xs)
    x_idx = {v: i for i, v in enumerate(xs)}
    y_idx = {v: i for i, v in enumerate(ys)}
    adj_x = [
        [j for j, w in enumerate(ys) if f.has_edge_mask((1 << v) | (1 << w))]
        for v in xs
    ]
    adj_y = [
        [i for i, v in enumerate(xs) if f.has_edge_mask((1 << v) | (1 << w))]
        for w in ys
    ]
    s, t = x_idx[start], y_idx[end]
    order = _rotation_extension(adj_x, adj_y, m, s, t)
    if order is None:
        order = _bipartite_dfs(adj_x, adj_y, m, s, t, budget_nodes)
    if order is None:
        raise KPartiteError("bipartite base found no Hamilton path within budget")
    blocks = tuple(
        (xs[v],) if i % 2 == 0 else (ys[v],) for i, v in enumerate(order)
    )
    return SegPath(2, 1, blocks)


def _rotation_extension(adj_x, adj_y, m, s, t) -> Optional[list[int]]:
    """Grow a path from s by greedy extension and end rotations until it
    spans everything but t, then close into t."""
    if m == 1:
        return [s, t] if t in adj_x[s] else None
    path = [s]  # alternating: even positions X, odd positions Y
    on_path_x = {s}
    on_path_y: set[int] = set()
    for _ in range(4 * m * m + 16):
        end = path[-1]
        end_is_x = len(path) % 2 == 1
        nbrs = adj_x[end] if end_is_x else adj_y[end]
        used = on_path_y if end_is_x else on_path_x
        ext = next(
            (w for w in nbrs if w not in used and not (not end_is_x and w == s)
             and not (end_is_x and w == t and len(path) < 2 * m - 1)),
            None,
        )
        if ext is not None:
            path.append(ext)
            (on_path_y if end_is_x else on_path_x).add(ext)
            if len(path) == 2 * m and path[-1] == t:
                return path
            continue
        # rotate: an end-neighbor w at path position i flips the tail
        rotated = False
        for w in nbrs:
            pos_list = path[1::2] if end_is_x else path[0::2]
            try:
                idx_in = pos_list.index(w)
            except ValueError:
                continue
            i = 2 * idx_in + (1 if end_is_x else 0)
            if i + 1 >= len(path) - 1:
                continue
            path = path[: i + 1] + path[i + 1:][::-1]
            rotated = True
            break
        if not rotated:
            return None
        if len(path) == 2 * m and path[-1] == t:
            return path
    return None


def _bipartite_dfs(adj_x, adj_y, m, s, t, budget_nodes) -> Optional[list[int]]:
    nodes = 0
    path = [s]
    used_x = 1 << s
    used_y = 0

    def rec(used_x: int, used_y: int) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > budget_nodes:
            raise KPartiteError("bipartite DFS budget exceeded")
        if len(path) == 2 * m:
            return path[-1] == t
        end = path[-1]
        end_is_x = len(path) % 2 == 1
        if end_is_x:
            cands = sorted(adj_x[end], key=lambda w: len(adj_y[w]))
            for w in cands:
                if (used_y >> w) & 1 or (w == t and len(path) != 2 * m - 1):
                    continue
                path.append(w)
                if rec(used_x, used_y | (1 << w)):
                    return True
                path.pop()
        else:
            cands = sorted(adj_y[end], key=lambda w: len(adj_x[w]))
            for w in cands:
                if (used_x >> w) & 1:
                    continue
                path.append(w)
                if rec(used_x | (1 << w), used_y):
                    return True
                path.pop()
        return False

    if rec(used_x, used_y):
        return path
    return None


# -- the inductive k-partite Hamilton path engine -------------------------


def build_ham_path_kpartite(
    f: KPartiteRestriction,
    ell: int,
    l_end: Iterable[int],
    r_end: Iterable[int],
    rng: np.random.Generator,
    budget: SearchBudget = SearchBudget(),
    config: KPartiteConfig = KPartiteConfig(),
) -> SegPath:
    """Hamilton (ell, k-ell) block path of F with ends exactly (L, R).

    Small instances fall to exhaustive search; large ones follow the
    randomized gadget construction: sample a family of L-R?-L triples
    covering every last-part vertex, recurse on k-1 parts for the spine,
    and stitch the last part in by two perfect matchings.
    """
    k = f.k
    if not (1 <= ell <= k - 1):
        raise ValueError(f"need 1 <= ell <= k-1, got ell={ell}")
    l_t = tuple(sorted(l_end))
    r_t = tuple(sorted(r_end))
    if len(l_t) != ell or len(r_t) != k - ell:
        raise ValueError("end sizes must be (ell, k-ell)")
    if not f.is_transversal(l_t + r_t):
        raise ValueError("ends must occupy each part exactly once")
    if ell > k - ell:
        mirrored = build_ham_path_kpartite(f, k - ell, r_t, l_t, rng, budget, config)
        return SegPath(k, ell, tuple(reversed(mirrored.blocks)))
    if k == 2:
        return ham_path_bipartite_base(f, l_t[0], r_t[0], config.search_nodes)
    n = f.part_size
    if n < config.min_part_recursive or k * n <= config.direct_total:
        return _direct_ham_path(f, ell, l_t, r_t, config)
    last_err: Optional[Exception] = None
    for attempt in range(config.retries):
        sub = np.random.default_rng(rng.integers(2**63))
        try:
            return _recursive_ham_path(f, ell, l_t, r_t, sub, budget, config)
        except KPartiteError as err:
            last_err = err
    raise KPartiteError(
        f"k-partite engine failed after {config.retries} retries: {last_err}"
    )


def _direct_ham_path(f, ell, l_t, r_t, config) -> SegPath:
    span = tuple(sorted(v for p in f.parts for v in p))
    local = {v: i for i, v in enumerate(span)}
    back = dict(enumerate(span))

    def pred(em: int, _f=f, _back=back) -> bool:
        gm = mask_of(_back[i] for i in bits_of(em))
        vs = bits_of(gm)
        return _f.is_transversal(vs) and _f.has_edge_mask(gm)

    h_local = Hypergraph.from_predicate(len(span), f.k, pred, structure="kpartite")
    res = find_ham_path(
        h_local,
        ell,
        tuple(local[v] for v in l_t),
        tuple(local[v] for v in r_t),
        SearchBudget(nodes=config.search_nodes),
    )
    if res.status == "unknown":
        raise KPartiteError("direct path search hit its node budget")
    if not res.found:
        raise KPartiteError("no Hamilton block path exists (exhausted)")
    blocks = tuple(tuple(sorted(back[i] for i in b)) for b in res.witness.blocks)
    return SegPath(f.k, ell, blocks)


def _pick_transversal(parts_pool, rng) -> Optional[tuple[int, ...]]:
    picked = []
    for pool in parts_pool:
        if not pool:
            return None
        picked.append(pool[int(rng.integers(len(pool)))])
    return tuple(sorted(picked))


def _greedy_transversal(parts_pool, ok: Callable[[tuple[int, ...]], bool]):
    """Lexicographically least transversal passing ``ok``."""
    for combo in itertools.product(*parts_pool):
        cand = tuple(sorted(combo))
        if ok(cand):
            return cand
    return None


def _recursive_ham_path(f, ell, l_t, r_t, rng, budget, config) -> SegPath:
    k, n = f.k, f.part_size
    good = _BoxGoodness(f)
    alpha = config.alpha
    alpha_p = sqrt(2**k * alpha)
    # reorder parts: L's parts first, then R's with the designated last part
    l_parts = sorted(f.part_of[v] for v in l_t)
    r_parts = sorted(f.part_of[v] for v in r_t)
    xk = r_parts[-1]
    mid_parts = [i for i in r_parts if i != xk]
    order = l_parts + mid_parts + [xk]
    parts = [f.parts[i] for i in order]
    lp = parts[:ell]                       # L-side parts
    rp_minus = parts[ell:k - 1]            # R-side parts without the last
    xk_part = parts[k - 1]
    lr_mask = mask_of(l_t) | mask_of(r_t)
    q = max(1, n // (config.q_divisor * k))

    # 1. gadget family: q disjoint triples (La, R-, Lb) avoiding L and R,
    # every last-part vertex compatible with at least ceil(q/2) of them
    need_cover = ceil(q / 2)
    xk_free = [x for x in xk_part if not (lr_mask >> x) & 1]
    triples = None
    for _ in range(config.triple_tries):
        cand = _sample_triples(
            f, lp, rp_minus, lr_mask, q, rng, good, alpha_p
        )
        if cand is None:
            continue
        cover = _triple_coverage(f, cand, xk_free)
        if min(cover.values()) >= need_cover:
            triples = cand
            break
    if triples is None:
        raise KPartiteError("gadget sampling found no covering triple family")
    used = lr_mask
    for la, rm, lb in triples:
        used |= mask_of(la) | mask_of(rm) | mask_of(lb)

    # 2. connectors S_i joining Lb_i -> La_{i+1}, then (L0, S_0) closing
    # R -> L0 -> S_0 -> La_1; connectors live in the full R-side (with x_k)
    connectors: list[tuple[int, ...]] = []
    for i in range(q - 1):
        prev_lb = triples[i][2]
        next_la = triples[i + 1][0]
        pools = [
            [v for v in p if not (used >> v) & 1] for p in rp_minus + [xk_part]
        ]
        conn = _greedy_transversal(
            pools,
            lambda c: f.has_edge_mask(mask_of(prev_lb) | mask_of(c))
            and f.has_edge_mask(mask_of(c) | mask_of(next_la)),
        )
        if conn is None:
            raise KPartiteError(f"no connector between gadgets {i} and {i + 1}")
        used |= mask_of(conn)
        connectors.append(conn)
    l0_r1 = _find_l0_r1(f, lp, rp_minus + [xk_part], used, r_t, triples[0][0])
    if l0_r1 is None:
        raise KPartiteError("no (L0, R1) pair attaches the end R to the gadgets")
    l0, r1 = l0_r1
    used |= mask_of(l0) | mask_of(r1)

    # 3. reduced parts and the projected (k-1)-graph of well-covered sets;
    # the end L stays inside them (only R and the gadget family leave)
    reduced_used = used & ~mask_of(l_t)
    sub_parts = [
        tuple(v for v in p if not (reduced_used >> v) & 1) for p in parts[: k - 1]
    ]
    m_red = len(sub_parts[0])
    if any(len(p) != m_red for p in sub_parts) or m_red < 1:
        raise KPartiteError("reduced parts went unbalanced")
    cap = n // (config.projection_divisor * k)
    proj = _project_family(f, sub_parts, xk_part, cap)
    spine_r = _find_spine_end(
        f, proj, sub_parts, ell, triples[-1][2], good, alpha_p
    )
    if spine_r is None:
        raise KPartiteError("no typical reduced end next to the last gadget")

    # 4. recurse for the spine on k-1 parts
    spine = build_ham_path_kpartite(
        proj, ell, l_t, spine_r, rng, budget, config
    )
    spine_blocks = tuple(reversed(spine.blocks))  # R- ... L orientation

    # 5. two matchings insert the last part: the q triple slots and the
    # spine slots
    spine_rs = spine_blocks[0::2]
    spine_ls = spine_blocks[1::2]
    prev_ls = (triples[-1][2],) + spine_ls[:-1]
    xk_avail = sorted(v for v in xk_part if not (used >> v) & 1)
    adj_rows = []
    for x in xk_avail:
        row = 0
        for j, rm in enumerate(spine_rs):
            e1 = mask_of(prev_ls[j]) | mask_of(rm) | (1 << x)
            e2 = (1 << x) | mask_of(rm) | mask_of(spine_ls[j])
            if f.has_edge_mask(e1) and f.has_edge_mask(e2):
                row |= 1 << j
        adj_rows.append(row)
    half = len(spine_rs) / 2
    low = [i for i, row in enumerate(adj_rows) if row.bit_count() < half]
    if len(low) > q:
        raise KPartiteError("too many last-part vertices see under half the spine")
    y_idx = low + [i for i in range(len(xk_avail)) if i not in set(low)][: q - len(low)]
    y_idx = sorted(y_idx[:q])
    z_idx = [i for i in range(len(xk_avail)) if i not in set(y_idx)]
    if len(z_idx) != len(spine_rs):
        raise KPartiteError("slot counts for the spine matching went off balance")

    # matching Y -> triple slots
    adj_y = []
    for i in y_idx:
        x = xk_avail[i]
        row = []
        for j, (la, rm, lb) in enumerate(triples):
            e1 = mask_of(la) | mask_of(rm) | (1 << x)
            e2 = (1 << x) | mask_of(rm) | mask_of(lb)
            if f.has_edge_mask(e1) and f.has_edge_mask(e2):
                row.append(j)
        adj_y.append(row)
    match_y, defect = max_bipartite_matching(adj_y, q)
    if defect is not None:
        raise HallFailure(
            "triple-slot matching",
            tuple(xk_avail[y_idx[i]] for i in defect[0]),
            defect[1],
        )
    # matching Z -> spine slots
    adj_z = [
        [j for j in range(len(spine_rs)) if (adj_rows[i] >> j) & 1] for i in z_idx
    ]
    match_z, defect = max_bipartite_matching(adj_z, len(spine_rs))
    if defect is not None:
        raise HallFailure(
            "spine matching",
            tuple(xk_avail[z_idx[i]] for i in defect[0]),
            defect[1],
        )

    # 6. splice: R L0 R1 La1 (R-2 y) Lb1 S1 La2 ... Lbq [spine with z's] ... L
    slot_x = [None] * q
    for i, j in enumerate(match_y):
        slot_x[j] = xk_avail[y_idx[i]]
    blocks: list[tuple[int, ...]] = [r_t, l0, r1]
    for j, (la, rm, lb) in enumerate(triples):
        blocks.append(la)
        blocks.append(tuple(sorted(rm + (slot_x[j],))))
        blocks.append(lb)
        if j < q - 1:
            blocks.append(connectors[j])
    spine_x = [None] * len(spine_rs)
    for i, j in enumerate(match_z):
        spine_x[j] = xk_avail[z_idx[i]]
    for j, rm in enumerate(spine_rs):
        blocks.append(tuple(sorted(rm + (spine_x[j],))))
        blocks.append(spine_ls[j])
    path = SegPath(k, ell, tuple(reversed(blocks)))
    host = f.as_hypergraph(max(v for p in f.parts for v in p) + 1)
    verdict = validate_path(host, path)
    if not verdict:
        raise KPartiteError(f"assembled path fails validation: {verdict.violation}")
    return path


def _sample_triples(f, lp, rp_minus, lr_mask, q, rng, good, alpha_p):
    """q disjoint (La, R-, Lb) triples with parity-good pieces."""
    used = lr_mask
    out = []
    for _ in range(q):
        got = None
        for _try in range(64):
            la = _pick_transversal(
                [[v for v in p if not (used >> v) & 1] for p in lp], rng
            )
            if la is None:
                return None
            rm = _pick_transversal(
                [
                    [v for v in p if not ((used | mask_of(la)) >> v) & 1]
                    for p in rp_minus
                ],
                rng,
            )
            if rm is None and rp_minus:
                return None
            rm = rm or ()
            lb = _pick_transversal(
                [
                    [
                        v
                        for v in p
                        if not ((used | mask_of(la) | mask_of(rm)) >> v) & 1
                    ]
                    for p in lp
                ],
                rng,
            )
            if lb is None:
                return None
            la_rm = mask_of(la) | mask_of(rm)
            rm_lb = mask_of(rm) | mask_of(lb)
            if not (
                good.is_good(la_rm, alpha_p)
                and good.is_good(rm_lb, alpha_p)
                and good.is_good(mask_of(la), alpha_p)
                and good.is_good(mask_of(lb), alpha_p)
            ):
                continue
            got = (la, rm, lb)
            break
        if got is None:
            return None
        used |= mask_of(got[0]) | mask_of(got[1]) | mask_of(got[2])
        out.append(got)
    return out


def _triple_coverage(f, triples, xk_free):
    cover = {x: 0 for x in xk_free}
    for la, rm, lb in triples:
        for x in xk_free:
            e1 = mask_of(la) | mask_of(rm) | (1 << x)
            e2 = (1 << x) | mask_of(rm) | mask_of(lb)
            if f.has_edge_mask(e1) and f.has_edge_mask(e2):
                cover[x] += 1
    return cover


def _find_l0_r1(f, lp, rp_full, used, r_t, la1):
    """(L0, R1) with R+L0, L0+R1, R1+La1 all edges, greedily least."""
    l_pools = [[v for v in p if not (used >> v) & 1] for p in lp]
    for l0 in itertools.product(*l_pools):
        l0_t = tuple(sorted(l0))
        if not f.has_edge_mask(mask_of(r_t) | mask_of(l0_t)):
            continue
        used2 = used | mask_of(l0_t)
        r_pools = [[v for v in p if not (used2 >> v) & 1] for p in rp_full]
        r1 = _greedy_transversal(
            r_pools,
            lambda c: f.has_edge_mask(mask_of(l0_t) | mask_of(c))
            and f.has_edge_mask(mask_of(c) | mask_of(la1)),
        )
        if r1 is not None:
            return l0_t, r1
    return None


def _project_family(f, sub_parts, xk_part, cap) -> KPartiteRestriction:
    """The (k-1)-graph of reduced transversals whose missing last-part
    completions number at most ``cap``."""
    allowed = set()
    for combo in itertools.product(*sub_parts):
        jm = mask_of(combo)
        missing = 0
        for x in xk_part:
            if not f.has_edge_mask(jm | (1 << x)):
                missing += 1
                if missing > cap:
                    break
        if missing <= cap:
            allowed.add(jm)
    frozen = frozenset(allowed)
    return KPartiteRestriction(sub_parts, pred=lambda em: em in frozen)


def _find_spine_end(f, proj, sub_parts, ell, last_lb, good, alpha_p):
    """A typical reduced (k-1-ell)-set whose pairing with the last gadget
    L-block stays good; must have positive degree in the projection."""
    pools = [list(p) for p in sub_parts[ell:]]
    for cand in itertools.product(*pools):
        rm = tuple(sorted(cand))
        rm_mask = mask_of(rm)
        if not good.is_good(mask_of(last_lb) | rm_mask, 2 * alpha_p):
            continue
        if not good.is_typical(rm, alpha_p):
            continue
        l_pools = [list(p) for p in sub_parts[:ell]]
        has_nbr = any(
            proj.has_edge_mask(rm_mask | mask_of(combo))
            for combo in itertools.product(*l_pools)
        )
        if has_nbr:
            return rm
    return None


# -- greedy tight paths and path covers -----------------------------------


@dataclass(frozen=True)
class TightPath:
    """Vertex sequence cycling the parts in order; every window of k
    consecutive vertices is an edge."""

    k: int
    vertices: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.vertices)

    def windows(self) -> list[tuple[int, ...]]:
        vs = self.vertices
        return [tuple(sorted(vs[i:i + self.k])) for i in range(len(vs) - self.k + 1)]

    def to_block_path(self, ell: int) -> Optional[SegPath]:
        """Regroup into ell / k-ell blocks, trimming the tail so every
        consecutive block pair spans one window."""
        vs = list(self.vertices)
        blocks = []
        i = 0
        want_ell = True
        while True:
            size = ell if want_ell else self.k - ell
            if i + size > len(vs):
                break
            blocks.append(tuple(sorted(vs[i:i + size])))
            i += size
            want_ell = not want_ell
        if len(blocks) % 2 == 1:
            blocks.pop()
        if len(blocks) < 2:
            return None
        return SegPath(self.k, ell, tuple(blocks))


def validate_tight_path(f: KPartiteRestriction, path: TightPath) -> bool:
    vs = path.vertices
    if len(set(vs)) != len(vs) or len(vs) < f.k:
        return False
    if any(f.part_of.get(v) is None for v in vs):
        return False
    for i in range(len(vs) - f.k + 1):
        window = vs[i:i + f.k]
        if not f.is_transversal(window):
            return False
        if not f.has_edge_mask(mask_of(window)):
            return False
    return True


def _edge_list(f: KPartiteRestriction) -> list[tuple[int, ...]]:
    out = []
    for combo in itertools.product(*f.parts):
        if f.has_edge_mask(mask_of(combo)):
            out.append(combo)  # part order, not sorted
    return out


def greedy_tight_path(f: KPartiteRestriction, c, budget_nodes: int = 2_000_000) -> TightPath:
    """A tight path on at least c * (part size) vertices.

    Greedy two-ended extension from every edge; a budgeted DFS backs the
    greedy up if it stalls below the target (the target is guaranteed
    whenever the family holds at least c * m^k edges).
    """
    m, k = f.part_size, f.k
    edges = _edge_list(f)
    target_frac = Fraction(c).limit_denominator(10**9) if not isinstance(c, Fraction) else c
    if len(edges) < target_frac * m**k:
        raise ValueError(
            f"edge count {len(edges)} below c*m^k = {float(target_frac * m**k):.1f}"
        )
    target = ceil(target_frac * m)
    best: Optional[list[int]] = None
    for seed_edge in edges:
        vs = list(seed_edge)
        used = set(vs)
        # extend right then left, first-fit in part order
        extended = True
        while extended:
            extended = False
            # parts cycle in index order; the next right vertex lives in
            # the part after the last one
            nxt_idx = (f.part_of[vs[-1]] + 1) % k
            for x in f.parts[nxt_idx]:
                if x in used:
                    continue
                window = vs[-(k - 1):] + [x]
                if f.has_edge_mask(mask_of(window)):
                    vs.append(x)
                    used.add(x)
                    extended = True
                    break
            if extended:
                continue
            prv_idx = (f.part_of[vs[0]] - 1) % k
            for x in f.parts[prv_idx]:
                if x in used:
                    continue
                window = [x] + vs[: k - 1]
                if f.has_edge_mask(mask_of(window)):
                    vs.insert(0, x)
                    used.add(x)
                    extended = True
                    break
        if best is None or len(vs) > len(best):
            best = vs
        if len(best) >= target:
            return TightPath(k, tuple(best))
    got = _tight_path_dfs(f, edges, target, budget_nodes)
    if got is not None:
        return TightPath(k, tuple(got))
    if best is not None and len(best) >= target:
        return TightPath(k, tuple(best))
    raise KPartiteError(
        f"no tight path of {target} vertices found (best {len(best) if best else 0})"
    )


def _tight_path_dfs(f, edges, target, budget_nodes) -> Optional[list[int]]:
    k = f.k
    nodes = 0

    def rec(vs: list[int], used: set) -> Optional[list[int]]:
        nonlocal nodes
        nodes += 1
        if nodes > budget_nodes:
            raise KPartiteError("tight-path DFS budget exceeded")
        if len(vs) >= target:
            return vs
        nxt_idx = (f.part_of[vs[-1]] + 1) % k
        for x in f.parts[nxt_idx]:
            if x in used:
                continue
            if not f.has_edge_mask(mask_of(vs[-(k - 1):] + [x])):
                continue
            vs.append(x)
            used.add(x)
            got = rec(vs, used)
            if got is not None:
                return got
            vs.pop()
            used.remove(x)
        return None

    for seed_edge in edges:
        got = rec(list(seed_edge), set(seed_edge))
        if got is not None:
            return got
    return None


@dataclass(frozen=True)
class PathCoverReport:
    paths: tuple[SegPath, ...]
    uncovered: tuple[int, ...]
    uncovered_bound: float
    count_bound: float

    @property
    def within_bounds(self) -> bool:
        return (
            len(self.uncovered) <= self.uncovered_bound
            and len(self.paths) <= self.count_bound
        )


def path_cover_tuple(
    f: KPartiteRestriction, ell: int, eps: float, d: float
) -> PathCoverReport:
    """Disjoint block paths covering all but at most k*eps*m vertices,
    using at most k / ((d - 2*eps) * eps) of them.

    Greedy: while some part keeps eps*m or more uncovered vertices, find
    a tight path in the balanced uncovered sub-tuple and regroup it into
    an (ell, k-ell) block path.
    """
    m, k = f.part_size, f.k
    if d <= 2 * eps:
        raise ValueError("need d > 2*eps")
    if m <= k / (eps * (d - eps)):
        raise ValueError(f"part size {m} below the threshold k/(eps*(d-eps))")
    covered: set[int] = set()
    paths: list[SegPath] = []
    count_bound = k / ((d - 2 * eps) * eps)
    while True:
        pools = [[v for v in p if v not in covered] for p in f.parts]
        m_min = min(len(p) for p in pools)
        m_max = max(len(p) for p in pools)
        if m_max < eps * m:
            break
        if m_min < 1:
            break
        sub = f.restrict_parts([tuple(p[:m_min]) for p in pools])
        edges = _edge_list(sub)
        if not edges:
            break
        try:
            tp = greedy_tight_path(sub, Fraction(len(edges), m_min**k))
        except (ValueError, KPartiteError):
            break
        block_path = tp.to_block_path(ell)
        if block_path is None:
            break
        paths.append(block_path)
        covered.update(block_path.vertices())
    uncovered = tuple(sorted(v for p in f.parts for v in p if v not in covered))
    report = PathCoverReport(
        tuple(paths), uncovered, k * eps * m, count_bound
    )
    if max(
        sum(1 for v in p if v not in covered) for p in f.parts
    ) >= eps * m:
        raise KPartiteError(
            f"greedy cover stalled with {len(uncovered)} uncovered vertices"
        )
    return report
