"""Partition planning for the extremal case and the end-to-end stability
Hamilton path: split the leftover vertices into two complete-k-partite
boxes whose transversal edges all carry the family parity, run the
k-partite engine in each box, and glue with a short bridge path when the
congruence demands one.

The printed box sizes in the source construction do not close on the
B side once a bridge is present, so sizes come from solving the exact
balance system; the bridge's A-share and length are searched.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .core import Budget, Hypergraph, as_budget, bits_of, mask_of
from .extremal import ExtremalSpec, eta_mask, f_parity
from .kpartite import (
    KPartiteConfig,
    KPartiteError,
    KPartiteRestriction,
    _BoxGoodness,
    build_ham_path_kpartite,
)
from .parity import ParityObstruction
from .search import SearchBudget
from .structures import SegPath, validate_path


class PlanError(ValueError):
    """No integral nonnegative partition plan exists."""


class ParityInfeasible(PlanError):
    """The congruence governing the plan fails: the parity invariant of
    the reduced spec is not zero."""


@dataclass(frozen=True)
class PlanSizes:
    case_id: int
    k1: int
    s: int
    m: int
    x: int
    y: int
    e_len: int
    e_in_a: int
    a_x_parts: int  # X-parts inside A
    a_y_parts: int  # Y-parts inside A


def solve_partition_sizes(
    a1: int, b1: int, k: int, eta: int, k1_hint: Optional[int] = None
) -> PlanSizes:
    """Exact integral solution of the two-box balance system.

    The case pattern follows the governing congruence; when the bridge-free
    sizes are not integral, bridge length (k or 2k vertices) and A-share
    are searched, preferring the plan with the largest smaller box.
    """
    total = a1 + b1
    if total % k != 0:
        raise PlanError(f"remaining vertex count {total} not a multiple of k={k}")
    m = total // k
    if m <= 0:
        raise PlanError("nothing to partition")
    k1 = a1 // m if k1_hint is None else k1_hint
    s = a1 - k1 * m
    if not (0 <= s < m):
        raise PlanError(f"k1 hint {k1} gives s={s} outside [0, {m})")
    if not (2 <= k1 <= k - 3):
        raise PlanError(f"need 2 <= k1 <= k-3, got k1={k1} (k={k})")
    if (s + k1 * m - eta * m) % 2 != 0:
        raise ParityInfeasible(
            f"parity infeasible: s={s}, k1={k1}, m={m}, eta={eta}"
        )
    if (k1 - eta) % 2 == 0:
        px, py = k1 - 2, k1 + 2
        base_case = 1 if (s - 2 * m) % 4 == 0 else 2
    else:
        px, py = k1 - 1, k1 + 3
        base_case = 3 if (s - 3 * m) % 4 == 0 else 4
    if py > k:
        raise PlanError(f"pattern needs k1+{py - k1} <= k parts; k1={k1} too large")

    def try_sizes(e_len: int, a_e: int) -> Optional[PlanSizes]:
        m_hat = m - e_len // k
        num = a1 - a_e - px * m_hat
        if num % 4 != 0:
            return None
        y = num // 4
        x = m_hat - y
        if x < 1 or y < 1:
            return None
        if (k - px) * x + (k - py) * y != b1 - (e_len - a_e):
            return None
        return PlanSizes(base_case, k1, s, m, x, y, e_len, a_e, px, py)

    if base_case in (1, 3):
        got = try_sizes(0, 0)
        if got is not None:
            return got
        raise PlanError("bridge-free case failed to balance; sizes inconsistent")
    lengths = [k, 2 * k] if eta == 0 else [2 * k]
    candidates: list[PlanSizes] = []
    for e_len in lengths:
        for a_e in _feasible_bridge_shares(k, eta, e_len, a1, b1):
            got = try_sizes(e_len, a_e)
            if got is not None:
                candidates.append(got)
    if not candidates:
        raise PlanError("no integral plan over the searched bridge shapes")
    candidates.sort(key=lambda p: (-min(p.x, p.y), p.e_len, p.e_in_a))
    return candidates[0]


def _feasible_bridge_shares(k: int, eta: int, e_len: int, a1: int, b1: int):
    """A-share values realizable by a bridge path of the given length whose
    edges all carry the family parity."""
    if e_len == k:
        lo, hi = 0, k
    else:
        # two edges, each with A-count of parity eta
        lo = 2 * eta
        hi = 2 * (k - 1) if (k % 2 == 0) == (eta == 1) else 2 * k
        hi = min(hi, 2 * k)
    for a_e in range(lo, hi + 1):
        if a_e % 2 != 0:
            continue
        if e_len == 2 * k:
            if not _two_edge_split(k, eta, a_e):
                continue
        if a_e <= a1 and e_len - a_e <= b1:
            yield a_e


def _two_edge_split(k: int, eta: int, a_e: int) -> Optional[tuple[int, int]]:
    for a_first in range(a_e + 1):
        a_second = a_e - a_first
        if a_first % 2 == eta and a_second % 2 == eta:
            if a_first <= k and a_second <= k:
                return a_first, a_second
    return None


@dataclass(frozen=True)
class PartitionPlan:
    sizes: PlanSizes
    x_parts: tuple[tuple[int, ...], ...]
    y_parts: tuple[tuple[int, ...], ...]
    e_path: Optional[SegPath]

    @property
    def case_id(self) -> int:
        return self.sizes.case_id


def _bridge_blocks(
    k: int, ell: int, eta: int, e_len: int, a_e: int, a_pool: list, b_pool: list
) -> tuple[tuple[tuple[int, ...], ...], int]:
    """Parity-only bridge blocks drawn from the pools; returns blocks and
    the number of A-vertices consumed."""
    rs = k - ell

    def take(n_a: int, size: int) -> tuple[int, ...]:
        got = [a_pool.pop(0) for _ in range(n_a)] + [
            b_pool.pop(0) for _ in range(size - n_a)
        ]
        return tuple(sorted(got))

    if e_len == k:
        a_l = min(ell, a_e)
        a_r = a_e - a_l
        return (take(a_l, ell), take(a_r, rs)), a_e
    split = _two_edge_split(k, eta, a_e)
    if split is None:
        raise PlanError("no parity-consistent split for the two-edge bridge")
    a_first, a_second = split
    # blocks L1 R2 L2 R1 with edges L1+R2 and L2+R1
    a_l1 = min(ell, a_first)
    a_r2 = a_first - a_l1
    a_l2 = min(ell, a_second)
    a_r1 = a_second - a_l2
    if a_r2 > rs or a_r1 > rs:
        a_l1 = max(0, a_first - rs)
        a_r2 = a_first - a_l1
        a_l2 = max(0, a_second - rs)
        a_r1 = a_second - a_l2
    l1 = take(a_l1, ell)
    r2 = take(a_r2, rs)
    l2 = take(a_l2, ell)
    r1 = take(a_r1, rs)
    return (l1, r2, l2, r1), a_e


def plan_partition(
    spec1: ExtremalSpec, ell: int, k1_hint: Optional[int] = None
) -> PartitionPlan:
    """Concrete partition of the reduced spec's universe into the two
    boxes plus an optional parity-consistent bridge path.

    The bridge here is parity-only (every edge lies in the family); the
    stability builder replaces it with a host-verified one.
    """
    a1, b1 = len(spec1.a), spec1.n - len(spec1.a)
    sizes = solve_partition_sizes(a1, b1, spec1.k, spec1.eta, k1_hint)
    a_pool = list(spec1.a)
    b_pool = list(spec1.b)
    e_path = None
    if sizes.e_len:
        blocks, _ = _bridge_blocks(
            spec1.k, ell, spec1.eta, sizes.e_len, sizes.e_in_a, a_pool, b_pool
        )
        e_path = SegPath(spec1.k, ell, blocks)
    x_parts, y_parts = assign_parts(sizes, spec1.k, a_pool, b_pool)
    return PartitionPlan(sizes, x_parts, y_parts, e_path)


def assign_parts(
    sizes: PlanSizes, k: int, a_pool: list, b_pool: list
) -> tuple[tuple, tuple]:
    """Deal the pools into monochromatic parts: the first ``a_x_parts``
    X-parts and ``a_y_parts`` Y-parts sit inside A, the rest inside B."""
    need_a = sizes.a_x_parts * sizes.x + sizes.a_y_parts * sizes.y
    need_b = (k - sizes.a_x_parts) * sizes.x + (k - sizes.a_y_parts) * sizes.y
    if len(a_pool) != need_a or len(b_pool) != need_b:
        raise PlanError(
            f"pool sizes ({len(a_pool)}, {len(b_pool)}) do not match the plan "
            f"({need_a}, {need_b})"
        )
    ax, ay = sizes.a_x_parts, sizes.a_y_parts
    x_parts = []
    y_parts = []
    idx = 0
    for i in range(ax):
        x_parts.append(tuple(a_pool[idx:idx + sizes.x]))
        idx += sizes.x
    for i in range(ay):
        y_parts.append(tuple(a_pool[idx:idx + sizes.y]))
        idx += sizes.y
    idx = 0
    for i in range(k - ax):
        x_parts.append(tuple(b_pool[idx:idx + sizes.x]))
        idx += sizes.x
    for i in range(k - ay):
        y_parts.append(tuple(b_pool[idx:idx + sizes.y]))
        idx += sizes.y
    return tuple(x_parts), tuple(y_parts)


def validate_plan(plan: PartitionPlan, spec1: ExtremalSpec) -> Optional[str]:
    """None when all plan invariants hold, else the first violation."""
    sizes = plan.sizes
    seen = 0
    for p in plan.x_parts:
        if len(p) != sizes.x:
            return "unequal X-part size"
        pm = mask_of(p)
        if pm & seen:
            return "overlapping parts"
        seen |= pm
    for p in plan.y_parts:
        if len(p) != sizes.y:
            return "unequal Y-part size"
        pm = mask_of(p)
        if pm & seen:
            return "overlapping parts"
        seen |= pm
    if plan.e_path is not None:
        em = mask_of(plan.e_path.vertices())
        if em & seen:
            return "bridge overlaps the boxes"
        seen |= em
    if seen != (1 << spec1.n) - 1:
        return "parts plus bridge do not partition the universe"
    amask = spec1.a_mask
    for p in plan.x_parts + plan.y_parts:
        pm = mask_of(p)
        if pm & amask != pm and pm & amask != 0:
            return "a part mixes both sides"
    # every box transversal must carry the family parity
    ax = sum(1 for p in plan.x_parts if mask_of(p) & amask)
    ay = sum(1 for p in plan.y_parts if mask_of(p) & amask)
    if ax % 2 != spec1.eta or ay % 2 != spec1.eta:
        return "box transversal parity differs from the family type"
    if plan.e_path is not None:
        for e in plan.e_path.edge_sets():
            if eta_mask(spec1, mask_of(e)) != spec1.eta:
                return "bridge edge outside the parity family"
    return None


# -- the stability Hamilton path -----------------------------------------


def seeded_deletion_pred(seed: int, rate: float):
    """Deterministic pseudo-random deletion marker over edge masks; keyed
    hashing keeps it stable across platforms without materializing
    anything."""
    threshold = int(rate * 2**48)
    key = seed.to_bytes(8, "little", signed=False)

    def deleted(mask: int, _key=key, _thr=threshold) -> bool:
        digest = hashlib.blake2b(
            mask.to_bytes((mask.bit_length() + 7) // 8 or 1, "little"),
            key=_key,
            digest_size=6,
        ).digest()
        return int.from_bytes(digest, "little") < _thr

    return deleted


def perturbed_extremal_implicit(
    spec: ExtremalSpec, rate: float, seed: int
) -> Hypergraph:
    """The parity family minus a seeded implicit fraction of its edges;
    never materialized."""
    deleted = seeded_deletion_pred(seed, rate)
    amask, eta = spec.a_mask, spec.eta

    def pred(mask: int, _a=amask, _e=eta, _d=deleted) -> bool:
        return (mask & _a).bit_count() & 1 == _e and not _d(mask)

    return Hypergraph.from_predicate(spec.n, spec.k, pred, structure="pred")


class StabilityError(RuntimeError):
    """A stage of the stability construction failed; the message carries
    the stage tag."""


def stability_ham_path(
    g: Hypergraph,
    spec: ExtremalSpec,
    ell: int,
    l_end: Iterable[int],
    r_end: Iterable[int],
    rng: np.random.Generator,
    budget: SearchBudget = SearchBudget(),
    config: KPartiteConfig = KPartiteConfig(),
) -> SegPath:
    """Hamilton block path of G with the prescribed good ends, assembled
    from the partition plan, two box paths, and bridge sets.

    Works through membership queries only, so implicit hosts at large n
    stay unmaterialized.
    """
    k = g.k
    if k < 5:
        raise ValueError("the stability construction needs k >= 5")
    if f_parity(spec).value != 0:
        raise ParityObstruction("parity obstruction: the invariant is 1")
    l_t = tuple(sorted(l_end))
    r_t = tuple(sorted(r_end))
    if len(l_t) != ell or len(r_t) != k - ell:
        raise ValueError("end sizes must be (ell, k-ell)")
    lr_mask = mask_of(l_t) | mask_of(r_t)
    if lr_mask.bit_count() != k:
        raise ValueError("ends must be disjoint")
    if (eta_mask(spec, mask_of(l_t)) + eta_mask(spec, mask_of(r_t))) % 2 != spec.eta:
        raise ValueError("the ends' union must lie in the parity family")
    a1_pool = [v for v in spec.a if not (lr_mask >> v) & 1]
    b1_pool = [v for v in spec.b if not (lr_mask >> v) & 1]
    sizes = solve_partition_sizes(len(a1_pool), len(b1_pool), k, spec.eta)
    e_path = None
    if sizes.e_len:
        e_path = _host_bridge(
            g, spec, ell, sizes, lr_mask, a1_pool, b1_pool, rng
        )
        if e_path is None:
            raise StabilityError("bridge stage: no host-verified bridge path found")
        used = set(e_path.vertices())
        a1_pool = [v for v in a1_pool if v not in used]
        b1_pool = [v for v in b1_pool if v not in used]
    x_parts, y_parts = assign_parts(sizes, k, list(a1_pool), list(b1_pool))
    fx = KPartiteRestriction.from_hypergraph(g, x_parts)
    fy = KPartiteRestriction.from_hypergraph(g, y_parts)
    splice = _find_splice(
        g, spec, ell, sizes, l_t, r_t, e_path, fx, fy, config
    )
    if splice is None:
        raise StabilityError("splice stage: no parity-compatible typical ends found")
    (l1s, r1s), (l2s, r2s), x_first = splice
    fa, fb = (fx, fy) if x_first else (fy, fx)
    p1 = build_ham_path_kpartite(fa, ell, l1s, r1s, rng, budget, config)
    p2 = build_ham_path_kpartite(fb, ell, l2s, r2s, rng, budget, config)
    blocks = (l_t,) + tuple(reversed(p1.blocks))
    if e_path is not None:
        blocks += tuple(reversed(e_path.blocks))
    blocks += tuple(reversed(p2.blocks)) + (r_t,)
    path = SegPath(k, ell, blocks)
    verdict = validate_path(g, path)
    if not verdict:
        raise StabilityError(f"assembly stage: {verdict.violation}")
    if len(path.vertices()) != g.n:
        raise StabilityError("assembly stage: path is not spanning")
    return path


def _in_g_and_b(g: Hypergraph, spec: ExtremalSpec, em: int) -> bool:
    return eta_mask(spec, em) == spec.eta and g.has_edge_mask(em)


def _host_bridge(g, spec, ell, sizes, lr_mask, a_pool, b_pool, rng, tries: int = 64):
    """A bridge path with host-verified edges; pools are sampled after a
    deterministic first pass."""
    k = spec.k
    for attempt in range(tries):
        if attempt == 0:
            ap, bp = list(a_pool), list(b_pool)
        else:
            ap = list(rng.permutation(np.array(a_pool, dtype=np.int64)))
            bp = list(rng.permutation(np.array(b_pool, dtype=np.int64)))
            ap = [int(v) for v in ap]
            bp = [int(v) for v in bp]
        try:
            blocks, _ = _bridge_blocks(
                k, ell, spec.eta, sizes.e_len, sizes.e_in_a, ap, bp
            )
        except PlanError:
            return None
        cand = SegPath(k, ell, blocks)
        if all(_in_g_and_b(g, spec, mask_of(e)) for e in cand.edge_sets()):
            return cand
    return None


def _find_splice(g, spec, ell, sizes, l_t, r_t, e_path, fx, fy, config):
    """Box end pairs with the right parities, typicality, and host edges
    at every seam; searches both box orders and all part subsets."""
    k = spec.k
    rs = k - ell
    eta = spec.eta
    eta_l = eta_mask(spec, mask_of(l_t))
    eta_r = eta_mask(spec, mask_of(r_t))
    if e_path is not None:
        e_blocks = e_path.blocks
        l1e, r1e = e_blocks[0], e_blocks[-1]
        eta_r1e = eta_mask(spec, mask_of(r1e))
        eta_l1e = eta_mask(spec, mask_of(l1e))
    for x_first in (True, False):
        fa, fb = (fx, fy) if x_first else (fy, fx)
        good_a, good_b = _BoxGoodness(fa), _BoxGoodness(fb)
        a_parts_a = [i for i, p in enumerate(fa.parts) if mask_of(p) & spec.a_mask]
        a_parts_b = [i for i, p in enumerate(fb.parts) if mask_of(p) & spec.a_mask]
        want_r1 = (eta - eta_l) % 2
        want_l2 = (eta - eta_r) % 2
        for r1_idx in itertools.combinations(range(k), rs):
            if sum(1 for i in r1_idx if i in a_parts_a) % 2 != want_r1:
                continue
            l1_idx = tuple(i for i in range(k) if i not in r1_idx)
            eta_l1 = sum(1 for i in l1_idx if i in a_parts_a) % 2
            if e_path is not None:
                if (eta_l1 + eta_r1e) % 2 != eta:
                    continue
                want_r2 = (eta - eta_l1e) % 2
            else:
                want_r2 = (eta - eta_l1) % 2
            for l2_idx in itertools.combinations(range(k), ell):
                if sum(1 for i in l2_idx if i in a_parts_b) % 2 != want_l2:
                    continue
                r2_idx = tuple(i for i in range(k) if i not in l2_idx)
                if sum(1 for i in r2_idx if i in a_parts_b) % 2 != want_r2:
                    continue
                got = _concrete_splice(
                    g, spec, l_t, r_t, e_path, fa, fb, good_a, good_b,
                    r1_idx, l1_idx, l2_idx, r2_idx, config,
                )
                if got is not None:
                    return got[0], got[1], x_first
    return None


def _concrete_splice(
    g, spec, l_t, r_t, e_path, fa, fb, good_a, good_b,
    r1_idx, l1_idx, l2_idx, r2_idx, config,
):
    alpha = config.alpha
    lm, rm = mask_of(l_t), mask_of(r_t)
    if e_path is not None:
        r1e_m = mask_of(e_path.blocks[-1])
        l1e_m = mask_of(e_path.blocks[0])
    r1 = _box_transversal(
        fa, r1_idx, lambda c: g.has_edge_mask(lm | mask_of(c)), good_a, alpha
    )
    if r1 is None:
        return None
    if e_path is not None:
        l1 = _box_transversal(
            fa, l1_idx,
            lambda c: not (mask_of(c) & mask_of(r1))
            and g.has_edge_mask(mask_of(c) | r1e_m),
            good_a, alpha,
        )
    else:
        l1 = None  # chosen jointly with r2 below
    l2 = _box_transversal(
        fb, l2_idx, lambda c: g.has_edge_mask(mask_of(c) | rm), good_b, alpha
    )
    if l2 is None:
        return None
    if e_path is not None:
        r2 = _box_transversal(
            fb, r2_idx,
            lambda c: not (mask_of(c) & mask_of(l2))
            and g.has_edge_mask(l1e_m | mask_of(c)),
            good_b, alpha,
        )
        if l1 is None or r2 is None:
            return None
        return (l1, r1), (l2, r2)
    # bridge-free: L1 and R2 must union to a host edge across the boxes
    for l1 in _box_transversal_iter(fa, l1_idx, good_a, alpha):
        if mask_of(l1) & mask_of(r1):
            continue
        r2 = _box_transversal(
            fb, r2_idx,
            lambda c: not (mask_of(c) & mask_of(l2))
            and g.has_edge_mask(mask_of(l1) | mask_of(c)),
            good_b, alpha,
        )
        if r2 is not None:
            return (l1, r1), (l2, r2)
    return None


def _box_transversal_iter(f, part_idx, good, alpha):
    pools = [f.parts[i] for i in part_idx]
    for combo in itertools.product(*pools):
        cand = tuple(sorted(combo))
        if good.is_typical(cand, alpha):
            yield cand


def _box_transversal(f, part_idx, ok, good, alpha):
    for cand in _box_transversal_iter(f, part_idx, good, alpha):
        if ok(cand):
            return cand
    return None
