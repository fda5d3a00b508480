"""Segment-structured block paths, block cycles, matchings, validators.

A block path alternates vertex blocks of sizes ell and k-ell so that
every two consecutive blocks union to an edge; a block cycle closes the
alternation.  Validators return a verdict plus a first-violation report
instead of raising, so searches can consume them wholesale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional

from .core import Hypergraph, mask_of


@dataclass(frozen=True)
class SegPath:
    """Ordered blocks (P_0, ..., P_t); consecutive unions are edges."""

    k: int
    ell: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "blocks", tuple(tuple(sorted(b)) for b in self.blocks)
        )

    @property
    def ends(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.blocks[0], self.blocks[-1]

    def vertices(self) -> tuple[int, ...]:
        return tuple(sorted(v for b in self.blocks for v in b))

    def reversed(self) -> "SegPath":
        return SegPath(self.k, self.ell, tuple(reversed(self.blocks)))

    def edge_sets(self) -> list[tuple[int, ...]]:
        return [
            tuple(sorted(self.blocks[i] + self.blocks[i + 1]))
            for i in range(len(self.blocks) - 1)
        ]


@dataclass(frozen=True)
class SegCycle:
    """Cyclic blocks (L_0, R_0, ..., L_{t-1}, R_{t-1}), |L_i| = ell."""

    k: int
    ell: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "blocks", tuple(tuple(sorted(b)) for b in self.blocks)
        )

    @property
    def t(self) -> int:
        return len(self.blocks) // 2

    def l_blocks(self) -> tuple[tuple[int, ...], ...]:
        return self.blocks[0::2]

    def r_blocks(self) -> tuple[tuple[int, ...], ...]:
        return self.blocks[1::2]

    def vertices(self) -> tuple[int, ...]:
        return tuple(sorted(v for b in self.blocks for v in b))

    def edge_sets(self) -> list[tuple[int, ...]]:
        m = len(self.blocks)
        return [
            tuple(sorted(self.blocks[i] + self.blocks[(i + 1) % m]))
            for i in range(m)
        ]

    def canonical(self) -> "SegCycle":
        """Rotate so L_0 holds the minimum L-block vertex; reflect so
        R_0 <= R_{t-1} lexicographically."""
        ls = self.l_blocks()
        min_vertex = min(min(b) for b in ls)
        idx = next(i for i, b in enumerate(ls) if min_vertex in b)
        rotated = self.blocks[2 * idx:] + self.blocks[:2 * idx]
        rs = rotated[1::2]
        if rs[-1] < rs[0]:
            reflected = (rotated[0],) + tuple(reversed(rotated[1:]))
            return SegCycle(self.k, self.ell, reflected)
        return SegCycle(self.k, self.ell, rotated)


@dataclass(frozen=True)
class Matching:
    """Pairwise disjoint k-sets."""

    k: int
    edges: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "edges", tuple(sorted(tuple(sorted(e)) for e in self.edges))
        )

    def vertices(self) -> tuple[int, ...]:
        return tuple(sorted(v for e in self.edges for v in e))

    def is_valid(self) -> bool:
        seen = 0
        for e in self.edges:
            if len(e) != self.k:
                return False
            m = mask_of(e)
            if m.bit_count() != self.k or m & seen:
                return False
            seen |= m
        return True

    def is_perfect_on(self, n: int) -> bool:
        return self.is_valid() and len(self.vertices()) == n


@dataclass(frozen=True)
class Verdict:
    ok: bool
    violation: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _check_block_sizes(k: int, ell: int, blocks) -> Optional[str]:
    if len(blocks) < 2:
        return f"need at least 2 blocks, got {len(blocks)}"
    for i, b in enumerate(blocks):
        if len(b) not in (ell, k - ell):
            return f"block {i} has size {len(b)}, expected {ell} or {k - ell}"
    for i in range(len(blocks) - 1):
        if len(blocks[i]) + len(blocks[i + 1]) != k:
            return (
                f"blocks {i},{i + 1} have sizes {len(blocks[i])},{len(blocks[i + 1])}"
                f" not summing to k={k}"
            )
    return None


def _check_disjoint(blocks) -> Optional[str]:
    seen = 0
    for i, b in enumerate(blocks):
        m = mask_of(b)
        if m.bit_count() != len(b):
            return f"block {i} has duplicate vertices"
        if m & seen:
            return f"block {i} overlaps an earlier block"
        seen |= m
    return None


def validate_path(h: Hypergraph, path: SegPath) -> Verdict:
    """Structural invariants plus edge membership of consecutive unions."""
    err = _check_block_sizes(path.k, path.ell, path.blocks)
    if err is None:
        err = _check_disjoint(path.blocks)
    if err is not None:
        return Verdict(False, err)
    if path.k != h.k:
        return Verdict(False, f"path k={path.k} differs from hypergraph k={h.k}")
    for i in range(len(path.blocks) - 1):
        e = path.blocks[i] + path.blocks[i + 1]
        if not h.has_edge(e):
            return Verdict(False, f"union of blocks {i},{i + 1} is not an edge")
    return Verdict(True)


def validate_cycle(h: Hypergraph, cycle: SegCycle, hamilton: bool = False) -> Verdict:
    """All 2t cyclic unions are edges; hamilton mode additionally requires
    the blocks to partition the whole vertex set.

    t >= 2 is required: with a single block pair the two cyclic unions
    coincide and reuse one edge.
    """
    blocks = cycle.blocks
    if len(blocks) % 2 != 0:
        return Verdict(False, "cycle needs an even number of blocks")
    if cycle.t < 2:
        return Verdict(False, f"degenerate cycle with t={cycle.t} < 2")
    for i, b in enumerate(blocks):
        want = cycle.ell if i % 2 == 0 else cycle.k - cycle.ell
        if len(b) != want:
            return Verdict(False, f"block {i} has size {len(b)}, expected {want}")
    err = _check_disjoint(blocks)
    if err is not None:
        return Verdict(False, err)
    if cycle.k != h.k:
        return Verdict(False, f"cycle k={cycle.k} differs from hypergraph k={h.k}")
    m = len(blocks)
    for i in range(m):
        e = blocks[i] + blocks[(i + 1) % m]
        if not h.has_edge(e):
            return Verdict(False, f"union of blocks {i},{(i + 1) % m} is not an edge")
    if hamilton and len(cycle.vertices()) != h.n:
        return Verdict(False, "blocks do not cover every vertex")
    return Verdict(True)


def cycle_to_matchings(cycle: SegCycle) -> tuple[Matching, Matching]:
    """The two perfect matchings {L_i + R_i} and {R_i + L_{i+1}}."""
    blocks = cycle.blocks
    if cycle.t < 2:
        raise ValueError(f"degenerate cycle with t={cycle.t} < 2")
    err = _check_disjoint(blocks)
    if err is not None:
        raise ValueError(err)
    t = cycle.t
    m1 = Matching(cycle.k, tuple(blocks[2 * i] + blocks[2 * i + 1] for i in range(t)))
    m2 = Matching(
        cycle.k,
        tuple(blocks[2 * i + 1] + blocks[(2 * i + 2) % (2 * t)] for i in range(t)),
    )
    return m1, m2


def path_even_matching(path: SegPath) -> Matching:
    """Pairs blocks (0,1), (2,3), ...; defined for an even block count."""
    blocks = path.blocks
    if len(blocks) % 2 != 0:
        raise ValueError("even-position matching needs an even block count")
    return Matching(
        path.k,
        tuple(blocks[2 * i] + blocks[2 * i + 1] for i in range(len(blocks) // 2)),
    )


def path_odd_matching(path: SegPath) -> Matching:
    """Pairs blocks (1,2), (3,4), ...; covers the path minus its two ends."""
    blocks = path.blocks
    if len(blocks) % 2 != 0:
        raise ValueError("odd-position matching needs an even block count")
    return Matching(
        path.k,
        tuple(
            blocks[2 * i + 1] + blocks[2 * i + 2]
            for i in range((len(blocks) - 2) // 2)
        ),
    )


# -- witness serialization --------------------------------------------


def cycle_to_json(cycle: SegCycle) -> str:
    canon = cycle.canonical()
    return json.dumps({"ell": canon.ell, "blocks": [list(b) for b in canon.blocks]})


def path_to_json(path: SegPath) -> str:
    return json.dumps({"ell": path.ell, "blocks": [list(b) for b in path.blocks]})


def cycle_from_json(text: str, k: int) -> SegCycle:
    data = json.loads(text)
    return SegCycle(k, data["ell"], tuple(tuple(b) for b in data["blocks"]))


def path_from_json(text: str, k: int) -> SegPath:
    data = json.loads(text)
    return SegPath(k, data["ell"], tuple(tuple(b) for b in data["blocks"]))
