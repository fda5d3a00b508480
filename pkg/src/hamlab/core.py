"""k-uniform hypergraphs over labeled vertices 0..n-1.

Two backends share one interface: an explicit backend (canonical sorted
edge list, lexicographic order) and an implicit backend (a membership
predicate over bitmasks, tagged with a structure descriptor).  Structured
families at n = 70, k = 7 have ~1.2e9 edges and must never be
materialized, so everything downstream consumes membership queries only.

Vertex sets travel as strictly increasing tuples at the API surface and
as bitmask ints internally; Python ints give bit-packed words with
popcount at any width.
"""

from __future__ import annotations

import itertools
from math import comb
from typing import Callable, Iterable, Iterator, Optional

DEFAULT_MEMBERSHIP_BUDGET = 10**8


class BudgetExceeded(RuntimeError):
    """An enumeration exceeded its membership-test budget."""


class Budget:
    """Counts membership tests so oracles fail loudly rather than hang."""

    __slots__ = ("limit", "spent")

    def __init__(self, limit: int = DEFAULT_MEMBERSHIP_BUDGET):
        if limit <= 0:
            raise ValueError("budget limit must be positive")
        self.limit = limit
        self.spent = 0

    def spend(self, amount: int = 1) -> None:
        self.spent += amount
        if self.spent > self.limit:
            raise BudgetExceeded(
                f"enumeration budget exceeded: {self.spent} > {self.limit}"
            )


def as_budget(budget: "Budget | int | None") -> Budget:
    if budget is None:
        return Budget()
    if isinstance(budget, int):
        return Budget(budget)
    return budget


def comb0(n: int, r: int) -> int:
    """C(n, r) with the empty-sum convention: 0 when r < 0 or r > n."""
    if r < 0 or n < 0 or r > n:
        return 0
    return comb(n, r)


def mask_of(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def bits_of(mask: int) -> tuple[int, ...]:
    """Set bits of ``mask`` as a strictly increasing tuple."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


def check_vertex_set(vertices: Iterable[int], n: int) -> tuple[int, ...]:
    """Validate and normalize a vertex set against universe 0..n-1."""
    vs = tuple(sorted(vertices))
    if any(v < 0 or v >= n for v in vs):
        raise ValueError(f"vertex out of range 0..{n - 1}: {vs}")
    if len(set(vs)) != len(vs):
        raise ValueError(f"duplicate vertices: {vs}")
    return vs


class Hypergraph:
    """A k-uniform hypergraph on vertices 0..n-1.

    Immutable after construction; all queries are pure, so instances are
    safe to share across concurrent tasks.

    ``structure`` is one of ``explicit``, ``complete``, ``empty``,
    ``extremal``, ``kpartite``, ``pred``; implicit structures may carry
    transform hooks in ``meta`` (``complement``, ``restrict``, ``count``)
    so that e.g. complementing a parity family flips its type flag
    instead of erasing the descriptor.
    """

    __slots__ = ("n", "k", "structure", "meta", "_edges", "_masks", "_pred")

    def __init__(
        self,
        n: int,
        k: int,
        *,
        edges: Optional[tuple[tuple[int, ...], ...]] = None,
        pred: Optional[Callable[[int], bool]] = None,
        structure: str = "explicit",
        meta: Optional[dict] = None,
    ):
        if not (2 <= k <= n):
            raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
        self.n = n
        self.k = k
        self.structure = structure
        self.meta = meta or {}
        self._edges = edges
        self._masks = frozenset(mask_of(e) for e in edges) if edges is not None else None
        self._pred = pred
        if edges is None and pred is None:
            raise ValueError("need an explicit edge list or a predicate")

    # -- constructors -------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, k: int, edges: Iterable[Iterable[int]]) -> "Hypergraph":
        canon = []
        for e in edges:
            vs = check_vertex_set(e, n)
            if len(vs) != k:
                raise ValueError(f"edge {vs} is not a {k}-set")
            canon.append(vs)
        canon.sort()
        for a, b in zip(canon, canon[1:]):
            if a == b:
                raise ValueError(f"duplicate edge {a}")
        return cls(n, k, edges=tuple(canon), structure="explicit")

    @classmethod
    def complete(cls, n: int, k: int) -> "Hypergraph":
        return cls(n, k, pred=lambda m: True, structure="complete")

    @classmethod
    def empty(cls, n: int, k: int) -> "Hypergraph":
        return cls(n, k, pred=lambda m: False, structure="empty")

    @classmethod
    def from_predicate(
        cls,
        n: int,
        k: int,
        pred: Callable[[int], bool],
        structure: str = "pred",
        meta: Optional[dict] = None,
    ) -> "Hypergraph":
        return cls(n, k, pred=pred, structure=structure, meta=meta)

    # -- membership ---------------------------------------------------

    @property
    def is_explicit(self) -> bool:
        return self._masks is not None

    def has_edge_mask(self, mask: int) -> bool:
        if self._masks is not None:
            return mask in self._masks
        return bool(self._pred(mask))

    def has_edge(self, vertices: Iterable[int]) -> bool:
        vs = check_vertex_set(vertices, self.n)
        if len(vs) != self.k:
            raise ValueError(f"{vs} is not a {self.k}-set")
        return self.has_edge_mask(mask_of(vs))

    @property
    def edges(self) -> tuple[tuple[int, ...], ...]:
        if self._edges is None:
            raise ValueError("implicit backend has no edge list; use iter_edges or to_explicit")
        return self._edges

    def iter_edges(self, budget: "Budget | int | None" = None) -> Iterator[tuple[int, ...]]:
        """Edges in lexicographic order; implicit backends enumerate all k-sets."""
        if self._edges is not None:
            yield from self._edges
            return
        b = as_budget(budget)
        for e in itertools.combinations(range(self.n), self.k):
            b.spend()
            if self._pred(mask_of(e)):
                yield e

    def edge_count(self, budget: "Budget | int | None" = None) -> int:
        if self._edges is not None:
            return len(self._edges)
        if self.structure == "complete":
            return comb(self.n, self.k)
        if self.structure == "empty":
            return 0
        counter = self.meta.get("count")
        if counter is not None:
            return counter()
        return sum(1 for _ in self.iter_edges(budget))

    def to_explicit(self, budget: "Budget | int | None" = None) -> "Hypergraph":
        if self.is_explicit:
            return self
        return Hypergraph.from_edges(self.n, self.k, self.iter_edges(budget))

    # -- degree and link queries --------------------------------------

    def link(self, s: Iterable[int], budget: "Budget | int | None" = None) -> list[tuple[int, ...]]:
        """All (k-|S|)-sets T disjoint from S with S union T an edge."""
        vs = check_vertex_set(s, self.n)
        if len(vs) >= self.k:
            raise ValueError(f"|S| must be < k={self.k}, got {len(vs)}")
        smask = mask_of(vs)
        r = self.k - len(vs)
        if self._masks is not None:
            out = [
                bits_of(em ^ smask)
                for em in self._masks
                if em & smask == smask
            ]
            out.sort()
            return out
        b = as_budget(budget)
        rest = [v for v in range(self.n) if not (smask >> v) & 1]
        out = []
        for t in itertools.combinations(rest, r):
            b.spend()
            if self._pred(smask | mask_of(t)):
                out.append(t)
        return out

    def degree(self, s: Iterable[int], budget: "Budget | int | None" = None) -> int:
        vs = check_vertex_set(s, self.n)
        smask = mask_of(vs)
        if self._masks is not None:
            return sum(1 for em in self._masks if em & smask == smask)
        b = as_budget(budget)
        rest = [v for v in range(self.n) if not (smask >> v) & 1]
        pred = self._pred
        deg = 0
        for t in itertools.combinations(rest, self.k - len(vs)):
            b.spend()
            if pred(smask | mask_of(t)):
                deg += 1
        return deg

    def min_ell_degree(self, ell: int, budget: "Budget | int | None" = None) -> int:
        """Minimum of deg(S) over all ell-sets S; |edges| for ell = 0."""
        if not (0 <= ell <= self.k - 1):
            raise ValueError(f"need 0 <= ell <= k-1, got {ell}")
        b = as_budget(budget)
        if ell == 0:
            return self.edge_count(b)
        best = None
        for s in itertools.combinations(range(self.n), ell):
            d = self.degree(s, b)
            if best is None or d < best:
                best = d
                if best == 0:
                    break
        return best

    # -- structural transforms ----------------------------------------

    def restrict(self, u: Iterable[int]) -> tuple["Hypergraph", tuple[int, ...]]:
        """Induced subhypergraph on U, relabeled 0..|U|-1 order-preservingly.

        Returns the restriction together with the relabeling table: entry i
        holds the original label of new vertex i.
        """
        table = check_vertex_set(u, self.n)
        if len(table) < self.k:
            raise ValueError(f"|U|={len(table)} < k={self.k}")
        umask = mask_of(table)
        if self._edges is not None:
            new_of = {old: i for i, old in enumerate(table)}
            kept = [
                tuple(new_of[v] for v in e)
                for e in self._edges
                if mask_of(e) & umask == mask_of(e)
            ]
            return Hypergraph.from_edges(len(table), self.k, kept), table
        hook = self.meta.get("restrict")
        if hook is not None:
            return hook(table), table
        pred = self._pred

        def relabeled(mask: int, _table=table, _pred=pred) -> bool:
            return _pred(mask_of(_table[v] for v in bits_of(mask)))

        return (
            Hypergraph.from_predicate(len(table), self.k, relabeled, structure="pred"),
            table,
        )

    def complement(self) -> "Hypergraph":
        """The k-graph with negated membership."""
        hook = self.meta.get("complement")
        if hook is not None:
            return hook()
        if self.structure == "complete":
            return Hypergraph.empty(self.n, self.k)
        if self.structure == "empty":
            return Hypergraph.complete(self.n, self.k)
        if self._masks is not None:
            masks = self._masks

            def negated(mask: int, _masks=masks) -> bool:
                return mask not in _masks

            return Hypergraph.from_predicate(self.n, self.k, negated, structure="pred")
        pred = self._pred
        return Hypergraph.from_predicate(
            self.n, self.k, lambda m, _p=pred: not _p(m), structure="pred"
        )

    def __repr__(self) -> str:
        size = len(self._edges) if self._edges is not None else "?"
        return f"Hypergraph(n={self.n}, k={self.k}, {self.structure}, edges={size})"


# -- text format -----------------------------------------------------
#
# Line 1: "n k".  Each subsequent non-comment line: k strictly increasing
# 0-based labels separated by single spaces.  Lines starting '#' ignored.
# Edges must appear in lexicographic order; trailing newline required.


def dumps(h: Hypergraph, budget: "Budget | int | None" = None) -> str:
    lines = [f"{h.n} {h.k}"]
    lines.extend(" ".join(str(v) for v in e) for e in h.iter_edges(budget))
    return "\n".join(lines) + "\n"


def loads(text: str) -> Hypergraph:
    if not text.endswith("\n"):
        raise ValueError("hypergraph text must end with a newline")
    lines = text.split("\n")[:-1]
    body = [ln for ln in lines if not ln.startswith("#")]
    if not body:
        raise ValueError("missing header line")
    header = body[0].split(" ")
    if len(header) != 2:
        raise ValueError(f"header must be 'n k', got {body[0]!r}")
    n, k = int(header[0]), int(header[1])
    edges = []
    for ln in body[1:]:
        parts = ln.split(" ")
        if "" in parts:
            raise ValueError(f"malformed edge line {ln!r}")
        e = tuple(int(p) for p in parts)
        if len(e) != k:
            raise ValueError(f"edge {e} is not a {k}-set")
        if any(a >= b for a, b in zip(e, e[1:])):
            raise ValueError(f"edge {e} is not strictly increasing")
        if edges and e <= edges[-1]:
            raise ValueError(f"edges out of lexicographic order at {e}")
        edges.append(e)
    return Hypergraph.from_edges(n, k, edges)


def write_file(h: Hypergraph, path: str, budget: "Budget | int | None" = None) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps(h, budget))


def read_file(path: str) -> Hypergraph:
    with open(path, "r", encoding="ascii") as fh:
        return loads(fh.read())
