"""Parity-type extremal families, their degree calculus, and the
codegree threshold function.

The two-sided family over a bipartition (A, B) keeps exactly the k-sets
whose intersection with A has a prescribed parity; the threshold is the
maximum minimum ell-degree over the admissible members of that family.
Every closed form here has an enumeration twin so the tests never trust
a formula against itself.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import NamedTuple

from .core import Budget, Hypergraph, as_budget, bits_of, check_vertex_set, comb0, mask_of


class IllDefinedCase(ValueError):
    """The closed-form threshold case conditions do not apply."""


@dataclass(frozen=True)
class ExtremalSpec:
    """A bipartition (A, complement) plus parity type eta.

    eta = 1 keeps the k-sets meeting A in an odd number of vertices,
    eta = 0 the even ones.
    """

    n: int
    k: int
    a: tuple[int, ...]
    eta: int
    a_mask: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (2 <= self.k <= self.n):
            raise ValueError(f"need 2 <= k <= n, got k={self.k}, n={self.n}")
        if self.eta not in (0, 1):
            raise ValueError(f"eta must be 0 or 1, got {self.eta}")
        a = check_vertex_set(self.a, self.n)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "a_mask", mask_of(a))

    @property
    def b(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.n) if not (self.a_mask >> v) & 1)

    def flipped(self) -> "ExtremalSpec":
        return ExtremalSpec(self.n, self.k, self.a, 1 - self.eta)


def eta_set(spec: ExtremalSpec, s) -> int:
    """Parity of |S intersect A|."""
    vs = check_vertex_set(s, spec.n)
    return (mask_of(vs) & spec.a_mask).bit_count() & 1


def eta_mask(spec: ExtremalSpec, mask: int) -> int:
    return (mask & spec.a_mask).bit_count() & 1


def edge_count(spec: ExtremalSpec) -> int:
    a = len(spec.a)
    return sum(
        comb0(a, i) * comb0(spec.n - a, spec.k - i)
        for i in range(spec.k + 1)
        if (i & 1) == spec.eta
    )


def build_extremal(spec: ExtremalSpec) -> Hypergraph:
    """Implicit hypergraph with membership |e intersect A| = eta (mod 2)."""
    amask, eta = spec.a_mask, spec.eta

    def pred(mask: int, _a=amask, _eta=eta) -> bool:
        return (mask & _a).bit_count() & 1 == _eta

    def complement_hook(_spec=spec) -> Hypergraph:
        return build_extremal(_spec.flipped())

    def restrict_hook(table: tuple[int, ...], _spec=spec) -> Hypergraph:
        new_a = tuple(i for i, old in enumerate(table) if (_spec.a_mask >> old) & 1)
        return build_extremal(ExtremalSpec(len(table), _spec.k, new_a, _spec.eta))

    return Hypergraph.from_predicate(
        spec.n,
        spec.k,
        pred,
        structure="extremal",
        meta={
            "spec": spec,
            "complement": complement_hook,
            "restrict": restrict_hook,
            "count": lambda _spec=spec: edge_count(_spec),
        },
    )


class FParity(NamedTuple):
    value: int
    in_hext: bool


def f_parity(spec: ExtremalSpec) -> FParity:
    """The parity invariant eta * (n/k) + |A| mod 2; value 1 marks the
    obstructed (extremal-family) side."""
    if spec.n % spec.k != 0:
        raise ValueError(f"k={spec.k} does not divide n={spec.n}")
    f = (spec.eta * (spec.n // spec.k) + len(spec.a)) % 2
    return FParity(f, f == 1)


def in_hext(spec: ExtremalSpec) -> bool:
    """Direct membership test in the obstructed family: odd-type graphs
    with n/k - |A| odd, even-type graphs with |A| odd."""
    if spec.n % spec.k != 0:
        raise ValueError(f"k={spec.k} does not divide n={spec.n}")
    if spec.eta == 1:
        return (spec.n // spec.k - len(spec.a)) % 2 == 1
    return len(spec.a) % 2 == 1


def delta_ell_extremal(a: int, n: int, k: int, ell: int, eta: int) -> int:
    """Closed-form minimum ell-degree of the parity family with |A| = a.

    For an ell-set with j vertices in A, the degree is the binomial sum
    over completions whose A-part i keeps i + j = eta (mod 2); the
    minimum scans the feasible j-range.
    """
    if not (0 <= a <= n):
        raise ValueError(f"need 0 <= a <= n, got a={a}, n={n}")
    if not (1 <= ell <= k - 1):
        raise ValueError(f"need 1 <= ell <= k-1, got ell={ell}")
    if eta not in (0, 1):
        raise ValueError(f"eta must be 0 or 1, got {eta}")
    lo = max(0, ell - (n - a))
    hi = min(ell, a)
    best = None
    for j in range(lo, hi + 1):
        deg = sum(
            comb0(a - j, i) * comb0(n - a - ell + j, k - ell - i)
            for i in range(k - ell + 1)
            if (i + j) & 1 == eta
        )
        if best is None or deg < best:
            best = deg
    return best


@dataclass(frozen=True)
class ThresholdReport:
    n: int
    k: int
    ell: int
    value: Fraction
    argmax: tuple[tuple[int, int], ...]
    method: str
    case: str = ""

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "ell": self.ell,
            "value_num": self.value.numerator,
            "value_den": self.value.denominator,
            "argmax": [{"a": a, "eta": eta} for a, eta in self.argmax],
            "method": self.method,
            "case": self.case,
        }


def _formula_case(n: int, k: int) -> tuple[str, Fraction]:
    half_n = Fraction(n, 2)
    if k % 2 == 0 and (k // 2) % 2 == 0 and (n // k) % 2 == 1:
        return "k/2 even and n/k odd", half_n - k + 2
    if k % 2 == 1:
        if n % 2 == 0:
            raise IllDefinedCase(
                f"(n-1)/2 parity is ill-defined for odd k={k} and even n={n}; "
                "use enumeration mode"
            )
        if ((n - 1) // 2) % 2 == 1:
            return "k odd and (n-1)/2 odd", half_n - k + Fraction(3, 2)
        return "k odd and (n-1)/2 even", half_n - k + Fraction(1, 2)
    return "otherwise", half_n - k + 1


def delta_threshold(n: int, k: int, ell: int, method: str = "enumeration") -> ThresholdReport:
    """Maximum minimum ell-degree over the admissible parity families.

    Enumeration mode scans every (|A|, eta) passing the admissibility
    parity filter; formula mode evaluates the published codegree
    piecewise form and is only available for ell = k-1.
    """
    if n % k != 0:
        raise ValueError(f"k={k} does not divide n={n}")
    if not (1 <= ell <= k - 1):
        raise ValueError(f"need 1 <= ell <= k-1, got ell={ell}")
    if method == "formula":
        if ell != k - 1:
            raise ValueError(
                "formula mode supports only ell = k-1; smaller ell has no known closed form"
            )
        case, value = _formula_case(n, k)
        return ThresholdReport(n, k, ell, value, (), "formula", case)
    if method != "enumeration":
        raise ValueError(f"unknown method {method!r}")
    t = n // k
    best: Fraction | None = None
    argmax: list[tuple[int, int]] = []
    for a in range(n + 1):
        for eta in (1, 0):
            if eta == 1 and (t - a) % 2 != 1:
                continue
            if eta == 0 and a % 2 != 1:
                continue
            val = Fraction(delta_ell_extremal(a, n, k, ell, eta))
            if best is None or val > best:
                best = val
                argmax = [(a, eta)]
            elif val == best:
                argmax.append((a, eta))
    if best is None:
        raise ValueError(f"no admissible (a, eta) for n={n}, k={k}")
    argmax.sort(key=lambda ae: (ae[0], -ae[1]))
    return ThresholdReport(n, k, ell, best, tuple(argmax), "enumeration")


def min_ell_degree_brute(spec: ExtremalSpec, ell: int, budget: Budget | int | None = None) -> int:
    """Independent oracle: direct min over all ell-sets by completion
    enumeration against the membership predicate."""
    b = as_budget(budget)
    amask, eta, n, k = spec.a_mask, spec.eta, spec.n, spec.k
    best = None
    for s in itertools.combinations(range(n), ell):
        smask = mask_of(s)
        rest = [v for v in range(n) if not (smask >> v) & 1]
        deg = 0
        for t in itertools.combinations(rest, k - ell):
            b.spend()
            if ((smask | mask_of(t)) & amask).bit_count() & 1 == eta:
                deg += 1
        if best is None or deg < best:
            best = deg
            if best == 0:
                break
    return best


def spec_minus(spec: ExtremalSpec, removed) -> ExtremalSpec:
    """The spec induced on V minus the removed vertices, relabeled
    order-preservingly to 0..n'-1."""
    rm = mask_of(check_vertex_set(removed, spec.n))
    keep = [v for v in range(spec.n) if not (rm >> v) & 1]
    new_a = tuple(i for i, old in enumerate(keep) if (spec.a_mask >> old) & 1)
    return ExtremalSpec(len(keep), spec.k, new_a, spec.eta)


def hext_specs(n: int, k: int, balanced_a: bool = False) -> list[ExtremalSpec]:
    """All members of the obstructed family on 0..n-1 with A a prefix.

    One representative per (|A|, eta); every member is a relabeling of
    one of these.
    """
    t = n // k
    out = []
    for a in range(n + 1):
        if balanced_a and a != (n + 1) // 2:
            continue
        for eta in (1, 0):
            if eta == 1 and (t - a) % 2 == 1:
                out.append(ExtremalSpec(n, k, tuple(range(a)), 1))
            if eta == 0 and a % 2 == 1:
                out.append(ExtremalSpec(n, k, tuple(range(a)), 0))
    return out


def f_zero_specs(n: int, k: int) -> list[ExtremalSpec]:
    """One representative per (|A|, eta) with parity invariant 0."""
    out = []
    for a in range(n + 1):
        for eta in (1, 0):
            spec = ExtremalSpec(n, k, tuple(range(a)), eta)
            if f_parity(spec).value == 0:
                out.append(spec)
    return out
