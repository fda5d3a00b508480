"""Seeded Monte Carlo verification of the matching-intersection
concentration inequality and the binomial Chernoff bound, plus a
desk-scale reservoir builder.

Uniform t-matchings are sampled by permuting the ground set and cutting
consecutive k-blocks: every unordered matching has the same fiber size
t! * (k!)^t * (m-tk)!, so the sampler is exactly uniform.  All runs are
reproducible from (parameters, seed); the seed is recorded in every
result.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .core import Budget, Hypergraph, as_budget, mask_of
from .search import SearchBudget, connector_path, _Ticker
from .structures import Matching

_BATCH = 10_000


def sample_uniform_matching(m: int, k: int, t: int, rng: np.random.Generator) -> Matching:
    """A uniform random unordered t-matching of k-subsets of 0..m-1."""
    if m < t * k:
        raise ValueError(f"need m >= t*k, got m={m}, t*k={t * k}")
    perm = rng.permutation(m)
    blocks = tuple(
        tuple(sorted(int(v) for v in perm[i * k:(i + 1) * k])) for i in range(t)
    )
    return Matching(k, blocks)


def _rank_table(m: int, k: int) -> np.ndarray:
    """table[v, i] = C(v, i) for the combinadic rank of sorted k-sets."""
    table = np.zeros((m, k + 1), dtype=np.int64)
    for v in range(m):
        for i in range(k + 1):
            if i <= v:
                table[v, i] = math.comb(v, i)
    return table


def rank_of(edge: Iterable[int], table: np.ndarray) -> int:
    """Colex rank of a strictly increasing k-tuple."""
    return int(sum(table[v, i + 1] for i, v in enumerate(sorted(edge))))


@dataclass(frozen=True)
class BitFamily:
    """A k-set family over 0..m-1 stored as one bit per colex rank."""

    m: int
    k: int
    bits: np.ndarray
    seed: Optional[int] = None

    @property
    def size(self) -> int:
        return int(self.bits.sum())

    @property
    def theta(self) -> Fraction:
        return Fraction(self.size, math.comb(self.m, self.k))

    def __contains__(self, edge) -> bool:
        table = _rank_table(self.m, self.k)
        return bool(self.bits[rank_of(edge, table)])


def random_half_family(m: int, k: int, seed: int) -> BitFamily:
    """A seeded uniform-random family keeping each k-set independently
    with probability 1/2 (theta is exact, close to 1/2)."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xFA111)))
    bits = rng.integers(0, 2, size=math.comb(m, k), dtype=np.uint8)
    return BitFamily(m, k, bits, seed)


def family_from_edges(m: int, k: int, edges: Iterable[Iterable[int]]) -> BitFamily:
    table = _rank_table(m, k)
    bits = np.zeros(math.comb(m, k), dtype=np.uint8)
    for e in edges:
        bits[rank_of(e, table)] = 1
    return BitFamily(m, k, bits)


@dataclass(frozen=True)
class ConcentrationResult:
    m: int
    k: int
    t: int
    gamma: float
    trials: int
    seed: int
    theta: Fraction
    empirical_tail: float
    bound: float
    mean_eta: float
    expectation_check: float
    sigma_hat: float

    def to_json_dict(self) -> dict:
        return {
            "m": self.m,
            "k": self.k,
            "t": self.t,
            "gamma": self.gamma,
            "trials": self.trials,
            "seed": self.seed,
            "theta_num": self.theta.numerator,
            "theta_den": self.theta.denominator,
            "empirical_tail": self.empirical_tail,
            "bound": self.bound,
            "mean_eta": self.mean_eta,
            "expectation_check": self.expectation_check,
            "sigma_hat": self.sigma_hat,
        }


def fk_experiment(
    family: BitFamily,
    t: int,
    gamma: float,
    trials: int,
    seed: int,
    dump: Optional[list] = None,
) -> ConcentrationResult:
    """Empirical tail of | |matching intersect family| - theta*t | over
    uniform random t-matchings, against the 2*exp(-gamma^2/2) bound.

    The bound is reported, not enforced; the caller compares with
    sampling-error margins.
    """
    m, k = family.m, family.k
    if m < t * k:
        raise ValueError(f"need m >= t*k, got m={m}, t*k={t * k}")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xF00D)))
    table = _rank_table(m, k)
    theta = family.theta
    threshold = 2.0 * gamma * math.sqrt(t)
    center = float(theta * t)
    tail = 0
    total = 0.0
    total_sq = 0.0
    base = np.arange(m, dtype=np.int32)
    done = 0
    while done < trials:
        batch = min(_BATCH, trials - done)
        perms = rng.permuted(np.tile(base, (batch, 1)), axis=1)
        blocks = np.sort(perms[:, : t * k].reshape(batch, t, k), axis=2)
        ranks = np.zeros((batch, t), dtype=np.int64)
        for i in range(k):
            ranks += table[blocks[:, :, i], i + 1]
        eta = family.bits[ranks].sum(axis=1).astype(np.float64)
        if dump is not None:
            dump.extend(int(x) for x in eta)
        tail += int(np.count_nonzero(np.abs(eta - center) >= threshold))
        total += float(eta.sum())
        total_sq += float((eta * eta).sum())
        done += batch
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0)
    return ConcentrationResult(
        m=m,
        k=k,
        t=t,
        gamma=gamma,
        trials=trials,
        seed=seed,
        theta=theta,
        empirical_tail=tail / trials,
        bound=2.0 * math.exp(-gamma * gamma / 2.0),
        mean_eta=mean,
        expectation_check=abs(mean - center),
        sigma_hat=math.sqrt(var),
    )


@dataclass(frozen=True)
class ChernoffResult:
    n: int
    p: float
    a: float
    trials: int
    seed: int
    empirical_tail: float
    bound: float
    slack: float

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "a": self.a,
            "trials": self.trials,
            "seed": self.seed,
            "empirical_tail": self.empirical_tail,
            "bound": self.bound,
            "slack": self.slack,
        }


def chernoff_experiment(n: int, p: float, a: float, trials: int, seed: int) -> ChernoffResult:
    """Empirical Pr(|X - np| >= a*np) for binomial X against
    2*exp(-a^2*np/3)."""
    if not (0 < a < 1.5):
        raise ValueError("the bound applies for 0 < a < 3/2")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xB111)))
    mean = n * p
    xs = rng.binomial(n, p, size=trials)
    tail = float(np.count_nonzero(np.abs(xs - mean) >= a * mean)) / trials
    bound = 2.0 * math.exp(-a * a * mean / 3.0)
    return ChernoffResult(n, p, a, trials, seed, tail, bound, bound - tail)


# -- reservoir ----------------------------------------------------------


@dataclass(frozen=True)
class ReservoirReport:
    members: Matching
    min_coverage: int
    worst_pair: tuple[tuple[int, ...], tuple[int, ...]]
    pairs_checked: int


def reservoir_build(
    h: Hypergraph,
    ell: int,
    m_target: int,
    rng: np.random.Generator,
    budget: SearchBudget = SearchBudget(),
    enum_budget: Budget | int | None = None,
) -> ReservoirReport:
    """Sample a random matching of 2k-sets and report the minimum
    per-(L, R) connector coverage across all disjoint end pairs."""
    if m_target * 2 * h.k > h.n:
        raise ValueError(
            f"m_target={m_target} disjoint {2 * h.k}-sets do not fit in n={h.n}"
        )
    members = sample_uniform_matching(h.n, 2 * h.k, m_target, rng)
    b = as_budget(enum_budget)
    ticker = _Ticker(budget)
    min_cov = None
    worst = None
    checked = 0
    for l_end in itertools.combinations(range(h.n), ell):
        lm = mask_of(l_end)
        rest = [v for v in range(h.n) if not (lm >> v) & 1]
        for r_end in itertools.combinations(rest, h.k - ell):
            b.spend()
            pm = lm | mask_of(r_end)
            cov = 0
            for c in members.edges:
                if mask_of(c) & pm:
                    continue
                if connector_path(h, l_end, r_end, c, ticker) is not None:
                    cov += 1
            checked += 1
            if min_cov is None or cov < min_cov:
                min_cov = cov
                worst = (l_end, r_end)
    return ReservoirReport(members, min_cov, worst, checked)
