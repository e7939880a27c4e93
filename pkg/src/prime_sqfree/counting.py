"""Exact counts of prime times square-free representations of a residue class.

The fast paths never loop over (p, s) pairs.  Both factors are reduced to
residue histograms modulo q:

* ``prime_inverse_counts`` -- how many primes p <= P have a given inverse
  residue p^-1 mod q;
* square-free s <= S bucketed by s mod q (or, without the square-free
  restriction, a closed-form count per residue).

Then ``ps = a (mod q)`` iff ``s = a * p^-1 (mod q)``, so each count is a dot
product of the two histograms.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .arith import (
    ModulusContext,
    SieveTables,
    batch_mod_inverse,
    build_modulus_context,
    coprime_mask,
    get_tables,
    mod_inverse,
)
from .errors import InvalidResidue


@dataclass(frozen=True)
class ProblemInstance:
    """One counting problem: residue a modulo q, prime bound P, square-free bound S."""

    a: int
    q: int
    P: int
    S: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"modulus must be >= 1, got q={self.q}")
        if math.gcd(self.a, self.q) != 1:
            raise InvalidResidue(f"gcd({self.a}, {self.q}) != 1")
        if not 1 <= self.a <= self.q:
            raise ValueError(f"residue must satisfy 1 <= a <= q, got a={self.a}, q={self.q}")
        if self.P < 2 or self.S < 1:
            raise ValueError(f"need P >= 2 and S >= 1, got P={self.P}, S={self.S}")

    @property
    def ctx(self) -> ModulusContext:
        return build_modulus_context(self.q)


def _tables(tables: Optional[SieveTables], n: int) -> SieveTables:
    if tables is None:
        return get_tables(max(n, 1))
    return tables


def _check_residue(a: int, q: int) -> None:
    if math.gcd(a, q) != 1:
        raise InvalidResidue(f"gcd({a}, {q}) != 1")


def pi_q(P: int, ctx: ModulusContext, tables: Optional[SieveTables] = None) -> int:
    """Number of primes p <= P with gcd(p, q) = 1."""
    if P < 2:
        return 0
    tabs = _tables(tables, P)
    return tabs.prime_count(P) - sum(1 for p in ctx.prime_divisors if p <= P)


def coprime_count(S: int, ctx: ModulusContext) -> int:
    """#{1 <= s <= S : gcd(s, q) = 1}, by inclusion-exclusion over d | q."""
    return sum(m * (S // d) for d, m in ctx.squarefree_divisors())


def _squarefree_coprime(S: int, ctx: ModulusContext, tabs: SieveTables) -> np.ndarray:
    keep = tabs.squarefree[: S + 1] & coprime_mask(S, ctx.prime_divisors)
    return np.flatnonzero(keep)


def s_q(S: int, ctx: ModulusContext, tables: Optional[SieveTables] = None) -> int:
    """Number of square-free s <= S with gcd(s, q) = 1."""
    if S < 1:
        return 0
    tabs = _tables(tables, S)
    keep = tabs.squarefree[: S + 1] & coprime_mask(S, ctx.prime_divisors)
    return int(np.count_nonzero(keep))


def count_N_q(P: int, S: int, ctx: ModulusContext, tables: Optional[SieveTables] = None) -> int:
    """#{(p, s) : p <= P, s <= S, gcd(ps, q) = 1}."""
    return pi_q(P, ctx, tables) * coprime_count(S, ctx)


def squarefree_residue_counts(
    q: int, S: int, ctx: Optional[ModulusContext] = None, tables: Optional[SieveTables] = None
) -> np.ndarray:
    """Length-q histogram of square-free s <= S coprime to q, by s mod q."""
    ctx = ctx or build_modulus_context(q)
    tabs = _tables(tables, S)
    return np.bincount(_squarefree_coprime(S, ctx, tabs) % q, minlength=q)


def prime_inverse_counts(
    q: int, P: int, ctx: Optional[ModulusContext] = None, tables: Optional[SieveTables] = None
) -> np.ndarray:
    """Length-q histogram of p^-1 mod q over primes p <= P coprime to q."""
    ctx = ctx or build_modulus_context(q)
    tabs = _tables(tables, P)
    primes = tabs.primes_upto(P)
    if ctx.prime_divisors:
        primes = primes[np.isin(primes, ctx.prime_divisors, invert=True)]
    return np.bincount(batch_mod_inverse(primes, q), minlength=q)


def _residue_totals(t: np.ndarray, q: int, S: int) -> np.ndarray:
    # #{1 <= s <= S : s = t mod q}; residue 0 is represented by q itself.
    t = np.where(t == 0, q, t)
    return (S - t) // q + 1


class ResidueCounter:
    """Residue histograms for one (q, P, S), reused across residues a.

    >>> c = ResidueCounter(3, 10, 10)
    >>> c.squarefree_count(1), c.all_count(1)
    (7, 10)
    """

    def __init__(self, q: int, P: int, S: int, tables: Optional[SieveTables] = None,
                 squarefree: bool = True):
        self.q, self.P, self.S = q, P, S
        self.ctx = build_modulus_context(q)
        tabs = _tables(tables, max(P, S))
        inv = prime_inverse_counts(q, P, self.ctx, tabs)
        self.inv_residues = np.flatnonzero(inv).astype(np.int64)
        self.inv_weights = inv[self.inv_residues].astype(np.int64)
        self.buckets = squarefree_residue_counts(q, S, self.ctx, tabs) if squarefree else None

    def squarefree_count(self, a: int) -> int:
        idx = (a * self.inv_residues) % self.q
        return int(np.dot(self.inv_weights, self.buckets[idx]))

    def all_count(self, a: int, S: Optional[int] = None) -> int:
        S = self.S if S is None else S
        if S < 1:
            return 0
        idx = (a * self.inv_residues) % self.q
        return int(np.dot(self.inv_weights, _residue_totals(idx, self.q, S)))


def count_exact(inst: ProblemInstance, tables: Optional[SieveTables] = None) -> int:
    """#{(p, s) : p <= P prime, s <= S square-free, gcd(ps, q) = 1, ps = a mod q}."""
    _check_residue(inst.a, inst.q)
    return ResidueCounter(inst.q, inst.P, inst.S, tables).squarefree_count(inst.a)


def count_exact_many(
    a_values: Iterable[int], q: int, P: int, S: int, tables: Optional[SieveTables] = None
) -> list[int]:
    """count_exact for several residues a sharing one (q, P, S)."""
    a_values = list(a_values)
    for a in a_values:
        _check_residue(a, q)
    hist = ResidueCounter(q, P, S, tables)
    return [hist.squarefree_count(a) for a in a_values]


def count_pairs_all(inst: ProblemInstance, tables: Optional[SieveTables] = None) -> int:
    """As count_exact but without the square-free restriction on s."""
    _check_residue(inst.a, inst.q)
    return ResidueCounter(inst.q, inst.P, inst.S, tables, squarefree=False).all_count(inst.a)


def _mobius_terms(inst: ProblemInstance, d_max: int, tabs: SieveTables, hist: ResidueCounter):
    q = inst.q
    for d in range(1, d_max + 1):
        mu = int(tabs.mobius[d])
        if mu == 0 or math.gcd(d, q) != 1:
            continue
        dbar = mod_inverse(d, q)
        yield d, mu * hist.all_count(inst.a * dbar * dbar % q, inst.S // (d * d))


class MobiusSplit(NamedTuple):
    """Truncated Mobius decomposition: ``total = sigma1 + sigma2``."""

    sigma1: int
    sigma2: int
    cutoff: int

    @property
    def total(self) -> int:
        return self.sigma1 + self.sigma2


def mobius_split(
    inst: ProblemInstance, D: float, tables: Optional[SieveTables] = None
) -> MobiusSplit:
    """Split the d-sum at ``cutoff = floor(min(D, sqrt S))``: d <= cutoff vs the tail."""
    _check_residue(inst.a, inst.q)
    root = math.isqrt(inst.S)
    cutoff = min(root, math.floor(D))
    tabs = _tables(tables, max(inst.P, inst.S))
    hist = ResidueCounter(inst.q, inst.P, inst.S, tabs, squarefree=False)
    s1 = s2 = 0
    for d, term in _mobius_terms(inst, root, tabs, hist):
        if d <= cutoff:
            s1 += term
        else:
            s2 += term
    return MobiusSplit(s1, s2, cutoff)


def count_via_mobius(
    inst: ProblemInstance, D_cap: Optional[int] = None, tables: Optional[SieveTables] = None
) -> int:
    """Sum over square-free d coprime to q of mu(d) * N_{a d^-2, q}(P, S // d^2).

    Over the full range d <= sqrt(S) this equals :func:`count_exact` exactly.
    With ``D_cap`` the sum stops at d <= D_cap (see :func:`mobius_split` for
    both halves).
    """
    if D_cap is None:
        D_cap = math.isqrt(inst.S)
    return mobius_split(inst, D_cap, tables).sigma1


def sum_over_residues(q: int, P: int, S: int, tables: Optional[SieveTables] = None) -> int:
    """Total of count_exact over all reduced residues a mod q."""
    ctx = build_modulus_context(q, with_residues=True)
    return sum(count_exact_many(ctx.reduced_residues, q, P, S, tables))


def pairs_ratio(inst: ProblemInstance, tables: Optional[SieveTables] = None) -> float:
    """count_pairs_all / (PS/q + 1); the upper-bound shape without its o(1) factor."""
    return count_pairs_all(inst, tables) / (inst.P * inst.S / inst.q + 1)


def max_pairs_ratio(
    instances: Sequence[ProblemInstance], tables: Optional[SieveTables] = None
) -> tuple[float, Optional[ProblemInstance]]:
    best, arg = 0.0, None
    for inst in instances:
        r = pairs_ratio(inst, tables)
        if r > best:
            best, arg = r, inst
    return best, arg


def sample_residues(q: int, n: int, seed: int) -> list[int]:
    """n distinct reduced residues mod q, reproducible from (seed, q); all of them if n >= phi(q)."""
    ctx = build_modulus_context(q)
    if n >= ctx.phi:
        return [a for a in range(1, q + 1) if math.gcd(a, q) == 1]
    rng = random.Random(f"{seed}:{q}")
    picked: set[int] = set()
    while len(picked) < n:
        a = rng.randrange(1, q)
        if math.gcd(a, q) == 1:
            picked.add(a)
    return sorted(picked)
