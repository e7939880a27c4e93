"""Sieve tables and elementary modular arithmetic.

Everything downstream reads from an immutable :class:`SieveTables` built once
per limit.  The smallest-prime-factor table is produced by a vectorised
Eratosthenes pass; the Mobius values and the square-free bits are then read
off the spf table by repeatedly stripping the smallest prime factor.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import CapacityError, NoInverse

DEFAULT_MEMORY_BUDGET = 2 * 1024**3  # bytes
# Peak bytes per table entry during construction (spf int32, index/quotient
# int64 temporaries, mu int8, squarefree bool).
_BYTES_PER_ENTRY = 24
DEFAULT_SEGMENT_SIZE = 1 << 18
DEFAULT_MAX_SPAN = 10**10
MAX_LIMIT = 2**31


@dataclass(frozen=True, eq=False)
class SieveTables:
    """Per-limit arithmetic tables, indexed directly by n (entry 0 is padding).

    Attributes:
        limit: largest n covered.
        mobius: int8 array, ``mobius[n] = mu(n)`` for 1 <= n <= limit.
        spf: int32 array, smallest prime factor for 2 <= n <= limit (0 below).
        squarefree: bool array, ``squarefree[n] = mu(n)**2``.
        primes: ascending int64 array of the primes <= limit.
    """

    limit: int
    mobius: np.ndarray = field(repr=False)
    spf: np.ndarray = field(repr=False)
    squarefree: np.ndarray = field(repr=False)
    primes: np.ndarray = field(repr=False)

    def prime_count(self, x: int) -> int:
        """pi(x) for x <= limit."""
        if x > self.limit:
            raise CapacityError(f"prime_count({x}) beyond sieve limit {self.limit}")
        return int(np.searchsorted(self.primes, x, side="right"))

    def primes_upto(self, x: int) -> np.ndarray:
        return self.primes[: self.prime_count(x)]


def estimate_sieve_bytes(limit: int) -> int:
    return _BYTES_PER_ENTRY * (limit + 1)


def _spf_table(limit: int) -> np.ndarray:
    spf = np.zeros(limit + 1, dtype=np.int32)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            tail = spf[p * p :: p]
            tail[tail == 0] = p
    n = np.arange(limit + 1, dtype=np.int32)
    unmarked = spf == 0
    unmarked[:2] = False
    spf[unmarked] = n[unmarked]
    return spf


def _mobius_from_spf(spf: np.ndarray) -> np.ndarray:
    limit = len(spf) - 1
    mu = np.ones(limit + 1, dtype=np.int8)
    mu[0] = 0
    idx = np.arange(2, limit + 1, dtype=np.int64)
    cur = idx.copy()
    while idx.size:
        p = spf[cur].astype(np.int64)
        rest = cur // p
        square = rest % p == 0
        mu[idx[square]] = 0
        mu[idx[~square]] *= -1
        keep = ~square & (rest > 1)
        idx = idx[keep]
        cur = rest[keep]
    return mu


def build_sieve(limit: int, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> SieveTables:
    """Build Mobius, spf, square-free and prime tables for 1..limit.

    Raises:
        CapacityError: limit < 1, limit > 2**31, or the estimated peak memory
            exceeds ``memory_budget``.
    """
    if limit < 1:
        raise CapacityError(f"sieve limit must be >= 1, got {limit}")
    if limit > MAX_LIMIT:
        raise CapacityError(f"sieve limit {limit} exceeds 2**31")
    need = estimate_sieve_bytes(limit)
    if need > memory_budget:
        raise CapacityError(
            f"sieve limit {limit} needs ~{need} bytes, budget is {memory_budget}"
        )
    spf = _spf_table(limit)
    mu = _mobius_from_spf(spf)
    squarefree = mu != 0
    n = np.arange(limit + 1, dtype=np.int64)
    primes = n[(spf == n) & (n >= 2)]
    for arr in (spf, mu, squarefree, primes):
        arr.setflags(write=False)
    return SieveTables(limit, mu, spf, squarefree, primes)


_cache_lock = threading.Lock()
_cached: Optional[SieveTables] = None


def get_tables(limit: int) -> SieveTables:
    """Return shared tables covering at least ``limit``, building on demand.

    The largest table built so far is kept and reused for smaller requests.
    """
    global _cached
    with _cache_lock:
        if _cached is None or _cached.limit < limit:
            grow = max(limit, 1 << 12)
            if _cached is not None:
                grow = max(grow, min(2 * _cached.limit, 4 * limit))
            try:
                _cached = build_sieve(grow)
            except CapacityError:
                _cached = build_sieve(limit)
        return _cached


def _small_primes(n: int) -> np.ndarray:
    if n < 2:
        return np.empty(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


def segmented_primes(
    lo: int,
    hi: int,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    max_span: int = DEFAULT_MAX_SPAN,
) -> list[int]:
    """Primes in [lo, hi], sieved block by block.

    Working memory is one block of ``segment_size`` flags plus the base
    primes up to sqrt(hi).
    """
    if not 2 <= lo <= hi:
        raise ValueError(f"need 2 <= lo <= hi, got lo={lo}, hi={hi}")
    if hi - lo + 1 > max_span:
        raise CapacityError(f"range length {hi - lo + 1} exceeds segment budget {max_span}")
    base = _small_primes(math.isqrt(hi))
    out: list[int] = []
    start = lo
    while start <= hi:
        stop = min(start + segment_size, hi + 1)
        flags = np.ones(stop - start, dtype=bool)
        for p in base:
            p = int(p)
            first = max(p * p, -(-start // p) * p)
            if first >= stop:
                if p * p >= stop:
                    break
                continue
            flags[first - start :: p] = False
        out.extend((np.flatnonzero(flags) + start).tolist())
        start = stop
    return out


def mod_inverse(x: int, q: int) -> int:
    """Inverse of x modulo q; 0 for the trivial modulus q = 1."""
    if q < 1:
        raise ValueError(f"modulus must be >= 1, got {q}")
    if q == 1:
        return 0
    try:
        return pow(x, -1, q)
    except ValueError:
        raise NoInverse(f"{x} is not invertible modulo {q} (gcd {math.gcd(x, q)})") from None


def batch_mod_inverse(xs, q: int) -> np.ndarray:
    """Elementwise inverses modulo q, via a vectorised extended Euclid.

    Raises NoInverse if any entry shares a factor with q.
    """
    x = np.asarray(xs, dtype=np.int64) % q
    if q == 1:
        return np.zeros_like(x)
    r0 = np.full_like(x, q)
    r1 = x.copy()
    s0 = np.zeros_like(x)
    s1 = np.ones_like(x)
    live = r1 != 0
    while live.any():
        quot = np.zeros_like(x)
        quot[live] = r0[live] // r1[live]
        r0, r1 = np.where(live, r1, r0), np.where(live, r0 - quot * r1, r1)
        s0, s1 = np.where(live, s1, s0), np.where(live, s0 - quot * s1, s1)
        live = r1 != 0
    if np.any(r0 != 1):
        bad = int(x[np.flatnonzero(r0 != 1)[0]])
        raise NoInverse(f"{bad} is not invertible modulo {q}")
    return s0 % q


def factorize(n: int) -> dict[int, int]:
    """Prime factorisation by trial division (n up to ~1e12 is fine)."""
    if n < 1:
        raise ValueError(f"cannot factorise {n}")
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@dataclass(frozen=True)
class ModulusContext:
    q: int
    phi: int
    tau: int
    prime_divisors: tuple[int, ...]
    reduced_residues: Optional[tuple[int, ...]] = field(default=None, repr=False)

    def is_coprime(self, n: int) -> bool:
        return math.gcd(n, self.q) == 1

    def squarefree_divisors(self) -> list[tuple[int, int]]:
        """(d, mu(d)) for every square-free divisor d of q."""
        out = [(1, 1)]
        for p in self.prime_divisors:
            out += [(d * p, -m) for d, m in out]
        return out


def build_modulus_context(q: int, with_residues: bool = False) -> ModulusContext:
    if q < 1:
        raise ValueError(f"modulus must be >= 1, got {q}")
    fac = factorize(q)
    phi = q
    for p in fac:
        phi = phi // p * (p - 1)
    tau = math.prod(e + 1 for e in fac.values())
    residues = None
    if with_residues:
        residues = tuple(a for a in range(1, q + 1) if math.gcd(a, q) == 1)
    return ModulusContext(q, phi, tau, tuple(sorted(fac)), residues)


def coprime_mask(limit: int, prime_divisors: Sequence[int]) -> np.ndarray:
    """Boolean array over 0..limit marking n >= 1 coprime to the given primes."""
    mask = np.ones(limit + 1, dtype=bool)
    mask[0] = False
    for p in prime_divisors:
        mask[::p] = False
    return mask
