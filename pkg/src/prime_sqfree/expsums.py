"""Kloosterman sums over primes and the equidistribution of a * p^-1 mod q.

Primes are first collapsed into a histogram of inverse residues
(``prime_inverse_counts``), so every sum below runs over at most q distinct
phases with exact integer multiplicities.  Phases are always evaluated from
the integer residue t in [0, q), never from a floating product.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .arith import SieveTables, build_modulus_context
from .asymptotics import DEFAULT_CONFIG, RegimeConfig, bound_B, class_divisor
from .counting import ProblemInstance, count_N_q, count_pairs_all, prime_inverse_counts
from .errors import EmptySequence, InvalidResidue

log = logging.getLogger(__name__)

COMPENSATED_THRESHOLD = 10**6


def unit_phases(t: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """cos and sin of 2*pi*t/q for integer residues 0 <= t < q.

    Residues above q/2 are folded onto q - t with the sine negated, so
    e(t/q) and e((q-t)/q) come out exactly conjugate; quarter turns are exact.
    """
    t = np.asarray(t, dtype=np.int64) % q
    upper = 2 * t > q
    u = np.where(upper, q - t, t)
    ang = 2.0 * np.pi * u / q
    c, s = np.cos(ang), np.sin(ang)
    c[2 * u == q], s[2 * u == q] = -1.0, 0.0
    c[4 * u == q], s[4 * u == q] = 0.0, 1.0
    s[u == 0] = 0.0
    c[u == 0] = 1.0
    s[upper] = -s[upper]
    return c, s


def _weighted_sum(weights: np.ndarray, values: np.ndarray) -> float:
    terms = weights * values
    if int(weights.sum()) > COMPENSATED_THRESHOLD:
        return math.fsum(terms.tolist())
    return float(terms.sum())


@dataclass(frozen=True)
class KloostermanValue:
    a: int
    q: int
    x: int
    value: complex
    modulus_abs: float
    trivial_bound: int
    regime_bound: Optional[float]

    @property
    def ratio_trivial(self) -> float:
        return self.modulus_abs / self.trivial_bound if self.trivial_bound else 0.0

    @property
    def ratio_regime(self) -> Optional[float]:
        if self.regime_bound is None:
            return None
        return self.modulus_abs / self.regime_bound


def _inverse_histogram(q: int, x: int, tables: Optional[SieveTables]):
    counts = prime_inverse_counts(q, x, build_modulus_context(q), tables)
    r = np.flatnonzero(counts).astype(np.int64)
    return r, counts[r].astype(np.int64)


def kloosterman_prime_sum(a: int, q: int, x: int, cfg: RegimeConfig = DEFAULT_CONFIG,
                          tables: Optional[SieveTables] = None) -> KloostermanValue:
    """S_q(a; x): sum over primes p <= x coprime to q of e(a * p^-1 / q)."""
    if q < 1:
        raise ValueError(f"modulus must be >= 1, got {q}")
    if math.gcd(a, q) != 1:
        raise InvalidResidue(f"gcd({a}, {q}) != 1")
    if x < 2:
        raise ValueError(f"need x >= 2, got {x}")
    r, w = _inverse_histogram(q, x, tables)
    c, s = unit_phases((a * r) % q, q)
    value = complex(_weighted_sum(w, c), _weighted_sum(w, s))
    return KloostermanValue(
        a=a, q=q, x=x,
        value=value,
        modulus_abs=abs(value),
        trivial_bound=int(w.sum()),
        regime_bound=bound_B(q, x, cfg) if q >= 2 else None,
    )


class ParsevalPair(NamedTuple):
    lhs: float
    rhs: int

    @property
    def relative_gap(self) -> float:
        return abs(self.lhs - self.rhs) / self.rhs if self.rhs else abs(self.lhs)


def parseval_check(q: int, x: int, tables: Optional[SieveTables] = None,
                   chunk_cells: int = 1 << 22) -> ParsevalPair:
    """Sum over every a mod q of |S_q(a; x)|^2, against q * (#pairs with equal p^-1).

    lhs evaluates each of the q exponential sums directly (a = 0 and
    non-reduced a included); rhs is pure integer counting.
    """
    if q < 1 or x < 2:
        raise ValueError(f"need q >= 1 and x >= 2, got q={q}, x={x}")
    r, w = _inverse_histogram(q, x, tables)
    cos_t, sin_t = unit_phases(np.arange(q), q)
    wf = w.astype(np.float64)
    rows = max(1, chunk_cells // max(len(r), 1))
    parts = []
    for start in range(0, q, rows):
        a = np.arange(start, min(start + rows, q), dtype=np.int64)
        idx = (a[:, None] * r[None, :]) % q
        re, im = cos_t[idx] @ wf, sin_t[idx] @ wf
        parts.append(re * re + im * im)
    lhs = math.fsum(np.concatenate(parts).tolist())
    rhs = q * int(np.dot(w, w))
    return ParsevalPair(lhs, rhs)


def inverse_residue_discrepancy(a: int, q: int, P: int,
                                tables: Optional[SieveTables] = None) -> float:
    """Star discrepancy of {a * p^-1 mod q / q : p <= P prime, gcd(p, q) = 1}.

    Exact: with ties grouped, D* = max over distinct points u of
    max(#{<= u}/N - u, u - #{< u}/N), evaluated in integers over the common
    denominator N*q.
    """
    if math.gcd(a, q) != 1:
        raise InvalidResidue(f"gcd({a}, {q}) != 1")
    r, w = _inverse_histogram(q, P, tables)
    n = int(w.sum())
    if n == 0:
        raise EmptySequence(f"no primes <= {P} coprime to {q}")
    if q == 1:
        log.warning("q = 1: every point sits at 0, discrepancy is degenerate (1.0)")
    t = (a * r) % q
    order = np.argsort(t, kind="stable")
    t, w = t[order], w[order]
    after = np.cumsum(w)
    before = after - w
    if n * q >= 2**62:
        raise OverflowError(f"N*q = {n * q} too large for exact int64 evaluation")
    worst = max(int(np.max(after * q - n * t)), int(np.max(n * t - before * q)))
    return worst / (n * q)


def interval_count_error(a: int, q: int, P: int, S: int, normalization: str = "q",
                         tables: Optional[SieveTables] = None) -> float:
    """|N_{a,q}(P, S) - N_q(P, S)/q|; ``normalization="phi"`` divides by phi(q)."""
    ctx = build_modulus_context(q)
    pairs = count_pairs_all(ProblemInstance(a, q, P, S), tables)
    return abs(pairs - count_N_q(P, S, ctx, tables) / class_divisor(q, normalization, ctx))


def interval_error_ratio(a: int, q: int, P: int, S: int, cfg: RegimeConfig = DEFAULT_CONFIG,
                         normalization: str = "q", tables: Optional[SieveTables] = None) -> float:
    """interval_count_error / B_q(P)."""
    return interval_count_error(a, q, P, S, normalization, tables) / bound_B(q, P, cfg)
