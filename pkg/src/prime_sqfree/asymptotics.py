"""Main terms, regime-dependent error envelopes, the cutoff D, positivity tests.

Every x^{o(1)} / (PS)^{o(1)} / q^{o(1)} factor of the asymptotic statements is
stood in for by the single ``RegimeConfig.o1_factor``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .arith import ModulusContext, SieveTables, build_modulus_context
from .counting import ProblemInstance, count_exact, pi_q, s_q
from .errors import DegenerateRange

SIX_OVER_PI_SQUARED = 6.0 / math.pi**2
POLY_EXPONENT_FLAG = 10


class Regime(str, enum.Enum):
    SMALL = "SmallQ"
    MEDIUM = "MediumQ"
    LARGE = "LargeQ"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class RegimeConfig:
    """Parameters A, epsilon of the regime split, plus the o(1) stand-in.

    ``positivity_constant`` replaces the implied constant of each ``>>`` in
    :func:`positivity_conditions`.
    """

    A: float = 2.0
    epsilon: float = 0.01
    o1_factor: float = 1.0
    positivity_constant: float = 1.0

    def __post_init__(self):
        for name in ("A", "epsilon", "o1_factor", "positivity_constant"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")


DEFAULT_CONFIG = RegimeConfig()


def _split(q: int, x: float, A: float) -> Regime:
    # q >= x^{3/4} is tested as q^4 >= x^3 so integer boundaries are exact.
    if isinstance(q, int) and isinstance(x, int):
        large = q**4 >= x**3
    else:
        large = q >= x**0.75
    if x > 1 and q <= math.log(x) ** A:
        return Regime.SMALL
    return Regime.LARGE if large else Regime.MEDIUM


def regime_bounds(P: float, cfg: RegimeConfig = DEFAULT_CONFIG) -> tuple[float, float]:
    """The two thresholds ((log P)^A, P^{3/4})."""
    return math.log(P) ** cfg.A, P**0.75


def classify_regime(q: int, P: int, cfg: RegimeConfig = DEFAULT_CONFIG) -> Regime:
    """SmallQ if q <= (log P)^A, LargeQ if q >= P^{3/4}, MediumQ in between.

    q = 1 is always SmallQ.  For P <= 2 and q > 1 the split is ill-posed and
    DegenerateRange is raised.
    """
    if q < 1:
        raise ValueError(f"modulus must be >= 1, got {q}")
    if q == 1:
        return Regime.SMALL
    if P <= 2:
        raise DegenerateRange(f"P={P} gives log P <= 1; regime split undefined for q={q}")
    return _split(q, P, cfg.A)


def envelope_E(q: int, P: int, cfg: RegimeConfig = DEFAULT_CONFIG) -> float:
    """The regime's E (multiplied by o1_factor)."""
    regime = classify_regime(q, P, cfg)
    eps = cfg.epsilon
    if regime is Regime.SMALL:
        E = P / q
    elif regime is Regime.MEDIUM:
        E = P / q**0.75 + P**0.9 / q**0.375
    else:
        E = P ** (31 / 32) / q ** ((1 - eps) / 2) + P ** (5 / 6) / q ** ((0.75 - eps) / 2)
    return E * cfg.o1_factor


def bound_B(q: int, x: int, cfg: RegimeConfig = DEFAULT_CONFIG) -> float:
    """Regime bound B_q(x) for Kloosterman sums over primes (q >= 2, x >= 2).

    The x^{o(1)} factors of the first two branches become o1_factor; the
    third branch carries q^epsilon as written and no o(1) factor.
    """
    if q < 2:
        raise ValueError(f"bound_B needs q >= 2, got {q}")
    if x < 2:
        raise ValueError(f"bound_B needs x >= 2, got {x}")
    regime = _split(q, x, cfg.A)
    if regime is Regime.SMALL:
        return x / q * cfg.o1_factor
    if regime is Regime.MEDIUM:
        return (x / math.sqrt(q) + q**0.25 * x**0.8) * cfg.o1_factor
    return (x ** (15 / 16) + q**0.25 * x ** (2 / 3)) * q**cfg.epsilon


def bound_regime(q: int, x: int, cfg: RegimeConfig = DEFAULT_CONFIG) -> Regime:
    """Which branch of bound_B applies (same split, with x in place of P)."""
    return _split(q, x, cfg.A)


def choose_D_unclamped(q: int, P: int, S: int, cfg: RegimeConfig = DEFAULT_CONFIG) -> float:
    regime = classify_regime(q, P, cfg)
    if regime is Regime.SMALL:
        return math.sqrt(S) * cfg.o1_factor
    if regime is Regime.MEDIUM:
        return math.sqrt(P * S / (P * q**0.5 + q**1.25 * P**0.8)) * cfg.o1_factor
    denom = q ** (1 + cfg.epsilon) * (P ** (15 / 16) + q**0.25 * P ** (2 / 3))
    return math.sqrt(P * S / denom)


def choose_D(q: int, P: int, S: int, cfg: RegimeConfig = DEFAULT_CONFIG) -> float:
    """Cutoff D balancing PS/(qD) against D*B_q(P), clamped to [1, sqrt S]."""
    return min(max(choose_D_unclamped(q, P, S, cfg), 1.0), math.sqrt(S))


def derived_error(q: int, P: int, S: int, cfg: RegimeConfig = DEFAULT_CONFIG) -> float:
    """The error bound before the final simplification to sqrt(S)*E.

    MediumQ: sqrt(P S (P q^{1/2} + q^{5/4} P^{4/5})) / q + sqrt(S), and the
    analogous LargeQ expression; SmallQ: P sqrt(S)/q + sqrt(S).  Compare with
    ``sqrt(S) * envelope_E`` via :func:`envelope_gap`.
    """
    regime = classify_regime(q, P, cfg)
    root = math.sqrt(S)
    if regime is Regime.SMALL:
        val = P * root / q + root
    elif regime is Regime.MEDIUM:
        val = math.sqrt(P * S * (P * q**0.5 + q**1.25 * P**0.8)) / q + root
    else:
        inner = q ** (1 + cfg.epsilon) * (P ** (15 / 16) + q**0.25 * P ** (2 / 3))
        val = math.sqrt(P * S * inner) / q + root
    return val * cfg.o1_factor


def envelope_gap(q: int, P: int, S: int, cfg: RegimeConfig = DEFAULT_CONFIG) -> float:
    """derived_error / (sqrt(S) * E).  Values far above 1 flag a mismatch."""
    return derived_error(q, P, S, cfg) / (math.sqrt(S) * envelope_E(q, P, cfg))


def class_divisor(q: int, normalization: str = "q", ctx: Optional[ModulusContext] = None) -> int:
    """Number of classes a count is spread over: q as printed, or phi(q).

    Pairs with gcd(ps, q) = 1 fall only into the phi(q) reduced classes, so
    "phi" gives the true per-class average; "q" reproduces the printed formula.
    """
    if normalization == "q":
        return q
    if normalization == "phi":
        return (ctx or build_modulus_context(q)).phi
    raise ValueError(f"normalization must be 'q' or 'phi', got {normalization!r}")


def main_term(q: int, P: int, S: int, ctx: Optional[ModulusContext] = None,
              tables: Optional[SieveTables] = None, normalization: str = "q") -> float:
    """pi_q(P) * s_q(S) / q  (or / phi(q) with ``normalization="phi"``)."""
    ctx = ctx or build_modulus_context(q)
    return pi_q(P, ctx, tables) * s_q(S, ctx, tables) / class_divisor(q, normalization, ctx)


def predicted_s_q(q: int, S: float, ctx: Optional[ModulusContext] = None) -> float:
    """Density prediction (phi(q)/q) * prod_{p not | q}(1 - p^-2) * S.

    The infinite product is 6/pi^2 divided by the finitely many factors with p | q.
    """
    ctx = ctx or build_modulus_context(q)
    dens = ctx.phi / q * SIX_OVER_PI_SQUARED
    for p in ctx.prime_divisors:
        dens /= 1.0 - 1.0 / (p * p)
    return dens * S


def predicted_N_q(q: int, P: int, S: int, ctx: Optional[ModulusContext] = None,
                  tables: Optional[SieveTables] = None) -> float:
    """phi(q) * pi_q(P) * S / q."""
    ctx = ctx or build_modulus_context(q)
    return ctx.phi * pi_q(P, ctx, tables) * S / q


class Positivity(NamedTuple):
    holds: bool
    regime: Regime
    condition: str


def positivity_conditions(q: int, P: int, S: int, cfg: RegimeConfig = DEFAULT_CONFIG) -> Positivity:
    """Sufficient condition for a positive count, with each ``>>`` read as ``>= c``.

    Inequalities are compared in log space so large exponents do not overflow.
    """
    regime = classify_regime(q, P, cfg)
    eps, logc = cfg.epsilon, math.log(cfg.positivity_constant)
    lP, lS, lq = math.log(P), math.log(S), math.log(q)
    lPS = lP + lS
    if regime is Regime.SMALL:
        ok = lS >= logc + eps * lP
        text = "S >= c*P^eps"
    elif regime is Regime.MEDIUM:
        ok = (2 * lS >= logc + eps * lPS + lq) and (4 * lP + 20 * lS >= logc + eps * lPS + 25 * lq)
        text = "S^2 >= c*(PS)^eps*q and P^4*S^20 >= c*(PS)^eps*q^25"
    else:
        ok = (lP + 16 * lS >= logc + eps * lPS + 16 * lq) and (
            4 * lP + 12 * lS >= logc + eps * lPS + 15 * lq
        )
        text = "P*S^16 >= c*(PS)^eps*q^16 and P^4*S^12 >= c*(PS)^eps*q^15"
    return Positivity(ok, regime, text)


@dataclass(frozen=True)
class CountReport:
    """Exact count against the main term, normalised by sqrt(S)*E."""

    instance: ProblemInstance
    exact: int
    main_term: float
    abs_error: float
    envelope: float
    normalized_error: float
    regime: Regime
    D: float
    q_beyond_poly: bool = False

    def as_row(self) -> dict:
        i = self.instance
        return {
            "a": i.a, "q": i.q, "P": i.P, "S": i.S,
            "regime": str(self.regime),
            "exact": self.exact,
            "main_term": self.main_term,
            "abs_error": self.abs_error,
            "envelope": self.envelope,
            "normalized_error": self.normalized_error,
            "D": self.D,
        }


def report_from_counts(inst: ProblemInstance, exact: int, main: float,
                       cfg: RegimeConfig = DEFAULT_CONFIG) -> CountReport:
    regime = classify_regime(inst.q, inst.P, cfg)
    envelope = math.sqrt(inst.S) * envelope_E(inst.q, inst.P, cfg)
    err = abs(exact - main)
    return CountReport(
        instance=inst,
        exact=exact,
        main_term=main,
        abs_error=err,
        envelope=envelope,
        normalized_error=err / envelope,
        regime=regime,
        D=choose_D(inst.q, inst.P, inst.S, cfg),
        q_beyond_poly=math.log(inst.q) > POLY_EXPONENT_FLAG * math.log(inst.P),
    )


def build_report(inst: ProblemInstance, cfg: RegimeConfig = DEFAULT_CONFIG,
                 tables: Optional[SieveTables] = None, normalization: str = "q") -> CountReport:
    exact = count_exact(inst, tables)
    main = main_term(inst.q, inst.P, inst.S, tables=tables, normalization=normalization)
    return report_from_counts(inst, exact, main, cfg)
