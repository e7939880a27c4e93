"""Invariant checks run by ``prime-sqfree selftest`` and the acceptance tests.

Each ``check_*`` returns a :class:`CheckResult`; failing cases are listed with
their full inputs.  Checks that read sieve data accept a ``tables`` argument
so a corrupted table can be injected.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .arith import SieveTables, _small_primes, build_modulus_context, get_tables, segmented_primes
from .asymptotics import (
    DEFAULT_CONFIG,
    RegimeConfig,
    class_divisor,
    classify_regime,
    envelope_E,
    predicted_s_q,
)
from .counting import (
    ProblemInstance,
    ResidueCounter,
    count_N_q,
    count_exact,
    count_exact_many,
    count_via_mobius,
    pi_q,
    s_q,
    sample_residues,
)
from .expsums import (
    interval_count_error,
    inverse_residue_discrepancy,
    kloosterman_prime_sum,
    parseval_check,
)

SEED = 20240601
MAX_LISTED = 10


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    failures: list[str] = field(default_factory=list)
    elapsed: float = 0.0
    table: list[dict] = field(default_factory=list)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _result(name: str, failures: list[str], detail: str, **kw) -> CheckResult:
    return CheckResult(name, not failures, detail, failures[:MAX_LISTED], **kw)


def check_squarefree_identity(limit: int = 10**5, tables: Optional[SieveTables] = None) -> CheckResult:
    """sum_{d^2 | n} mu(d) against a prime-square sieve, for all n <= limit."""
    tabs = tables or get_tables(limit)
    mu = tabs.mobius.astype(np.int64)
    lhs = np.zeros(limit + 1, dtype=np.int64)
    for d in range(1, math.isqrt(limit) + 1):
        lhs[d * d :: d * d] += mu[d]
    indicator = np.ones(limit + 1, dtype=np.int64)
    indicator[0] = 0
    for p in _small_primes(math.isqrt(limit)):
        indicator[p * p :: p * p] = 0
    bad = np.flatnonzero(lhs[1:] != indicator[1:]) + 1
    fails = [f"n={n}: sum={lhs[n]} indicator={indicator[n]}" for n in bad[:MAX_LISTED]]
    return _result("squarefree-identity", fails, f"n <= {limit}, {len(bad)} mismatches")


def check_divisor_identity(limit: int = 10**5, tables: Optional[SieveTables] = None) -> CheckResult:
    """sum_{d | n} mu(d) = [n = 1] for all n <= limit."""
    tabs = tables or get_tables(limit)
    mu = tabs.mobius.astype(np.int64)
    acc = np.zeros(limit + 1, dtype=np.int64)
    for d in range(1, limit + 1):
        if mu[d]:
            acc[d::d] += mu[d]
    expect = np.zeros(limit + 1, dtype=np.int64)
    expect[1] = 1
    bad = np.flatnonzero(acc[1:] != expect[1:]) + 1
    fails = [f"n={n}: sum={acc[n]}" for n in bad[:MAX_LISTED]]
    return _result("divisor-identity", fails, f"n <= {limit}, {len(bad)} mismatches")


def check_segmented(limit: int = 10**5, tables: Optional[SieveTables] = None) -> CheckResult:
    tabs = tables or get_tables(limit)
    seg = segmented_primes(2, limit, segment_size=4096)
    ok = seg == tabs.primes_upto(limit).tolist()
    fails = [] if ok else [f"segmented_primes(2, {limit}) differs from sieve primes"]
    return _result("segmented-primes", fails, f"[2, {limit}], {len(seg)} primes")


def mobius_instances(n: int = 200, seed: int = SEED, q_max: int = 500,
                     P_max: int = 5000, S_max: int = 5000) -> list[ProblemInstance]:
    """Seeded random instances plus the corners S = 1, q = 1, a = q - 1."""
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        q = rng.randint(1, q_max)
        a = rng.randint(1, q)
        if math.gcd(a, q) != 1:
            continue
        out.append(ProblemInstance(a, q, rng.randint(2, P_max), rng.randint(1, S_max)))
    out += [
        ProblemInstance(1, 7, 100, 1),
        ProblemInstance(1, 1, P_max, S_max),
        ProblemInstance(1, 1, 10, 1),
        ProblemInstance(6, 7, P_max, S_max),
        ProblemInstance(q_max - 1, q_max, P_max, S_max),
        ProblemInstance(1, 2, P_max, S_max),
        ProblemInstance(100, 101, P_max, 1),
    ]
    return out


def check_mobius_decomposition(instances: Optional[Sequence[ProblemInstance]] = None,
                               tables: Optional[SieveTables] = None) -> CheckResult:
    instances = list(instances or mobius_instances())
    tabs = tables or get_tables(max(max(i.P, i.S) for i in instances))
    fails = []
    for inst in instances:
        direct, via = count_exact(inst, tabs), count_via_mobius(inst, tables=tabs)
        if direct != via:
            fails.append(f"{inst}: count_exact={direct} count_via_mobius={via}")
    return _result("mobius-decomposition", fails, f"{len(instances)} instances")


def check_partition(q_max: int = 60, P: int = 10**4, S: int = 10**4,
                    tables: Optional[SieveTables] = None) -> CheckResult:
    tabs = tables or get_tables(max(P, S))
    fails = []
    for q in range(1, q_max + 1):
        ctx = build_modulus_context(q, with_residues=True)
        total = sum(count_exact_many(ctx.reduced_residues, q, P, S, tabs))
        expect = pi_q(P, ctx, tabs) * s_q(S, ctx, tabs)
        if total != expect:
            fails.append(f"q={q} P={P} S={S}: sum={total} pi_q*s_q={expect}")
    return _result("partition", fails, f"q <= {q_max}, P = {P}, S = {S}")


def check_N_q_remainder(q_max: int = 1000, Ps: Sequence[int] = (10**3, 10**4),
                        Ss: Sequence[int] = (10**3, 10**4),
                        tables: Optional[SieveTables] = None) -> CheckResult:
    tabs = tables or get_tables(max(max(Ps), max(Ss)))
    fails, worst = [], 0.0
    for q in range(1, q_max + 1):
        ctx = build_modulus_context(q)
        for P in Ps:
            pq = pi_q(P, ctx, tabs)
            for S in Ss:
                # exact rational comparison: |q*N - phi*pi*S| <= q*pi*tau
                gap = abs(q * count_N_q(P, S, ctx, tabs) - ctx.phi * pq * S)
                if pq:
                    worst = max(worst, gap / (q * pq * ctx.tau))
                if gap > q * pq * ctx.tau:
                    fails.append(f"q={q} P={P} S={S}: |N_q - pred| = {gap / q} > {pq * ctx.tau}")
    return _result("N_q-remainder", fails, f"q <= {q_max}, max |diff|/(pi_q*tau) = {worst:.4f}")


def check_s_q_shape(qs: Sequence[int] = (1, 2, 3, 4, 6, 12, 101, 1000),
                    Ss: Sequence[int] = (10**3, 10**4, 10**5, 10**6),
                    tables: Optional[SieveTables] = None) -> CheckResult:
    """|s_q - prediction|/sqrt(S) <= 4 tau(q), and not strictly increasing along the S ladder."""
    tabs = tables or get_tables(max(Ss))
    fails, rows = [], []
    for q in qs:
        ctx = build_modulus_context(q)
        ratios = [abs(s_q(S, ctx, tabs) - predicted_s_q(q, S, ctx)) / math.sqrt(S) for S in Ss]
        rows += [{"q": q, "S": S, "ratio": r} for S, r in zip(Ss, ratios)]
        for S, r in zip(Ss, ratios):
            if r > 4 * ctx.tau:
                fails.append(f"q={q} S={S}: ratio {r:.4g} > 4*tau = {4 * ctx.tau}")
        if all(b > a for a, b in zip(ratios, ratios[1:])):
            fails.append(f"q={q}: ratios grow monotonically {['%.4g' % r for r in ratios]}")
    worst = max(r["ratio"] for r in rows)
    return _result("s_q-shape", fails, f"max ratio {worst:.4g}", table=rows)


def check_kloosterman(q_max: int = 50, x: int = 10**4, rel_tol: float = 1e-9,
                      tables: Optional[SieveTables] = None) -> CheckResult:
    """Trivial bound and S_q(q - a) = conj S_q(a), tolerance relative to pi_q(x)."""
    tabs = tables or get_tables(x)
    fails = []
    for q in range(1, q_max + 1):
        vals = {a: kloosterman_prime_sum(a, q, x, tables=tabs)
                for a in range(1, q + 1) if math.gcd(a, q) == 1}
        for a, k in vals.items():
            slack = rel_tol * max(k.trivial_bound, 1)
            if k.modulus_abs > k.trivial_bound + slack:
                fails.append(f"q={q} a={a} x={x}: |S|={k.modulus_abs} > {k.trivial_bound}")
            if a < q:
                mirror = vals[q - a].value
                if abs(mirror - k.value.conjugate()) > slack:
                    fails.append(f"q={q} a={a} x={x}: S(q-a)={mirror} != conj {k.value}")
    return _result("kloosterman-bound-symmetry", fails, f"q <= {q_max}, x = {x}")


def check_parseval(q_max: int = 100, x: int = 10**4, rel_tol: float = 1e-6,
                   tables: Optional[SieveTables] = None) -> CheckResult:
    tabs = tables or get_tables(x)
    fails, worst = [], 0.0
    for q in range(1, q_max + 1):
        pair = parseval_check(q, x, tabs)
        worst = max(worst, pair.relative_gap)
        if pair.relative_gap > rel_tol:
            fails.append(f"q={q} x={x}: lhs={pair.lhs} rhs={pair.rhs}")
    return _result("parseval", fails, f"q <= {q_max}, x = {x}, max rel gap {worst:.3g}")


def trend_table(qs: Sequence[int] = (101, 10007), ladder: Sequence[int] = (10**4, 10**5, 10**6),
                n_residues: int = 20, seed: int = SEED, cfg: RegimeConfig = DEFAULT_CONFIG,
                normalization: str = "q", tables: Optional[SieveTables] = None) -> list[dict]:
    """Max over sampled residues of |exact - main| / (sqrt(S) E), along P = S."""
    tabs = tables or get_tables(max(ladder))
    rows = []
    for q in qs:
        ctx = build_modulus_context(q)
        residues = sample_residues(q, n_residues, seed)
        for P in ladder:
            S = P
            counter = ResidueCounter(q, P, S, tabs)
            main = pi_q(P, ctx, tabs) * s_q(S, ctx, tabs) / class_divisor(q, normalization, ctx)
            env = math.sqrt(S) * envelope_E(q, P, cfg)
            errs = [abs(counter.squarefree_count(a) - main) for a in residues]
            worst = max(range(len(errs)), key=errs.__getitem__)
            rows.append({
                "q": q, "P": P, "S": S,
                "regime": str(classify_regime(q, P, cfg)),
                "main_term": main,
                "envelope": env,
                "max_abs_error": errs[worst],
                "argmax_a": residues[worst],
                "max_normalized_error": errs[worst] / env,
            })
    return rows


def check_trend(qs: Sequence[int] = (101, 10007), ladder: Sequence[int] = (10**4, 10**5, 10**6),
                n_residues: int = 20, factor: float = 2.0, cfg: RegimeConfig = DEFAULT_CONFIG,
                normalization: str = "q", tables: Optional[SieveTables] = None) -> CheckResult:
    rows = trend_table(qs, ladder, n_residues, cfg=cfg, normalization=normalization, tables=tables)
    fails = []
    for q in qs:
        vals = [r for r in rows if r["q"] == q]
        for lo, hi in zip(vals, vals[1:]):
            if hi["max_normalized_error"] > factor * lo["max_normalized_error"]:
                fails.append(
                    f"q={q}: P=S={lo['P']} -> {hi['P']} normalized error "
                    f"{lo['max_normalized_error']:.4g} -> {hi['max_normalized_error']:.4g} "
                    f"(x{hi['max_normalized_error'] / lo['max_normalized_error']:.3g} > {factor})"
                )
    return _result(f"trend[{normalization}]", fails,
                   f"q in {list(qs)}, P = S in {list(ladder)}", table=rows)


def check_discrepancy_mechanism(qs: Sequence[int] = (101, 1009), P: int = 10**5, S: int = 10**5,
                                n_residues: int = 20, normalization: str = "q",
                                tables: Optional[SieveTables] = None) -> CheckResult:
    """interval_count_error <= D* * pi_q(P) + 1 on sampled residues."""
    tabs = tables or get_tables(max(P, S))
    fails, rows = [], []
    for q in qs:
        ctx = build_modulus_context(q)
        pq = pi_q(P, ctx, tabs)
        for a in sample_residues(q, n_residues, SEED):
            err = interval_count_error(a, q, P, S, normalization, tabs)
            bound = inverse_residue_discrepancy(a, q, P, tabs) * pq + 1
            rows.append({"q": q, "a": a, "error": err, "bound": bound})
            if err > bound:
                fails.append(f"a={a} q={q} P={P} S={S}: error {err:.6g} > D*pi_q+1 = {bound:.6g}")
    worst = max(r["error"] / r["bound"] for r in rows)
    return _result(f"discrepancy-mechanism[{normalization}]", fails,
                   f"q in {list(qs)}, P = S = {P}, max error/bound {worst:.4g}", table=rows)


def acceptance_checks(normalization: str = "q") -> list[tuple[str, Callable[[], CheckResult]]]:
    """The numbered acceptance criteria at their stated scales."""
    return [
        ("1", check_squarefree_identity),
        ("2", check_mobius_decomposition),
        ("3", check_partition),
        ("4", check_N_q_remainder),
        ("5", check_s_q_shape),
        ("6", check_kloosterman),
        ("7", check_parseval),
        ("8", lambda: check_trend(normalization=normalization)),
        ("9", lambda: check_discrepancy_mechanism(normalization=normalization)),
    ]


def run_all(normalization: str = "q") -> list[CheckResult]:
    checks = [("0a", check_divisor_identity), ("0b", check_segmented)]
    results = []
    for label, fn in checks + acceptance_checks(normalization):
        t0 = time.perf_counter()
        res = fn()
        res.elapsed = time.perf_counter() - t0
        res.name = f"{label}:{res.name}"
        results.append(res)
    return results
