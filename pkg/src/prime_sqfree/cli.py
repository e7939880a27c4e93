"""Command-line front end: count, sweep, regimes, kloosterman, selftest.

Exit codes: 0 success, 1 usage error, 2 selftest failure, 3 capacity refusal.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .arith import build_modulus_context, get_tables
from .asymptotics import (
    RegimeConfig,
    bound_B,
    build_report,
    choose_D,
    classify_regime,
    envelope_E,
    main_term,
    positivity_conditions,
    regime_bounds,
    report_from_counts,
)
from .counting import ProblemInstance, ResidueCounter, sample_residues
from .errors import CapacityError, PrimeSqfreeError
from .expsums import kloosterman_prime_sum
from . import selftest

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT, EXIT_CAPACITY = 0, 1, 2, 3

SWEEP_COLUMNS = ["a", "q", "P", "S", "regime", "exact", "main_term", "abs_error",
                 "envelope", "normalized_error", "D", "elapsed_ms"]
_INT_COLUMNS = {"a", "q", "P", "S", "exact"}
_STR_COLUMNS = {"regime"}

DEFAULTS = {
    "A": 2.0, "epsilon": 0.01, "o1": 1.0, "format": None, "out": None, "seed": 0,
    "sample": None, "threads": 1, "max_instances": 1_000_000, "normalization": "q",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt_real(x) -> str:
    if x is None:
        return ""
    return f"{x:.12g}"


def fmt_cell(key: str, value) -> str:
    if key in _INT_COLUMNS or key in _STR_COLUMNS:
        return str(value)
    return fmt_real(value)


def render_csv(rows: Sequence[dict], columns: Sequence[str] = SWEEP_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt_cell(c, row[c]) for c in columns])
    return buf.getvalue()


def parse_csv(text: str) -> list[dict]:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in rec.items():
            if k in _INT_COLUMNS:
                row[k] = int(v)
            elif k in _STR_COLUMNS:
                row[k] = v
            else:
                row[k] = float(v) if v else None
        rows.append(row)
    return rows


def render_json(rows) -> str:
    def clean(row):
        return {k: (float(fmt_real(v)) if isinstance(v, float) else v) for k, v in row.items()}

    if isinstance(rows, dict):
        return json.dumps(clean(rows), indent=2) + "\n"
    return json.dumps([clean(r) for r in rows], indent=2) + "\n"


def parse_int_list(spec: str) -> list[int]:
    """'3', '3,5,7', '2-60', '2-10,101' -> sorted unique ints."""
    out: set[int] = set()
    for part in str(spec).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.update(range(int(lo), int(hi) + 1))
        else:
            out.add(int(part))
    if not out:
        raise UsageError(f"empty list {spec!r}")
    return sorted(out)


def parse_ladder(spec: str) -> list[int]:
    """'1000' or '10,100' (explicit) or 'start:ratio:count' (geometric)."""
    spec = str(spec)
    if ":" not in spec:
        return parse_int_list(spec)
    start_s, ratio_s, count_s = spec.split(":")
    start, ratio, count = int(float(start_s)), float(ratio_s), int(count_s)
    if count < 1 or ratio <= 1 or start < 1:
        raise UsageError(f"ladder {spec!r} needs start >= 1, ratio > 1, count >= 1")
    if ratio.is_integer():
        return [start * int(ratio) ** k for k in range(count)]
    return [round(start * ratio**k) for k in range(count)]


@dataclass(frozen=True)
class SweepSpec:
    q_values: list[int]
    P_values: list[int]
    S_values: list[int]
    a_policy: tuple  # ("all",) | ("fixed", a) | ("sample", n, seed)
    cfg: RegimeConfig
    normalization: str = "q"

    def residues(self, q: int) -> list[int]:
        kind = self.a_policy[0]
        if kind == "fixed":
            a = self.a_policy[1]
            if math.gcd(a, q) != 1 or not 1 <= a <= q:
                raise UsageError(f"fixed residue a={a} is not a reduced residue mod {q}")
            return [a]
        if kind == "sample":
            return sample_residues(q, self.a_policy[1], self.a_policy[2])
        return [a for a in range(1, q + 1) if math.gcd(a, q) == 1]

    def estimate(self) -> int:
        per_q = 0
        for q in self.q_values:
            kind = self.a_policy[0]
            phi = build_modulus_context(q).phi
            per_q += 1 if kind == "fixed" else min(phi, self.a_policy[1]) if kind == "sample" else phi
        return per_q * len(self.P_values) * len(self.S_values)


def _sweep_group(spec: SweepSpec, q: int, P: int, S: int) -> list[dict]:
    t0 = time.perf_counter()
    residues = spec.residues(q)
    counter = ResidueCounter(q, P, S)
    main = main_term(q, P, S, normalization=spec.normalization)
    setup_ms = (time.perf_counter() - t0) * 1000 / max(len(residues), 1)
    rows = []
    for a in residues:
        t1 = time.perf_counter()
        rep = report_from_counts(ProblemInstance(a, q, P, S), counter.squarefree_count(a), main, spec.cfg)
        row = rep.as_row()
        row["elapsed_ms"] = setup_ms + (time.perf_counter() - t1) * 1000
        rows.append(row)
    return rows


def run_sweep(spec: SweepSpec, threads: int = 1, max_instances: int = DEFAULTS["max_instances"]) -> list[dict]:
    """Rows ordered by (q, P, S, a)."""
    if not (spec.q_values and spec.P_values and spec.S_values):
        raise UsageError("sweep ladders must be nonempty")
    n = spec.estimate()
    if n > max_instances:
        raise CapacityError(f"sweep would produce {n} rows, cap is {max_instances}")
    get_tables(max(max(spec.P_values), max(spec.S_values)))
    groups = [(q, P, S) for q in spec.q_values for P in spec.P_values for S in spec.S_values]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        chunks = list(pool.map(lambda g: _sweep_group(spec, *g), groups))
    return [row for chunk in chunks for row in chunk]


# -- argument handling ------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file mirroring the flags")
    p.add_argument("--A", type=float, help="regime threshold exponent (default 2)")
    p.add_argument("--epsilon", type=float, help="LargeQ exponent epsilon (default 0.01)")
    p.add_argument("--o1", type=float, help="stand-in for every o(1) factor (default 1.0)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--threads", type=int)
    p.add_argument("--max-instances", dest="max_instances", type=int)
    p.add_argument("--normalization", choices=["q", "phi"],
                   help="divide main terms by q (as printed, default) or by phi(q)")


_CONVERTERS = {
    "a": int, "q": str, "P": str, "S": str, "x": int, "A": float, "epsilon": float, "o1": float,
    "format": str, "out": str, "seed": int, "sample": int, "threads": int,
    "max_instances": int, "normalization": str,
}


def read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if key not in _CONVERTERS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _CONVERTERS[key](value)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="prime-sqfree", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("count", help="exact count vs main term for one (a, q, P, S)")
    p.add_argument("--a", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--P", type=int)
    p.add_argument("--S", type=int)
    _common(p)

    p = sub.add_parser("sweep", help="grid of CountReports as CSV/JSON")
    p.add_argument("--q", help="moduli, e.g. '3', '3,5,7', '2-60'")
    p.add_argument("--P", help="P ladder: list or start:ratio:count")
    p.add_argument("--S", help="S ladder: list or start:ratio:count")
    p.add_argument("--a", type=int, help="fixed residue (default: all reduced residues)")
    p.add_argument("--sample", type=int, help="sample this many reduced residues per q")
    p.add_argument("--seed", type=int)
    _common(p)

    p = sub.add_parser("regimes", help="regime boundaries and E, B, D along a q ladder")
    p.add_argument("--P", type=int)
    p.add_argument("--S", type=int, help="S used for D (default P)")
    p.add_argument("--q", help="q values (default: powers of 2 up to P)")
    _common(p)

    p = sub.add_parser("kloosterman", help="S_q(a; x) against its trivial and regime bounds")
    p.add_argument("--a", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--x", type=int)
    _common(p)

    p = sub.add_parser("selftest", help="run the invariant suite")
    _common(p)
    return parser


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Flags override the config file, which overrides built-in defaults."""
    file_values = read_config(args.config) if getattr(args, "config", None) else {}
    for key in set(DEFAULTS) | set(_CONVERTERS):
        if getattr(args, key, None) is None:
            setattr(args, key, file_values.get(key, DEFAULTS.get(key)))
    return args


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command}: missing --{', --'.join(missing)}")


def _cfg(args) -> RegimeConfig:
    try:
        return RegimeConfig(A=args.A, epsilon=args.epsilon, o1_factor=args.o1)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(text: str, args) -> None:
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _kv(pairs) -> str:
    return "".join(f"{k}={v}\n" for k, v in pairs)


def cmd_count(args) -> int:
    _require(args, "a", "q", "P", "S")
    cfg = _cfg(args)
    inst = ProblemInstance(args.a, int(args.q), int(args.P), int(args.S))
    rep = build_report(inst, cfg, normalization=args.normalization)
    row = rep.as_row()
    if args.format == "json":
        _emit(render_json(row), args)
    elif args.format == "csv":
        _emit(render_csv([row], SWEEP_COLUMNS[:-1]), args)
    else:
        _emit(_kv([
            ("exact", rep.exact),
            ("main", fmt_real(rep.main_term)),
            ("abs_error", fmt_real(rep.abs_error)),
            ("envelope", fmt_real(rep.envelope)),
            ("normalized_error", fmt_real(rep.normalized_error)),
            ("regime", rep.regime),
            ("D", fmt_real(rep.D)),
        ] + ([("warning", "q > P^10")] if rep.q_beyond_poly else [])), args)
    return EXIT_OK


def sweep_spec_from_args(args) -> SweepSpec:
    _require(args, "q", "P", "S")
    if args.a is not None and args.sample is not None:
        raise UsageError("--a and --sample are mutually exclusive")
    if args.a is not None:
        policy = ("fixed", args.a)
    elif args.sample is not None:
        if args.sample < 1:
            raise UsageError("--sample must be >= 1")
        policy = ("sample", args.sample, args.seed)
    else:
        policy = ("all",)
    return SweepSpec(parse_int_list(args.q), parse_ladder(args.P), parse_ladder(args.S),
                     policy, _cfg(args), args.normalization)


def cmd_sweep(args) -> int:
    spec = sweep_spec_from_args(args)
    rows = run_sweep(spec, args.threads, args.max_instances)
    _emit(render_json(rows) if args.format == "json" else render_csv(rows), args)
    return EXIT_OK


def regime_rows(P: int, S: int, qs: Sequence[int], cfg: RegimeConfig) -> list[dict]:
    rows = []
    for q in qs:
        pos = positivity_conditions(q, P, S, cfg)
        rows.append({
            "q": q,
            "regime": str(classify_regime(q, P, cfg)),
            "E": envelope_E(q, P, cfg),
            "B": bound_B(q, P, cfg) if q >= 2 else None,
            "D": choose_D(q, P, S, cfg),
            "positive": pos.holds,
        })
    return rows


def cmd_regimes(args) -> int:
    _require(args, "P")
    cfg = _cfg(args)
    P = int(args.P)
    S = int(args.S) if args.S is not None else P
    if P <= 2:
        raise UsageError("regimes needs P >= 3")
    if args.q is not None:
        qs = parse_int_list(args.q)
    else:
        qs = [2**k for k in range(1, P.bit_length())]
    small, large = regime_bounds(P, cfg)
    rows = regime_rows(P, S, qs, cfg)
    if args.format == "json":
        _emit(json.dumps({"P": P, "S": S, "log_P_pow_A": small, "P_pow_3_4": large,
                          "rows": rows}, indent=2) + "\n", args)
        return EXIT_OK
    cols = ["q", "regime", "E", "B", "D", "positive"]
    lines = [f"# P={P} S={S} A={cfg.A} epsilon={cfg.epsilon}",
             f"# (log P)^A = {fmt_real(small)}  P^(3/4) = {fmt_real(large)}"]
    if args.format == "csv":
        body = render_csv([{**r, "positive": int(r["positive"])} for r in rows], cols)
        _emit("\n".join(lines) + "\n" + body, args)
        return EXIT_OK
    lines.append(f"{'q':>12} {'regime':>8} {'E':>20} {'B':>20} {'D':>20} positive")
    for r in rows:
        lines.append(f"{r['q']:>12} {r['regime']:>8} {fmt_real(r['E']):>20} "
                     f"{fmt_real(r['B']):>20} {fmt_real(r['D']):>20} {r['positive']}")
    _emit("\n".join(lines) + "\n", args)
    return EXIT_OK


def cmd_kloosterman(args) -> int:
    _require(args, "a", "q", "x")
    cfg = _cfg(args)
    k = kloosterman_prime_sum(args.a, int(args.q), args.x, cfg)
    row = {
        "a": k.a, "q": k.q, "x": k.x,
        "real": k.value.real, "imag": k.value.imag,
        "abs": k.modulus_abs,
        "trivial_bound": k.trivial_bound,
        "regime_bound": k.regime_bound,
        "ratio_regime": k.ratio_regime,
        "ratio_trivial": k.ratio_trivial,
    }
    if args.format == "json":
        _emit(render_json(row), args)
    else:
        _emit(_kv((key, fmt_real(v) if isinstance(v, float) else ("" if v is None else v))
                  for key, v in row.items()), args)
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = selftest.run_all(args.normalization)
    lines = []
    for res in results:
        lines.append(res.line())
        lines += [f"    {f}" for f in res.failures]
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} checks passed")
    _emit("\n".join(lines) + "\n", args)
    return EXIT_OK if n_pass == len(results) else EXIT_INVARIANT


COMMANDS = {
    "count": cmd_count,
    "sweep": cmd_sweep,
    "regimes": cmd_regimes,
    "kloosterman": cmd_kloosterman,
    "selftest": cmd_selftest,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = resolve(args)
        return COMMANDS[args.command](args)
    except CapacityError as exc:
        print(f"capacity refused: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (UsageError, PrimeSqfreeError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
