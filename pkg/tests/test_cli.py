import json
import math
import subprocess
import sys

import numpy as np
import pytest

from prime_sqfree import selftest
from prime_sqfree.arith import SieveTables, build_sieve
from prime_sqfree.cli import (
    SWEEP_COLUMNS,
    main,
    parse_csv,
    parse_int_list,
    parse_ladder,
    render_csv,
)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def kv(text):
    return dict(line.split("=", 1) for line in text.splitlines())


def test_count_example(capsys):
    code, out, _ = run(capsys, "count", "--a", "1", "--q", "3", "--P", "10", "--S", "10")
    assert code == 0
    vals = kv(out)
    assert vals["exact"] == "7" and float(vals["main"]) == 5.0
    assert vals["regime"] == "SmallQ"
    assert float(vals["envelope"]) == pytest.approx(math.sqrt(10) * 10 / 3)


def test_count_trivial_modulus(capsys):
    code, out, _ = run(capsys, "count", "--a", "1", "--q", "1", "--P", "10", "--S", "10")
    assert code == 0 and kv(out)["abs_error"] == "0"


def test_count_json(capsys):
    code, out, _ = run(capsys, "count", "--a", "1", "--q", "3", "--P", "10", "--S", "10", "--format", "json")
    row = json.loads(out)
    assert code == 0 and row["exact"] == 7 and row["regime"] == "SmallQ"


@pytest.mark.parametrize(
    "argv",
    [
        ["count", "--a", "2", "--q", "4", "--P", "10", "--S", "10"],
        ["count", "--a", "1", "--q", "3"],
        ["count", "--a", "1", "--q", "3", "--P", "10", "--S", "10", "--A", "-1"],
        ["sweep", "--q", "3", "--P", "10", "--S", "10", "--a", "1", "--sample", "2"],
        ["sweep", "--q", "3", "--P", "10:1:3", "--S", "10"],
        ["bogus"],
    ],
)
def test_usage_errors_exit_1(capsys, argv):
    code = main(argv) if argv != ["bogus"] else None
    if code is None:
        with pytest.raises(SystemExit) as exc:
            main(argv)
        code = exc.value.code
    assert code == 1
    assert capsys.readouterr().err


def test_invalid_residue_is_named(capsys):
    _, _, err = run(capsys, "count", "--a", "2", "--q", "4", "--P", "10", "--S", "10")
    assert "InvalidResidue" in err


def test_sweep_all_reduced(capsys):
    code, out, _ = run(capsys, "sweep", "--q", "3", "--P", "10", "--S", "10")
    rows = parse_csv(out)
    assert code == 0
    assert out.splitlines()[0] == ",".join(SWEEP_COLUMNS)
    assert [(r["a"], r["exact"]) for r in rows] == [(1, 7), (2, 8)]


def test_sweep_row_order(capsys):
    _, out, _ = run(capsys, "sweep", "--q", "5,3", "--P", "10,20", "--S", "10", "--threads", "4")
    keys = [(r["q"], r["P"], r["S"], r["a"]) for r in parse_csv(out)]
    assert keys == sorted(keys) and len(keys) == 2 * 2 + 4 * 2


def strip_elapsed(text):
    return [line.rsplit(",", 1)[0] for line in text.splitlines()]


def test_sweep_sample_reproducible(capsys):
    argv = ["sweep", "--q", "10007", "--P", "1000", "--S", "1000", "--sample", "5", "--seed", "42"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv, "--threads", "3")
    assert len(parse_csv(first)) == 5
    assert strip_elapsed(first) == strip_elapsed(second)


def test_ladder_semantics():
    assert parse_ladder("1000:10:4") == [10**3, 10**4, 10**5, 10**6]
    assert parse_ladder("1e3:10:2") == [1000, 10000]
    assert parse_ladder("100:1.5:3") == [100, 150, 225]
    assert parse_int_list("2-5,101,3") == [2, 3, 4, 5, 101]


def test_csv_round_trip_byte_identical(capsys, tmp_path):
    path = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--q", "2-12", "--P", "100:10:2", "--S", "50,700", "--out", str(path))
    assert code == 0
    text = path.read_text()
    assert render_csv(parse_csv(text)) == text


def test_json_fields_match_csv(capsys):
    _, out, _ = run(capsys, "sweep", "--q", "7", "--P", "100", "--S", "100", "--format", "json")
    rows = json.loads(out)
    assert len(rows) == 6
    assert all(list(r) == SWEEP_COLUMNS for r in rows)


def test_sweep_cap_refused(capsys):
    code, _, err = run(capsys, "sweep", "--q", "2-200", "--P", "100", "--S", "100", "--max-instances", "10")
    assert code == 3
    assert "cap is 10" in err


def test_regimes_table(capsys):
    code, out, _ = run(capsys, "regimes", "--P", "1000000")
    assert code == 0
    assert "190.868331977" in out and "31622.7766017" in out
    for label in ("SmallQ", "MediumQ", "LargeQ"):
        assert label in out


def test_regimes_degenerate_band(capsys):
    code, out, _ = run(capsys, "regimes", "--P", "10", "--A", "10", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["log_P_pow_A"] > doc["P_pow_3_4"]
    assert {r["regime"] for r in doc["rows"]} <= {"SmallQ", "LargeQ"}


def test_kloosterman_cli(capsys):
    code, out, _ = run(capsys, "kloosterman", "--a", "1", "--q", "1", "--x", "10")
    vals = kv(out)
    assert code == 0
    assert float(vals["real"]) == 4 and float(vals["imag"]) == 0
    assert float(vals["ratio_trivial"]) == 1.0
    _, out, _ = run(capsys, "kloosterman", "--a", "1", "--q", "101", "--x", "100000", "--format", "json")
    assert json.loads(out)["ratio_trivial"] < 1
    assert run(capsys, "kloosterman", "--a", "3", "--q", "6", "--x", "10")[0] == 1


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# regime settings\nA = 1\nformat = json\n")
    _, out, _ = run(capsys, "regimes", "--P", "1000000", "--q", "20", "--config", str(cfg))
    assert json.loads(out)["rows"][0]["regime"] == "MediumQ"
    _, out, _ = run(capsys, "regimes", "--P", "1000000", "--q", "20", "--config", str(cfg), "--A", "2")
    assert json.loads(out)["rows"][0]["regime"] == "SmallQ"
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert run(capsys, "regimes", "--P", "100", "--config", str(bad))[0] == 1


def corrupted(limit, n):
    t = build_sieve(limit)
    mu = t.mobius.copy()
    mu[n] = -mu[n] if mu[n] else 1
    return SieveTables(t.limit, mu, t.spf, t.squarefree, t.primes)


def test_injected_mobius_corruption_is_reported():
    assert selftest.check_squarefree_identity(10**4).passed
    res = selftest.check_squarefree_identity(10**4, corrupted(10**4, 7))
    assert not res.passed
    # mu(7) feeds every multiple of 49
    assert res.failures[0].startswith("n=49:")


def test_selftest_exit_codes_and_determinism(capsys):
    code, first, _ = run(capsys, "selftest")
    _, second, _ = run(capsys, "selftest")
    assert first == second
    assert code == 2
    failed = [l for l in first.splitlines() if l.startswith("[FAIL]")]
    assert [l.split(":")[0] for l in failed] == ["[FAIL] 8", "[FAIL] 9"]
    code, out, _ = run(capsys, "selftest", "--normalization", "phi")
    assert code == 0 and "11/11 checks passed" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "prime_sqfree", "count", "--a", "1", "--q", "3",
                           "--P", "10", "--S", "10"], capture_output=True, text=True)
    assert proc.returncode == 0 and "exact=7" in proc.stdout
