import math

import pytest
from hypothesis import assume, given, settings, strategies as st

from prime_sqfree.arith import build_modulus_context as ctx_of
from prime_sqfree.asymptotics import (
    Regime,
    RegimeConfig,
    bound_B,
    build_report,
    choose_D,
    choose_D_unclamped,
    class_divisor,
    classify_regime,
    derived_error,
    envelope_E,
    main_term,
    positivity_conditions,
    predicted_N_q,
    predicted_s_q,
)
from prime_sqfree.counting import ProblemInstance, count_N_q, count_exact, pi_q, s_q
from prime_sqfree.errors import DegenerateRange

CFG = RegimeConfig()


@pytest.mark.parametrize(
    "q,P,regime",
    [
        (2, 10**6, Regime.SMALL),
        (10**4, 10**6, Regime.MEDIUM),
        (10**5, 10**6, Regime.LARGE),
        (1, 2, Regime.SMALL),
        # P^{3/4} ties go to LargeQ
        (1000, 10**4, Regime.LARGE),
        (999, 10**4, Regime.MEDIUM),
        (8, 16, Regime.LARGE),
    ],
)
def test_classify_regime(q, P, regime):
    assert classify_regime(q, P, CFG) is regime


def test_small_regime_boundary_is_inclusive():
    P = 10**6
    edge = math.log(P) ** 2  # ~190.87
    assert classify_regime(math.floor(edge), P) is Regime.SMALL
    assert classify_regime(math.floor(edge) + 1, P) is Regime.MEDIUM


def test_degenerate_range():
    with pytest.raises(DegenerateRange):
        classify_regime(3, 2)


def test_config_validation():
    with pytest.raises(ValueError):
        RegimeConfig(A=0)
    with pytest.raises(ValueError):
        RegimeConfig(o1_factor=-1)


def test_envelope_examples():
    assert envelope_E(2, 100) == 50.0
    assert envelope_E(10**4, 10**6) == pytest.approx(1000 + 10**3.9, rel=1e-12)
    # LargeQ at the exact boundary q = P^{3/4} (P = 10^8, q = 10^6)
    expect = 10 ** (8 * 31 / 32 - 6 * 0.495) + 10 ** (8 * 5 / 6 - 6 * 0.37)
    assert classify_regime(10**6, 10**8) is Regime.LARGE
    assert envelope_E(10**6, 10**8) == pytest.approx(expect, rel=1e-12)
    assert envelope_E(2, 100, RegimeConfig(o1_factor=3.0)) == 150.0


def test_bound_B_examples():
    assert bound_B(2, 100) == 50.0
    assert bound_B(10**3, 10**6) == pytest.approx(10**4.5 + 10**5.55, rel=1e-12)
    expect = (10 ** (6 * 15 / 16) + 10**1.5 * 10**4) * 10**0.06
    assert bound_B(10**6, 10**6) == pytest.approx(expect, rel=1e-12)
    with pytest.raises(ValueError):
        bound_B(1, 100)


def test_choose_D_examples():
    assert choose_D(2, 10**6, 100) == 10.0
    raw = math.sqrt(10**12 / (10**6 * 100 + 10**5 * 10**4.8))
    assert choose_D_unclamped(10**4, 10**6, 10**6) == pytest.approx(raw, rel=1e-12)
    assert choose_D(10**4, 10**6, 10**6) == pytest.approx(raw, rel=1e-12)
    # LargeQ with tiny S: raw formula < 1, clamped
    assert choose_D_unclamped(10**6, 10**6, 4) < 1
    assert choose_D(10**6, 10**6, 4) == 1.0


@given(st.integers(1, 10**7), st.integers(3, 10**8), st.integers(1, 10**8))
def test_envelopes_positive_and_D_clamped(q, P, S):
    assert envelope_E(q, P) > 0
    if q >= 2:
        assert bound_B(q, P) > 0
    assert 1.0 <= choose_D(q, P, S) <= math.sqrt(S)


@given(st.integers(2, 10**6), st.integers(3, 10**7), st.integers(1, 10**7))
def test_displayed_E_majorises_derived_bound(q, P, S):
    lhs = derived_error(q, P, S)
    assert lhs <= math.sqrt(S) * (envelope_E(q, P) + 1) * (1 + 1e-12)


@settings(max_examples=200)
@given(st.integers(2, 10**6), st.integers(3, 10**7))
def test_envelope_continuous_within_regime(q, P):
    nxt = q + 1
    assume(classify_regime(q, P) is classify_regime(nxt, P))
    a, b = envelope_E(q, P), envelope_E(nxt, P)
    assert abs(a - b) / a < 1.0 / q + 1e-12


def test_main_term_examples():
    assert main_term(3, 10, 10) == 5.0
    assert main_term(1, 10, 10) == 28.0
    assert main_term(3, 1, 10) == 0.0
    assert main_term(3, 10, 10, normalization="phi") == 7.5
    with pytest.raises(ValueError):
        class_divisor(3, "tau")


@given(st.integers(2, 2000), st.integers(1, 2000))
def test_main_term_exact_for_trivial_modulus(P, S):
    assert main_term(1, P, S) == count_exact(ProblemInstance(1, 1, P, S))


def test_predicted_s_q_examples():
    assert predicted_s_q(1, 10**6) == pytest.approx(607927.1018540267, rel=1e-12)
    assert predicted_s_q(2, 10**6) == pytest.approx(0.5 * 6 / math.pi**2 / 0.75 * 10**6, rel=1e-12)
    # Q(10^k) for k = 1..6: 7, 61, 608, 6083, 60794, 607926 (OEIS A071172)
    assert [s_q(10**k, ctx_of(1)) for k in range(1, 7)] == [7, 61, 608, 6083, 60794, 607926]
    assert abs(predicted_s_q(1, 1) - 1) < 1


def test_predicted_s_q_against_euler_product():
    # truncated product over p < 10^5 agrees with the zeta(2) conversion to ~1e-5
    from prime_sqfree.arith import build_sieve

    primes = build_sieve(10**5).primes.tolist()
    for q in (1, 6, 35, 101):
        dens = ctx_of(q).phi / q
        for p in primes:
            if q % p:
                dens *= 1 - 1 / p**2
        assert predicted_s_q(q, 1.0) == pytest.approx(dens, rel=1e-5)


def test_predicted_N_q_examples():
    assert predicted_N_q(3, 10, 10) == 20.0
    assert count_N_q(10, 10, ctx_of(3)) == 21
    assert predicted_N_q(1, 10, 10) == 40.0
    assert predicted_N_q(2, 10, 100) == 150.0


@given(st.integers(1, 3000), st.integers(2, 3000), st.integers(1, 3000))
def test_predicted_N_q_remainder(q, P, S):
    ctx = ctx_of(q)
    gap = abs(count_N_q(P, S, ctx) - predicted_N_q(q, P, S, ctx))
    assert gap <= pi_q(P, ctx) * ctx.tau + 1e-9


def test_positivity_examples():
    small = positivity_conditions(2, 10**6, 100)
    assert small.holds and small.regime is Regime.SMALL
    # S = 1 < P^eps fails condition (1)
    assert not positivity_conditions(2, 10**6, 1).holds
    med = positivity_conditions(10**4, 10**6, 10**4)
    lhs1, rhs1 = 2 * 4, 0.01 * 10 + 4
    lhs2, rhs2 = 4 * 6 + 20 * 4, 0.01 * 10 + 25 * 4
    assert med.holds == (lhs1 >= rhs1 and lhs2 >= rhs2)
    assert not positivity_conditions(10**6, 10**6, 1).holds


def test_positivity_constant():
    q, P, S = 2, 10**6, 2
    assert positivity_conditions(q, P, S).holds
    assert not positivity_conditions(q, P, S, RegimeConfig(positivity_constant=10.0)).holds


def test_build_report_examples():
    rep = build_report(ProblemInstance(1, 3, 10, 10))
    assert (rep.exact, rep.main_term, rep.abs_error) == (7, 5.0, 2.0)
    assert rep.normalized_error == pytest.approx(2.0 / (math.sqrt(10) * envelope_E(3, 10)))
    assert build_report(ProblemInstance(1, 1, 10, 10)).abs_error == 0


def test_build_report_regression_row():
    rep = build_report(ProblemInstance(1, 101, 10**5, 10**5))
    # recorded by the toolkit itself
    assert rep.exact == 5773489
    assert rep.regime is Regime.SMALL
    assert math.isfinite(rep.normalized_error)
    assert rep.normalized_error == pytest.approx(0.18225379360562188, rel=1e-12)
    assert not rep.q_beyond_poly
