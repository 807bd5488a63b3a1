import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from pgk.errors import HypothesisError, InapplicableError
from pgk.gaps import (
    LIMINF_CAPTION,
    Quantity,
    gap_bound_check,
    implication_check,
    quantity_value,
    record_scan,
    scan_witnesses,
    witness_sides,
)
from pgk.numerics import PrecisionPolicy


@pytest.mark.parametrize(
    "n,q,lhs,rhs,witness",
    [(1, "1", 1, 2, True), (4, "n", 9, 7, False), (3, "n", 1, 5, True)],
)
def test_witness_sides_examples(primes, n, q, lhs, rhs, witness):
    s = witness_sides(n, 1, q, primes=primes)
    assert s.lhs.is_exact and s.lhs.lo == lhs
    assert s.rhs.is_exact and s.rhs.lo == rhs
    assert s.is_witness is witness and s.prec_bits == 53


def test_bertrand_range(primes):
    r = scan_witnesses(1, "1", (1, 10**4), primes=primes)
    assert r.witness_count == 10**4 and r.indeterminate_count == 0


def test_witnesses_x1_qn_match_integer_oracle(primes, small_primes):
    r = scan_witnesses(1, "n", (1, 100), primes=primes)
    ps = small_primes
    expected = [n for n in range(1, 101) if not n * ps[n] >= (n + 2) * ps[n - 1]]
    assert r.witnesses.tolist() == expected
    assert 4 not in expected
    exact = scan_witnesses(1, "n", (1, 100), primes=primes, method="exact")
    assert exact.witnesses.tolist() == expected


@pytest.mark.parametrize("x", ["0.5", "0.25", "2", "-0.5", "1/3"])
@pytest.mark.parametrize("q", ["1", "n", "p", "n*log(n)"])
def test_witnesses_match_decimal_oracle(primes, small_primes, x, q):
    first = 2 if q == "n*log(n)" else 1
    r = scan_witnesses(x, q, (first, 600), primes=primes)
    assert r.indeterminate_count == 0
    assert r.start == first
    assert r.witnesses.tolist() == oracles.witnesses(Fraction(x), q, first, 600, small_primes)


def test_half_power_with_q_p_golden(primes):
    # every index is a witness: q_n = p_n makes the left side negative
    for policy in (PrecisionPolicy(), PrecisionPolicy((128, 256))):
        r = scan_witnesses("0.5", "p", (1, 10**4), policy, primes=primes)
        assert r.witness_count == 10**4
        assert [d.count for d in r.per_decade] == [9, 90, 900, 9000, 1]
        assert r.every_decade_has_witness and r.last_in_top_decile


def test_scan_start_moves_past_nonpositive_q(primes):
    r = scan_witnesses(1, "n*log(n)", (1, 50), primes=primes)
    assert r.start == 2 and r.range == (1, 50)
    assert r.witness_count == sum(d.count for d in r.per_decade)


def test_exact_path_restrictions(primes):
    with pytest.raises(InapplicableError):
        scan_witnesses("0.5", "1", (1, 10), primes=primes, method="exact")
    with pytest.raises(InapplicableError):
        scan_witnesses(1, "log(n+1)", (1, 10), primes=primes, method="exact")


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5000), st.integers(0, 400), st.sampled_from(["1", "n", "p", "n^2", "p/n"]), st.sampled_from([1, 2, 0]))
def test_exact_and_interval_paths_agree(primes, first, span, q, x):
    a = scan_witnesses(x, q, (first, first + span), primes=primes, method="exact")
    b = scan_witnesses(x, q, (first, first + span), primes=primes)
    assert b.indeterminate_count == 0
    assert np.array_equal(a.witnesses, b.witnesses)


def test_report_invariants(primes):
    r = scan_witnesses("0.5", "n", (1, 5000), primes=primes, chunk_size=777, threads=3)
    assert r.witness_count == sum(d.count for d in r.per_decade) == len(r.witnesses)
    assert r.last_witness <= 5000
    assert r.first_witnesses == r.witnesses[:10].tolist()
    rows = r.rows
    assert (rows.lhs_hi[rows.verdict == 1] < rows.rhs_lo[rows.verdict == 1]).all()
    serial = scan_witnesses("0.5", "n", (1, 5000), primes=primes)
    assert np.array_equal(serial.witnesses, r.witnesses)
    for name in ("lhs_lo", "lhs_hi", "rhs_lo", "rhs_hi", "verdict", "prec_bits"):
        assert np.array_equal(getattr(serial.rows, name), getattr(rows, name))


def test_bound_examples(primes):
    b = gap_bound_check("B1", 1, q="1", primes=primes)
    assert b.gap.lo == 1 and b.bound.lo == 2 and b.holds
    b = gap_bound_check("B1", 4, q="n", primes=primes)
    assert b.gap.lo == 4 and b.bound.lo == Fraction(7, 2) and not b.holds
    b2 = gap_bound_check("B2", 2, x=1, q="n", primes=primes)
    b1 = gap_bound_check("B1", 2, q="n", primes=primes)
    assert b2.gap.lo == b1.gap.lo == 2
    assert b2.bound.lo == b1.bound.lo == 3 and b2.holds


@pytest.mark.parametrize("n,x,q", [(1, 1, "1"), (3, 1, "n"), (10, "0.5", "p"), (50, "0.25", "n*log(n)")])
def test_implication_examples(primes, n, x, q):
    assert implication_check(n, x, q, primes=primes)


def test_implication_refuses_non_witness(primes):
    with pytest.raises(ValueError):
        implication_check(4, 1, "n", primes=primes)


def test_implication_on_sampled_witnesses(primes):
    rng = random.Random(7)
    for x in ("0.5", "2", "0.25"):
        for q in ("n", "p", "n*log(n)"):
            r = scan_witnesses(x, q, (2, 3000), primes=primes)
            for n in rng.sample(r.witnesses.tolist(), 20):
                assert implication_check(n, x, q, primes=primes)


# records ----------------------------------------------------------------------------


def test_q3_half_first_records(primes):
    s = record_scan("power_gap", "0.5", (1, 1000), primes=primes)
    first, second = s.event(0), s.event(1)
    assert first.n == 1 and first.p_n == 2
    assert Fraction(3178, 10**4) < first.value.lo and first.value.hi < Fraction(3179, 10**4)
    # sqrt(3) - sqrt(2) from integer square roots
    ref = oracles.sqrt_diff_floor(2, 3)
    assert first.value.lo <= ref + Fraction(2, 10**40) and ref <= first.value.hi
    assert first.value.width < Fraction(1, 10**9)
    assert second.n == 5 and second.p_n == 11
    ref = oracles.sqrt_diff_floor(11, 13)
    assert first.value.lo > second.value.hi
    assert second.value.lo <= ref + Fraction(2, 10**40) and ref <= second.value.hi
    # frozen value: sqrt(13) - sqrt(11) = 0.28892648510858...
    assert Fraction(28892, 10**5) < second.value.lo and second.value.hi < Fraction(28893, 10**5)
    assert s.tag == "Q3(1/2)"


def test_q1_records_are_exact_gap_ratios(primes, small_primes):
    s = record_scan("gap_over_px", 1, (1, 1500), primes=primes)
    assert s.event(0).n == 1 and s.event(0).value.contains(Fraction(1, 2))
    # brute-force running minimum with Fractions
    best, expected = None, []
    for n in range(1, 1501):
        v = Fraction(small_primes[n] - small_primes[n - 1], small_primes[n - 1])
        if best is None or v < best:
            best = v
            expected.append(n)
    assert s.n.tolist() == expected
    assert s.strictly_decreasing()


def test_q2_records_match_decimal_minimum(primes, small_primes):
    from decimal import Decimal, localcontext

    s = record_scan("gap_over_log", "0.5", (1, 1500), primes=primes)
    best, expected = None, []
    with localcontext() as c:
        c.prec = 50
        for n in range(1, 1501):
            p, p1 = small_primes[n - 1], small_primes[n]
            v = Decimal(p1 - p) / (Decimal("1.5") * Decimal(p).ln().ln()).exp()
            if best is None or v < best:
                best = v
                expected.append(n)
    assert s.n.tolist() == expected and not s.unconfirmed


@pytest.mark.parametrize(
    "quantity,x",
    [("power_gap", 1), ("power_gap", "1.5"), ("power_gap", "-0.1"), ("gap_over_px", 0), ("gap_over_log", "-1")],
)
def test_hypothesis_gates(primes, quantity, x):
    with pytest.raises(HypothesisError) as info:
        record_scan(quantity, x, (1, 10), primes=primes)
    text = str(info.value)
    assert ("If 0 ≤ x < 1" in text) if quantity == "power_gap" else ("If x>0" in text)


def test_q3_zero_exponent_has_single_record(primes):
    s = record_scan("power_gap", 0, (1, 100), primes=primes)
    assert len(s) == 1 and s.event(0).value.lo == 0


def test_near_ties_are_separated_or_dropped(primes):
    # with a tiny exponent, gap/p^x is nearly the gap itself: many near-ties
    s = record_scan("gap_over_px", "0.000001", (1, 200), primes=primes)
    assert s.strictly_decreasing()
    vals = [e.value for e in s.events]
    assert all(b.hi < a.lo for a, b in zip(vals, vals[1:]))


def test_record_scan_chunking_and_threads_agree(primes):
    a = record_scan("power_gap", "0.5", (1, 20_000), primes=primes, chunk_size=1000, threads=4)
    b = record_scan("power_gap", "0.5", (1, 20_000), primes=primes)
    assert np.array_equal(a.n, b.n) and np.array_equal(a.lo, b.lo) and np.array_equal(a.hi, b.hi)


def test_liminf_caption(primes):
    s = record_scan("power_gap", "0.5", (1, 100), primes=primes)
    assert LIMINF_CAPTION == "upper bound on liminf over scanned range"
    assert s.liminf_upper_bound == float(s.hi[-1])


def test_quantity_lookup():
    assert Quantity.lookup("Q3") is Quantity.POWER_GAP
    assert Quantity.lookup("gap_over_log").short == "Q2"
    with pytest.raises(ValueError):
        Quantity.lookup("Q9")


def test_log_power_at_two():
    # log(2) < 1: the quantity is still positive and finite
    v = quantity_value(Quantity.GAP_OVER_LOG, Fraction(1), 2, 3, 128)
    ref = 1 / math.log(2) ** 2
    assert v.lo <= Fraction(ref) * (1 + Fraction(1, 10**12)) and Fraction(ref) * (1 - Fraction(1, 10**12)) <= v.hi
