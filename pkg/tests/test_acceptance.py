"""Acceptance suite: the ten headline criteria at their stated scales.

Each test prints one ``PASS``/``FAIL`` line; the lines are repeated in the
pytest terminal summary.  Run directly with ``pytest tests/test_acceptance.py
-v`` (about five minutes on a desktop) or as a script.
"""

import hashlib
import io
import os
import random
import time
from fractions import Fraction

import numpy as np
import pytest

import oracles
from pgk.gaps import implication_check, record_scan, scan_witnesses
from pgk.kummer import (
    KummerInstance,
    constructive_q,
    constructive_scan,
    kummer_margin,
    scan_violations,
    telescoped_bound,
)
from pgk.primes import PrimeCache
from pgk.report import witness_report

RESULTS: list[str] = []

GRID_X = ("0.25", "0.5", "1", "2")
GRID_Q = ("1", "n", "p", "n*log(n)")
GRID_RANGE = (2, 10**6)
THREADS = max(2, min(8, os.cpu_count() or 2))


def verdict(label: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def big_primes():
    cache = PrimeCache(threads=THREADS)
    cache.ensure_count(10**7 + 2)
    return cache


def _csv_digest(report) -> str:
    buf = io.StringIO()
    witness_report(report).write_csv(buf)
    return hashlib.sha256(buf.getvalue().encode()).hexdigest()


@pytest.fixture(scope="module")
def grid_scans(big_primes):
    """Criterion-4 grid scanned with several threads: witnesses, digests, timing."""
    out = {}
    t0 = time.perf_counter()
    for x in GRID_X:
        for q in GRID_Q:
            r = scan_witnesses(x, q, GRID_RANGE, primes=big_primes, threads=THREADS)
            out[(x, q)] = (r, _csv_digest(r))
            r.rows = None  # free the per-index columns
    return out, time.perf_counter() - t0


def test_c1_sieve_correctness():
    t0 = time.perf_counter()
    cache = PrimeCache()
    count = cache.prime_count(10**6)
    p10k = cache.nth_prime(10**4)
    elapsed = time.perf_counter() - t0
    small = oracles.primes_in(2, 1001)
    # trial division of every integer below 10^6 by the primes up to 1000
    oracle_count = len(small) + sum(
        1 for k in range(1001, 10**6 + 1) if all(k % d for d in small if d * d <= k)
    )
    oracle_10k = oracles.first_primes(10**4)[-1]
    ok = count == 78498 == oracle_count and p10k == 104729 == oracle_10k and elapsed < 5
    verdict("C1 sieve correctness", ok, f"pi(10^6)={count}, p_10^4={p10k}, oracle agrees, {elapsed:.2f}s < 5s")


def test_c2_bertrand_reduction(big_primes):
    t0 = time.perf_counter()
    exact = scan_witnesses(1, "1", (1, 10**5), primes=big_primes, method="exact")
    interval = scan_witnesses(1, "1", (1, 10**5), primes=big_primes)
    elapsed = time.perf_counter() - t0
    ok = (
        exact.witness_count == 10**5
        and np.array_equal(exact.witnesses, interval.witnesses)
        and interval.indeterminate_count == 0
        and elapsed < 30
    )
    verdict("C2 Bertrand reduction", ok, f"{exact.witness_count} exact witnesses, interval path identical, {elapsed:.2f}s < 30s")


def test_c3_witness_structure(big_primes):
    ps = oracles.first_primes(103)
    excluded = []
    for n in range(1, 101):
        p, p1 = ps[n - 1], ps[n]
        lhs = Fraction(n * p1 - (n + 1) * p)
        if not lhs < Fraction(p):
            excluded.append(n)
    expected = [n for n in range(1, 101) if n * ps[n] >= (n + 2) * ps[n - 1]]
    r = scan_witnesses(1, "n", (1, 100), primes=big_primes)
    got = sorted(set(range(1, 101)) - set(r.witnesses.tolist()))
    ok = got == excluded == expected and 4 in got
    verdict("C3 witness structure x=1 q=n", ok, f"{len(got)} excluded indices {got[:6]}... match the rational oracle")


def test_c4_infinitely_many_evidence(grid_scans):
    scans, elapsed = grid_scans
    bad = []
    for (x, q), (r, _) in scans.items():
        if not (r.every_decade_has_witness and r.last_in_top_decile and r.indeterminate_count == 0):
            bad.append((x, q))
    counts = min(min(d.count for d in r.per_decade) for r, _ in scans.values())
    ok = not bad and elapsed < 600
    verdict(
        "C4 witnesses in every decade",
        ok,
        f"16 configs over [2,10^6], min decade count {counts}, last witness in top decile, failures {bad}, {elapsed:.1f}s < 600s",
    )


def test_c5_kummer_identity():
    rows = constructive_scan("1/2^n", "1", 1, (1, 1000))
    q_ok = all(r.q.is_exact and r.q.lo == 1 for r in rows)
    resid_ok = all(r.residual.is_exact and r.residual.lo == 0 for r in rows)
    direct = all(constructive_q("1/2^n", "1", 1, n).lo == 1 for n in (1, 2, 10, 333, 1000))
    inst = KummerInstance.parse("1/2^n", "1", "1")
    # the margin q_n a_n/a_{n+1} - q_{n+1} equals b_{n+1}, i.e. full margin 0
    margin_ok = all(kummer_margin(inst, n).margin.lo == kummer_margin(inst, n).margin.hi == 0 for n in range(1, 1001, 37))
    ok = q_ok and resid_ok and direct and margin_ok and len(rows) == 1000
    verdict("C5 constructive q identity", ok, "q_n = 1 exactly for n <= 1000, identity residual exactly 0")


def test_c6_harmonic_divergence():
    inst = KummerInstance.parse("1/n", "1", "n")
    r = scan_violations(inst, (1, 10**4), threads=THREADS)
    exact = all(m.margin.is_exact and m.margin.lo == -1 for m in r.rows)
    ok = r.violations == list(range(1, 10**4 + 1)) and exact and not r.indeterminate
    verdict("C6 harmonic divergence witness", ok, f"{len(r.violations)} violations, margin exactly -1 at each")


def test_c7_telescoped_bound():
    inst = KummerInstance.parse("1/2^n", "1", "1")
    failures = []
    for N in range(1, 51):
        for k in range(0, 51):
            t = telescoped_bound(inst, N, k)
            if not (t.lhs.is_exact and t.rhs.is_exact and t.holds):
                failures.append((N, k))
    verdict("C7 telescoped bound", not failures, f"2550 (N,k) pairs exact, failures {failures[:5]}")


def test_c8_record_monotonicity(big_primes):
    t0 = time.perf_counter()
    scans = {
        "Q1(1)": record_scan("gap_over_px", 1, (1, 10**7), primes=big_primes, threads=THREADS),
        "Q2(1)": record_scan("gap_over_log", 1, (1, 10**7), primes=big_primes, threads=THREADS),
        "Q3(0.5)": record_scan("power_gap", "0.5", (1, 10**7), primes=big_primes, threads=THREADS),
    }
    elapsed = time.perf_counter() - t0
    q3 = scans["Q3(0.5)"]
    first = q3.event(0)
    ref = oracles.sqrt_diff_floor(2, 3)
    first_ok = first.n == 1 and first.value.lo <= ref + Fraction(2, 10**40) and ref <= first.value.hi
    first_ok = first_ok and first.value.width < Fraction(1, 10**9)
    final = q3.event(len(q3) - 1).value.hi
    mono = {k: s.strictly_decreasing() for k, s in scans.items()}
    events = {k: len(s) for k, s in scans.items()}
    ok = all(mono.values()) and min(events.values()) >= 10 and final < Fraction(1, 20) and first_ok and elapsed < 900
    verdict(
        "C8 record monotonicity and decay",
        ok,
        f"events {events}, strictly decreasing {all(mono.values())}, final Q3 {float(final):.3e} < 0.05, "
        f"first Q3 = sqrt3-sqrt2 width {float(first.value.width):.1e}, {elapsed:.1f}s < 900s",
    )


def test_c9_implication_property(grid_scans, big_primes):
    scans, _ = grid_scans
    rng = random.Random(20240601)
    keys = sorted(scans)
    counter = []
    for _ in range(10**4):
        x, q = keys[rng.randrange(len(keys))]
        wit = scans[(x, q)][0].witnesses
        n = int(wit[rng.randrange(len(wit))])
        if not implication_check(n, x, q, primes=big_primes):
            counter.append((x, q, n))
    verdict("C9 witness implies two-term bound", not counter, f"10^4 sampled witnesses, {len(counter)} counterexamples")


def test_c10_determinism(grid_scans, big_primes):
    scans, _ = grid_scans
    mismatched = []
    for (x, q), (_, digest) in sorted(scans.items()):
        serial = scan_witnesses(x, q, GRID_RANGE, primes=big_primes, threads=1)
        if _csv_digest(serial) != digest:
            mismatched.append((x, q))
    verdict("C10 determinism", not mismatched, f"CSV sha256 at 1 vs {THREADS} threads, 16 configs, mismatches {mismatched}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
