"""Kummer-type convergence characterisation with a weight sequence.

For positive sequences a, b and an auxiliary positive q, the *margin* at n is

    q_n * a_n / a_{n+1} - q_{n+1} - b_{n+1}.

If the margin is >= 0 for every n past some N, the series sum(a_n b_n)
converges; if sum(a_n b_n) diverges, then for every positive q the margin is
negative at infinitely many n.  The scans here check these conditions index
by index, and :func:`constructive_q` rebuilds the q that makes the margin
vanish from a known sum S.

All sequences are DSL expressions in ``n`` and ``p``.  Rational expressions
evaluate exactly, so equalities such as "margin is exactly 0" are decided.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from pgk import dsl
from pgk.decades import DecadeCount, decade_counts, merge_decades
from pgk.errors import IndeterminateSignError, NonPositiveValueError
from pgk.gaps import _chunks, _map_chunks
from pgk.numerics import (
    NumInterval,
    PrecisionPolicy,
    TriVerdict,
    compare_with_escalation,
    to_exact,
    tri_compare,
)


def _expr(e):
    return dsl.parse_sequence(e) if isinstance(e, str) else e


@dataclass(frozen=True)
class KummerInstance:
    a: dsl.SeqExpr
    b: dsl.SeqExpr
    q: dsl.SeqExpr | None = None
    start: int = 1  # N

    @classmethod
    def parse(cls, a, b, q=None, start: int = 1) -> "KummerInstance":
        return cls(_expr(a), _expr(b), None if q is None else _expr(q), start)

    def describe(self) -> dict:
        return {
            "a": dsl.to_text(self.a),
            "b": dsl.to_text(self.b),
            "q": None if self.q is None else dsl.to_text(self.q),
            "N": self.start,
        }


class _Terms:
    """Memoised positive-term evaluation (a_n, b_n, q_n) at a given precision."""

    def __init__(self, primes=None):
        self.primes = primes
        self._memo: dict = {}

    def __call__(self, expr, name: str, n: int, prec: int) -> NumInterval:
        key = (id(expr), n, prec)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        p = None
        if "p" in dsl.variables(expr):
            if self.primes is None:
                raise ValueError(f"{name} uses p but no prime cache was given")
            p = self.primes.nth_prime(n)
        try:
            val = dsl.evaluate(expr, dsl.EvalContext(n, p), prec, name)
        except NonPositiveValueError as err:
            raise NonPositiveValueError(f"sequence {name} is not positive at n={n}", n=n, which=name) from err
        if len(self._memo) > 4096:
            self._memo.clear()
        self._memo[key] = val
        return val


@dataclass(frozen=True)
class KummerMargin:
    n: int
    margin: NumInterval
    verdict: TriVerdict  # of margin vs 0
    prec_bits: int

    @property
    def holds(self) -> bool:
        """The convergence condition holds at n (margin >= 0)."""
        return self.verdict is TriVerdict.GREATER_OR_EQUAL

    @property
    def violated(self) -> bool:
        return self.verdict is TriVerdict.STRICTLY_LESS


_ZERO = NumInterval.exact(0)


def _margin_at(inst: KummerInstance, n: int, prec: int, terms: _Terms) -> NumInterval:
    a, b, q = inst.a, inst.b, inst.q
    qn, qn1 = terms(q, "q", n, prec), terms(q, "q", n + 1, prec)
    an, an1 = terms(a, "a", n, prec), terms(a, "a", n + 1, prec)
    bn1 = terms(b, "b", n + 1, prec)
    return qn * an / an1 - qn1 - bn1


def kummer_margin(
    inst: KummerInstance, n: int, policy: PrecisionPolicy | None = None, *, primes=None, _terms=None
) -> KummerMargin:
    """Margin enclosure at ``n`` and its verdict against 0."""
    if inst.q is None:
        raise ValueError("the instance needs a q sequence")
    if n < inst.start:
        raise ValueError(f"n={n} lies below the starting index N={inst.start}")
    terms = _terms or _Terms(primes)
    res = compare_with_escalation(
        lambda bits: _margin_at(inst, n, bits, terms), lambda bits: _ZERO, policy or PrecisionPolicy()
    )
    return KummerMargin(n, res.lhs, res.verdict, res.prec_bits)


def _prefill(inst, last, primes):
    # worker threads only read the cache, so grow it up front
    if primes is not None and any("p" in dsl.variables(e) for e in (inst.a, inst.b, inst.q) if e is not None):
        primes.ensure_count(last + 1)
        primes.primes


def _margins(inst, bounds, policy, primes):
    terms = _Terms(primes)
    return [kummer_margin(inst, n, policy, _terms=terms) for n in range(bounds[0], bounds[1] + 1)]


def _scan(inst, index_range, policy, primes, threads, chunk_size):
    first, last = index_range
    if first < inst.start:
        raise ValueError(f"scan starts at {first}, below N={inst.start}")
    policy = policy or PrecisionPolicy()
    _prefill(inst, last, primes)
    parts = _map_chunks(lambda b: _margins(inst, b, policy, primes), _chunks(first, last, chunk_size), threads)
    return [row for part in parts for row in part]


@dataclass
class SufficiencyReport:
    range: tuple[int, int]
    all_hold: bool
    first_failure: int | None
    indeterminate: list[int]
    reason: str
    min_margin: NumInterval | None
    rows: list[KummerMargin] = field(repr=False, default_factory=list)

    def summary(self) -> dict:
        return {
            "range": list(self.range),
            "all_hold": self.all_hold,
            "first_failure": self.first_failure,
            "indeterminate": self.indeterminate,
            "reason": self.reason,
            "min_margin": None if self.min_margin is None else list(self.min_margin.float_bounds()),
        }


def scan_sufficiency(
    inst: KummerInstance,
    index_range: tuple[int, int],
    policy: PrecisionPolicy | None = None,
    *,
    primes=None,
    threads: int = 1,
    chunk_size: int = 4096,
) -> SufficiencyReport:
    """Does the margin stay >= 0 over the whole range?

    Undecided indices are listed and make ``all_hold`` false with reason
    ``"unresolved"``; they never count as satisfied.
    """
    rows = _scan(inst, index_range, policy, primes, threads, chunk_size)
    failures = [r.n for r in rows if r.violated]
    undecided = [r.n for r in rows if not r.verdict.decided]
    if failures:
        reason = "violated"
    elif undecided:
        reason = "unresolved"
    else:
        reason = "holds" if rows else "empty range"
    lowest = min(rows, key=lambda r: r.margin.lo).margin if rows else None
    return SufficiencyReport(
        range=tuple(index_range),
        all_hold=not failures and not undecided,
        first_failure=failures[0] if failures else None,
        indeterminate=undecided,
        reason=reason,
        min_margin=lowest,
        rows=rows,
    )


@dataclass
class ViolationReport:
    range: tuple[int, int]
    violations: list[int]
    per_decade: list[DecadeCount]
    indeterminate: list[int]
    rows: list[KummerMargin] = field(repr=False, default_factory=list)

    def summary(self) -> dict:
        return {
            "range": list(self.range),
            "violation_count": len(self.violations),
            "first_violations": self.violations[:10],
            "last_violation": self.violations[-1] if self.violations else None,
            "per_decade": [d.as_dict() for d in self.per_decade],
            "indeterminate": self.indeterminate,
        }


def scan_violations(
    inst: KummerInstance,
    index_range: tuple[int, int],
    policy: PrecisionPolicy | None = None,
    *,
    primes=None,
    threads: int = 1,
    chunk_size: int = 4096,
) -> ViolationReport:
    """Indices where the margin is strictly negative, with per-decade counts."""
    first, last = index_range
    policy = policy or PrecisionPolicy()
    chunks = _chunks(first, last, chunk_size)
    if first < inst.start:
        raise ValueError(f"scan starts at {first}, below N={inst.start}")
    _prefill(inst, last, primes)
    parts = _map_chunks(lambda b: _margins(inst, b, policy, primes), chunks, threads)
    violations, undecided, histos = [], [], []
    for (lo, hi), part in zip(chunks, parts):
        bad = [r.n for r in part if r.violated]
        violations += bad
        undecided += [r.n for r in part if not r.verdict.decided]
        histos.append(decade_counts(bad, lo, hi))
    return ViolationReport(
        range=(first, last),
        violations=violations,
        per_decade=merge_decades(histos),
        indeterminate=undecided,
        rows=[r for part in parts for r in part],
    )


# constructive q ---------------------------------------------------------------


def _as_sum(S, prec: int) -> NumInterval:
    if isinstance(S, NumInterval):
        return S
    return NumInterval.exact(to_exact(S), prec)


@dataclass(frozen=True)
class ConstructiveRow:
    n: int
    q: NumInterval
    residual: NumInterval  # q_n a_n/a_{n+1} - q_{n+1} - b_{n+1}; 0 in exact arithmetic


def _positive_numerator(num: NumInterval, n: int) -> NumInterval:
    if num.hi <= 0:
        raise NonPositiveValueError(
            f"S minus the partial sum up to n={n} is not positive ({num!r}); S is too small or n too deep",
            n=n,
            which="numerator",
        )
    if num.lo <= 0:
        raise IndeterminateSignError(f"sign of S minus the partial sum at n={n} is undecided", num)
    return num


def constructive_q(
    a, b, S, n: int, policy: PrecisionPolicy | None = None, *, primes=None, start: int = 1
) -> NumInterval:
    """q_n = (S - sum_{i=start}^{n} a_i b_i) / a_n for a convergent sum S.

    ``S`` is supplied by the caller (an exact decimal/Fraction or an
    enclosure).  A numerator that is not positive raises instead of being
    clamped.
    """
    a, b = _expr(a), _expr(b)
    if n < start:
        raise ValueError(f"n={n} lies below the starting index {start}")
    policy = policy or PrecisionPolicy()
    terms = _Terms(primes)
    last_err = None
    for bits in policy.ladder:
        total = NumInterval.exact(0, bits)
        for i in range(start, n + 1):
            total = total + terms(a, "a", i, bits) * terms(b, "b", i, bits)
        try:
            num = _positive_numerator(_as_sum(S, bits) - total, n)
        except IndeterminateSignError as err:
            last_err = err
            continue
        return num / terms(a, "a", n, bits)
    raise last_err


def constructive_scan(
    a, b, S, index_range: tuple[int, int], prec: int = 1024, *, primes=None, start: int = 1
) -> list[ConstructiveRow]:
    """Constructive q over a range with a running partial sum, plus residuals."""
    a, b = _expr(a), _expr(b)
    first, last = index_range
    if first < start:
        raise ValueError(f"range starts below the starting index {start}")
    terms = _Terms(primes)
    s = _as_sum(S, prec)
    total = NumInterval.exact(0, prec)
    for i in range(start, first):
        total = total + terms(a, "a", i, prec) * terms(b, "b", i, prec)

    def q_at(k, partial):
        num = _positive_numerator(s - partial, k)
        return num / terms(a, "a", k, prec)

    rows = []
    if last < first:
        return rows
    total = total + terms(a, "a", first, prec) * terms(b, "b", first, prec)
    q_cur = q_at(first, total)
    for k in range(first, last + 1):
        total = total + terms(a, "a", k + 1, prec) * terms(b, "b", k + 1, prec)
        q_next = q_at(k + 1, total)
        resid = q_cur * terms(a, "a", k, prec) / terms(a, "a", k + 1, prec) - q_next - terms(b, "b", k + 1, prec)
        rows.append(ConstructiveRow(k, q_cur, resid))
        q_cur = q_next
    return rows


# telescoped bound ----------------------------------------------------------------


@dataclass(frozen=True)
class TelescopeCheck:
    N: int
    k: int
    lhs: NumInterval  # a_N q_N
    rhs: NumInterval  # sum_{i=1}^{k+1} a_{N+i} b_{N+i} + a_{N+k+1} q_{N+k+1}
    verdict: TriVerdict  # of lhs vs rhs

    @property
    def holds(self) -> bool:
        """a_N q_N >= rhs is established."""
        return self.verdict is TriVerdict.GREATER_OR_EQUAL


def telescoped_bound(inst: KummerInstance, N: int, k: int, prec: int = 1024, *, primes=None) -> TelescopeCheck:
    """Both sides of the bound that follows from summing the margin condition."""
    if inst.q is None:
        raise ValueError("the instance needs a q sequence")
    terms = _Terms(primes)
    lhs = terms(inst.a, "a", N, prec) * terms(inst.q, "q", N, prec)
    total = NumInterval.exact(0, prec)
    for i in range(1, k + 2):
        total = total + terms(inst.a, "a", N + i, prec) * terms(inst.b, "b", N + i, prec)
    rhs = total + terms(inst.a, "a", N + k + 1, prec) * terms(inst.q, "q", N + k + 1, prec)
    return TelescopeCheck(N, k, lhs, rhs, tri_compare(lhs, rhs))
