"""Prime-power gap inequality: witness scans, gap bounds, record minima.

For a positive sequence q and a rational exponent x, an index n is a
*witness* when

    q_n p_{n+1}^x - q_{n+1} p_n^x  <  p_n^x p_{n+1}^(x-1).

Rearranging after division by q_n gives the two-term bound checked by
:func:`gap_bound_check` (variant ``B2``; ``B1`` is its x = 1 form).
Record scans track running minima of three gap quantities whose lower
limits are 0:

* ``gap_over_px``   (p_{n+1} - p_n) / p_n^x             for x > 0
* ``gap_over_log``  (p_{n+1} - p_n) / log(p_n)^(1+x)    for x > 0
* ``power_gap``     p_{n+1}^x - p_n^x                   for 0 <= x < 1

Every scan evaluates a whole chunk in binary64 interval arithmetic first and
re-evaluates only undecided rows on the higher rungs of the precision ladder.
Chunks are fixed-size regardless of the thread count, so results do not
depend on it.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from pgk import dsl
from pgk.decades import DecadeCount, decade_counts
from pgk.errors import (
    DomainError,
    HypothesisError,
    IndeterminateSignError,
    NonPositiveValueError,
)
from pgk.numerics import (
    IntervalArray,
    NumInterval,
    PrecisionPolicy,
    TriVerdict,
    compare_with_escalation,
    exact_sides,
    to_exact,
    tri_compare_arrays,
)
from pgk.numerics.compare import GEQ, LESS, UNDECIDED
from pgk.numerics.vector import power_gap_array

CHUNK = 1 << 16
FAST_BITS = 53
LIMINF_CAPTION = "upper bound on liminf over scanned range"


def _as_expr(q):
    return dsl.parse_sequence(q) if isinstance(q, str) else q


def _map_chunks(fn, chunks, threads):
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, chunks))
    return [fn(c) for c in chunks]


def _chunks(first: int, last: int, size: int):
    return [(a, min(a + size - 1, last)) for a in range(first, last + 1, size)]


# both sides of the inequality --------------------------------------------------------------


def witness_bounds(n: int, x: Fraction, q, p: int, p_next: int, prec: int) -> tuple[NumInterval, NumInterval]:
    """Enclosures of both sides at one precision."""
    qn = dsl.evaluate(q, dsl.EvalContext(n, p), prec, "q")
    qn1 = dsl.evaluate(q, dsl.EvalContext(n + 1, p_next), prec, "q")
    px = NumInterval.exact(p, prec).pow_rational(x)
    p1 = NumInterval.exact(p_next, prec)
    lhs = qn * p1.pow_rational(x) - qn1 * px
    rhs = px * p1.pow_rational(x - 1)
    return lhs, rhs


@dataclass(frozen=True)
class WitnessSides:
    n: int
    lhs: NumInterval
    rhs: NumInterval
    verdict: TriVerdict
    prec_bits: int

    @property
    def is_witness(self) -> bool:
        return self.verdict is TriVerdict.STRICTLY_LESS


def _witness_at(n, x, q, p, p_next, policy, rungs=None) -> WitnessSides:
    cache = {}

    def sides(bits):
        if bits not in cache:
            cache[bits] = witness_bounds(n, x, q, p, p_next, bits)
        return cache[bits]

    res = compare_with_escalation(lambda b: sides(b)[0], lambda b: sides(b)[1], policy, rungs)
    return WitnessSides(n, res.lhs, res.rhs, res.verdict, res.prec_bits)


def witness_sides(n: int, x, q, policy: PrecisionPolicy | None = None, *, primes) -> WitnessSides:
    """Both sides of the inequality at index ``n`` and the verdict on ``lhs < rhs``."""
    x = to_exact(x)
    q = _as_expr(q)
    return _witness_at(n, x, q, primes.nth_prime(n), primes.nth_prime(n + 1), policy or PrecisionPolicy())


# witness scans ----------------------------------------------------------------


@dataclass
class WitnessRows:
    """Per-index scan output, column-oriented."""

    n: np.ndarray
    p: np.ndarray
    p_next: np.ndarray
    lhs_lo: np.ndarray
    lhs_hi: np.ndarray
    rhs_lo: np.ndarray
    rhs_hi: np.ndarray
    verdict: np.ndarray  # LESS / GEQ / UNDECIDED codes
    prec_bits: np.ndarray

    @classmethod
    def concat(cls, parts: list["WitnessRows"]) -> "WitnessRows":
        if not parts:
            e = np.zeros(0, dtype=np.int64)
            f = np.zeros(0)
            return cls(e, e, e, f, f, f, f, np.zeros(0, dtype=np.int8), e)
        return cls(*(np.concatenate([getattr(p, name) for p in parts]) for name in cls.__dataclass_fields__))

    def __len__(self):
        return len(self.n)


@dataclass
class WitnessScanReport:
    x: Fraction
    q_text: str
    range: tuple[int, int]
    start: int
    witness_count: int
    first_witnesses: list[int]
    last_witness: int | None
    per_decade: list[DecadeCount]
    indeterminate_count: int
    indeterminate: list[int]
    method: str
    policy: PrecisionPolicy
    witnesses: np.ndarray = field(repr=False)
    rows: WitnessRows | None = field(default=None, repr=False)

    @property
    def every_decade_has_witness(self) -> bool:
        return bool(self.per_decade) and all(d.count >= 1 for d in self.per_decade)

    @property
    def last_in_top_decile(self) -> bool:
        """Last witness lies in the top tenth of the scanned index range."""
        if self.last_witness is None:
            return False
        first, last = self.start, self.range[1]
        return 10 * (self.last_witness - first) >= 9 * (last - first)

    def summary(self) -> dict:
        return {
            "x": str(self.x),
            "q": self.q_text,
            "range": list(self.range),
            "start": self.start,
            "method": self.method,
            "witness_count": self.witness_count,
            "first_witnesses": self.first_witnesses,
            "last_witness": self.last_witness,
            "per_decade": [d.as_dict() for d in self.per_decade],
            "indeterminate_count": self.indeterminate_count,
            "indeterminate": self.indeterminate,
            "every_decade_has_witness": self.every_decade_has_witness,
            "last_in_top_decile": self.last_in_top_decile,
        }


def _q_positive_at(q, n: int, p: int, policy: PrecisionPolicy) -> bool:
    for bits in policy.ladder:
        try:
            dsl.evaluate(q, dsl.EvalContext(n, p), bits, "q")
            return True
        except IndeterminateSignError:
            continue
        except (NonPositiveValueError, DomainError):
            return False
    return False


def adjusted_start(q, first: int, last: int, policy: PrecisionPolicy, primes) -> int:
    """First index >= ``first`` where q_n and q_{n+1} are both positive."""
    n = first
    while n <= last:
        if not _q_positive_at(q, n + 1, primes.nth_prime(n + 1), policy):
            n += 2
            continue
        if _q_positive_at(q, n, primes.nth_prime(n), policy):
            return n
        n += 1
    return n


def _witness_chunk_interval(x, q, policy, primes, bounds) -> WitnessRows:
    first, last = bounds
    n, p, p1 = primes.pairs(first, last)
    qv = dsl.evaluate_array(q, np.append(n, last + 1), np.append(p, p1[-1]))
    qa, qb = qv[:-1], qv[1:]
    px = IntervalArray.point(p).pow_rational(x)
    p1a = IntervalArray.point(p1)
    lhs = qa * p1a.pow_rational(x) - qb * px
    rhs = px * p1a.pow_rational(x - 1)
    codes = tri_compare_arrays(lhs, rhs)
    # nonpositive or NaN q rows go back through the scalar path, which raises on them
    codes[(qa.lo <= 0) | (qb.lo <= 0) | qa.bad | qb.bad] = UNDECIDED
    prec = np.full(len(n), FAST_BITS, dtype=np.int64)
    rows = WitnessRows(n, p, p1, lhs.lo, lhs.hi, rhs.lo, rhs.hi, codes, prec)
    for i in np.flatnonzero(codes == UNDECIDED):
        res = _witness_at(int(n[i]), x, q, int(p[i]), int(p1[i]), policy)
        rows.lhs_lo[i], rows.lhs_hi[i] = res.lhs.float_bounds()
        rows.rhs_lo[i], rows.rhs_hi[i] = res.rhs.float_bounds()
        rows.verdict[i] = res.verdict.code
        rows.prec_bits[i] = res.prec_bits
    return rows


def _fraction_bounds(v: Fraction) -> tuple[float, float]:
    return NumInterval.exact(v).float_bounds()


def _witness_chunk_exact(x, q, primes, bounds) -> WitnessRows:
    first, last = bounds
    n, p, p1 = primes.pairs(first, last)
    size = len(n)
    cols = [np.empty(size) for _ in range(4)]
    codes = np.empty(size, dtype=np.int8)
    for i, (ni, pi, pj) in enumerate(zip(n.tolist(), p.tolist(), p1.tolist())):
        qn = dsl.evaluate_exact(q, dsl.EvalContext(ni, pi))
        qn1 = dsl.evaluate_exact(q, dsl.EvalContext(ni + 1, pj))
        if qn <= 0 or qn1 <= 0:
            raise NonPositiveValueError(f"q is not positive at n={ni if qn <= 0 else ni + 1}", n=ni, which="q")
        lhs, rhs = exact_sides(ni, x, q, pi, pj)
        cols[0][i], cols[1][i] = _fraction_bounds(lhs)
        cols[2][i], cols[3][i] = _fraction_bounds(rhs)
        codes[i] = LESS if lhs < rhs else GEQ
    return WitnessRows(n, p, p1, *cols, codes, np.zeros(size, dtype=np.int64))


def scan_witnesses(
    x,
    q,
    index_range: tuple[int, int],
    policy: PrecisionPolicy | None = None,
    *,
    primes,
    method: str = "interval",
    threads: int = 1,
    chunk_size: int = CHUNK,
    keep_rows: bool = True,
) -> WitnessScanReport:
    """Find every witness index in ``index_range`` (inclusive).

    ``method="exact"`` uses rational arithmetic and needs an integer x and a
    q without log/sqrt.  The scan start moves past leading indices where q
    is not positive (e.g. n*log(n) at n = 1); the report records the start.
    """
    x = to_exact(x)
    q_text = q if isinstance(q, str) else dsl.to_text(q)
    q = _as_expr(q)
    policy = policy or PrecisionPolicy()
    first, last = index_range
    if first < 1:
        raise ValueError("prime indices start at 1")
    if method not in ("interval", "exact"):
        raise ValueError(f"unknown method {method!r}")
    if method == "exact":
        from pgk.numerics.exact import integer_exponent

        integer_exponent(x)
        if not dsl.is_rational(q):
            from pgk.errors import InapplicableError

            raise InapplicableError("exact path needs q without log/sqrt")
    start = adjusted_start(q, first, last, policy, primes) if last >= first else first
    if last >= start:
        primes.ensure_count(last + 2)
    chunks = _chunks(start, last, chunk_size)
    if method == "exact":
        parts = _map_chunks(lambda b: _witness_chunk_exact(x, q, primes, b), chunks, threads)
    else:
        parts = _map_chunks(lambda b: _witness_chunk_interval(x, q, policy, primes, b), chunks, threads)
    rows = WitnessRows.concat(parts)
    wit = rows.n[rows.verdict == LESS]
    undecided = rows.n[rows.verdict == UNDECIDED]
    return WitnessScanReport(
        x=x,
        q_text=q_text,
        range=(first, last),
        start=start,
        witness_count=int(len(wit)),
        first_witnesses=wit[:10].tolist(),
        last_witness=int(wit[-1]) if len(wit) else None,
        per_decade=decade_counts(wit, start, last),
        indeterminate_count=int(len(undecided)),
        indeterminate=undecided.tolist(),
        method=method,
        policy=policy,
        witnesses=wit,
        rows=rows if keep_rows else None,
    )


# two-term gap bounds ---------------------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    variant: str
    n: int
    gap: NumInterval
    bound: NumInterval
    verdict: TriVerdict
    prec_bits: int

    @property
    def holds(self) -> bool:
        return self.verdict is TriVerdict.STRICTLY_LESS


def gap_bounds(variant: str, n: int, x: Fraction, q, p: int, p_next: int, prec: int):
    qn = dsl.evaluate(q, dsl.EvalContext(n, p), prec, "q")
    qn1 = dsl.evaluate(q, dsl.EvalContext(n + 1, p_next), prec, "q")
    pp, pp1 = NumInterval.exact(p, prec), NumInterval.exact(p_next, prec)
    if variant == "B1":
        return pp1 - pp, pp * (qn1 - qn + 1) / qn
    px = pp.pow_rational(x)
    gap = pp1.pow_rational(x) - px
    bound = (pp * pp1).pow_rational(x) / (qn * pp1) + px * (qn1 - qn) / qn
    return gap, bound


def gap_bound_check(
    variant: str, n: int, x=None, q="1", policy: PrecisionPolicy | None = None, *, primes
) -> BoundCheck:
    """Check the gap bound at ``n``.

    ``B2``: p_{n+1}^x - p_n^x < (p_n p_{n+1})^x / (q_n p_{n+1}) + p_n^x (q_{n+1} - q_n) / q_n
    ``B1``: p_{n+1} - p_n < p_n (q_{n+1} - q_n + 1) / q_n       (x is ignored)
    """
    if variant not in ("B1", "B2"):
        raise ValueError(f"variant must be B1 or B2, not {variant!r}")
    if variant == "B2" and x is None:
        raise ValueError("B2 needs an exponent x")
    x = Fraction(1) if variant == "B1" else to_exact(x)
    q = _as_expr(q)
    p, p1 = primes.nth_prime(n), primes.nth_prime(n + 1)
    cache = {}

    def both(bits):
        if bits not in cache:
            cache[bits] = gap_bounds(variant, n, x, q, p, p1, bits)
        return cache[bits]

    res = compare_with_escalation(lambda b: both(b)[0], lambda b: both(b)[1], policy or PrecisionPolicy())
    return BoundCheck(variant, n, res.lhs, res.rhs, res.verdict, res.prec_bits)


def implication_check(n: int, x, q, policy: PrecisionPolicy | None = None, *, primes) -> bool:
    """Does the two-term bound hold at a decided witness ``n``?

    It always should: the bound is the witness inequality divided by q_n.
    A False return therefore signals a defect in the arithmetic.
    """
    sides = witness_sides(n, x, q, policy, primes=primes)
    if not sides.is_witness:
        raise ValueError(f"n={n} is not a decided witness ({sides.verdict.value})")
    return gap_bound_check("B2", n, x, q, policy, primes=primes).holds


# record scans -------------------------------------------------------------------


class Quantity(enum.Enum):
    GAP_OVER_PX = "gap_over_px"
    GAP_OVER_LOG = "gap_over_log"
    POWER_GAP = "power_gap"

    @property
    def short(self) -> str:
        return {"gap_over_px": "Q1", "gap_over_log": "Q2", "power_gap": "Q3"}[self.value]

    @classmethod
    def lookup(cls, name) -> "Quantity":
        if isinstance(name, Quantity):
            return name
        for member in cls:
            if name in (member.value, member.short, member.name):
                return member
        raise ValueError(f"unknown quantity {name!r}; choose from {[m.value for m in cls]}")


def check_hypothesis(quantity: Quantity, x: Fraction) -> None:
    if quantity is Quantity.POWER_GAP:
        if not 0 <= x < 1:
            raise HypothesisError(f"power_gap tends to 0 only under the hypothesis 0 <= x < 1 (If 0 ≤ x < 1); got x={x}")
    elif x <= 0:
        raise HypothesisError(f"{quantity.value} tends to 0 only under the hypothesis x > 0 (If x>0); got x={x}")


def quantity_value(quantity: Quantity, x: Fraction, p: int, p_next: int, prec: int) -> NumInterval:
    pp, pp1 = NumInterval.exact(p, prec), NumInterval.exact(p_next, prec)
    if quantity is Quantity.POWER_GAP:
        return pp1.pow_rational(x) - pp.pow_rational(x)
    gap = pp1 - pp
    if quantity is Quantity.GAP_OVER_PX:
        return gap / pp.pow_rational(x)
    return gap / pp.log().pow_rational(1 + x)


def quantity_array(quantity: Quantity, x: Fraction, p, p_next) -> IntervalArray:
    pa, pb = IntervalArray.point(p), IntervalArray.point(p_next)
    if quantity is Quantity.POWER_GAP:
        return power_gap_array(pa, pb, x)
    gap = pb - pa
    if quantity is Quantity.GAP_OVER_PX:
        return gap / pa.pow_rational(x)
    return gap / pa.log().pow_rational(1 + x)


@dataclass(frozen=True)
class RecordEvent:
    n: int
    p_n: int
    value: NumInterval
    quantity: str


@dataclass
class RecordScan:
    """Ordered record minima; event columns are kept as arrays."""

    quantity: Quantity
    x: Fraction
    range: tuple[int, int]
    n: np.ndarray
    p: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    unconfirmed: list[int]
    refined: dict[int, NumInterval] = field(default_factory=dict, repr=False)

    @property
    def tag(self) -> str:
        return f"{self.quantity.short}({self.x})"

    def __len__(self):
        return len(self.n)

    def event(self, i: int) -> RecordEvent:
        n = int(self.n[i])
        value = self.refined.get(n) or NumInterval.from_floats(float(self.lo[i]), float(self.hi[i]))
        return RecordEvent(n, int(self.p[i]), value, self.tag)

    @property
    def events(self) -> list[RecordEvent]:
        return [self.event(i) for i in range(len(self))]

    @property
    def liminf_upper_bound(self) -> float | None:
        """Upper end of the final record enclosure (caption: LIMINF_CAPTION)."""
        return float(self.hi[-1]) if len(self) else None

    def strictly_decreasing(self) -> bool:
        """Each record enclosure lies strictly below the previous one."""
        ok = self.hi[1:] < self.lo[:-1]
        for i in np.flatnonzero(~ok).tolist():
            if not self.event(i + 1).value.hi < self.event(i).value.lo:
                return False
        return True


def _value_chunk(quantity, x, policy, primes, bounds):
    first, last = bounds
    n, p, p1 = primes.pairs(first, last)
    vals = quantity_array(quantity, x, p, p1)
    lo, hi = vals.lo.copy(), vals.hi.copy()
    for i in np.flatnonzero(vals.bad):
        v = quantity_value(quantity, x, int(p[i]), int(p1[i]), policy.ladder[0])
        lo[i], hi[i] = v.float_bounds()
    return n, p, p1, lo, hi


def record_scan(
    quantity,
    x,
    index_range: tuple[int, int],
    policy: PrecisionPolicy | None = None,
    *,
    primes,
    threads: int = 1,
    chunk_size: int = 1 << 18,
) -> RecordScan:
    """Indices where the running minimum of a gap quantity strictly drops.

    A record at m is claimed only when its enclosure lies strictly below the
    current record's (``hi_m < lo_record``).  Indices whose binary64
    enclosure overlaps the current record are re-evaluated up the precision
    ladder; if still unresolved they are listed as unconfirmed and the
    running record stays.  Only indices whose lower bound undercuts every
    earlier upper bound are examined at all.
    """
    quantity = Quantity.lookup(quantity)
    x = to_exact(x)
    check_hypothesis(quantity, x)
    policy = policy or PrecisionPolicy()
    first, last = index_range
    if first < 1:
        raise ValueError("prime indices start at 1")
    if last >= first:
        primes.ensure_count(last + 1)
    chunks = _chunks(first, last, chunk_size)

    ev_n, ev_p, ev_lo, ev_hi = [], [], [], []
    unconfirmed: list[int] = []
    refined: dict[int, NumInterval] = {}
    cur = None  # (n, p, p_next, lo, hi)
    seen_min_hi = np.inf

    rungs = policy.above(FAST_BITS) or policy.ladder[-1:]

    def escalate(pm, pm1, record):
        return compare_with_escalation(
            lambda b: quantity_value(quantity, x, pm, pm1, b),
            lambda b: quantity_value(quantity, x, record[1], record[2], b),
            policy,
            rungs,
        )

    results = _map_chunks(lambda b: _value_chunk(quantity, x, policy, primes, b), chunks, threads)
    for n, p, p1, lo, hi in results:
        before = np.minimum.accumulate(np.concatenate(([seen_min_hi], hi[:-1])))
        seen_min_hi = min(seen_min_hi, float(hi.min())) if len(hi) else seen_min_hi
        for i in np.flatnonzero(lo < before).tolist():
            li, hi_i = float(lo[i]), float(hi[i])
            if cur is None or hi_i < cur[3]:
                new = (int(n[i]), int(p[i]), int(p1[i]), li, hi_i)
            elif li < cur[4]:
                res = escalate(int(p[i]), int(p1[i]), cur)
                if res.verdict is TriVerdict.STRICTLY_LESS:
                    refined[int(n[i])] = res.lhs
                    refined[cur[0]] = res.rhs
                    a, b = res.lhs.float_bounds()
                    new = (int(n[i]), int(p[i]), int(p1[i]), a, b)
                elif res.verdict is TriVerdict.INDETERMINATE:
                    unconfirmed.append(int(n[i]))
                    continue
                else:
                    continue
            else:
                continue
            cur = new
            ev_n.append(new[0])
            ev_p.append(new[1])
            ev_lo.append(new[3])
            ev_hi.append(new[4])
    return RecordScan(
        quantity,
        x,
        (first, last),
        np.array(ev_n, dtype=np.int64),
        np.array(ev_p, dtype=np.int64),
        np.array(ev_lo),
        np.array(ev_hi),
        unconfirmed,
        refined,
    )
