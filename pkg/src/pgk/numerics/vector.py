"""Vectorised binary64 interval arrays: the fast first rung of every scan.

IEEE ``+ - * / sqrt`` are correctly rounded, so a single ``nextafter`` step
toward the outside encloses the true result.  Error-free transformations
(TwoSum, Dekker's TwoProduct, division and square-root residuals) tell when a
result is exact; exact results stay degenerate so integer cases decide
equality.  libm functions (log, exp, log1p, expm1, pow) are not correctly
rounded; their results are widened by ``LIBM_ULPS`` in each direction.

Rows that overflow, underflow out of the safe range or hit a domain problem
come back as NaN; callers treat them as undecided and re-evaluate them with
:class:`~pgk.numerics.interval.NumInterval`.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from pgk.numerics.compare import GEQ, LESS, UNDECIDED

LIBM_ULPS = 2
_SPLIT = 134217729.0  # 2**27 + 1
_SAFE_HI = 2.0**500
_SAFE_LO = 2.0**-400
# sqrt chains beyond this depth fall back to libm pow
_MAX_SQRT_DEPTH = 10

_INF = np.inf


def _down(x, k=1):
    for _ in range(k):
        x = np.nextafter(x, -_INF)
    return x


def _up(x, k=1):
    for _ in range(k):
        x = np.nextafter(x, _INF)
    return x


def _safe(*arrays):
    ok = True
    for a in arrays:
        m = np.abs(a)
        ok = ok & (m < _SAFE_HI) & ((m > _SAFE_LO) | (m == 0))
    return ok


def _split(a):
    c = _SPLIT * a
    ah = c - (c - a)
    return ah, a - ah


def _prod_err(a, b, p):
    ah, al = _split(a)
    bh, bl = _split(b)
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _directed(value, sign):
    """Bounds for ``value + delta`` where ``sign`` is sign(delta) or NaN (unknown)."""
    known = ~np.isnan(sign)
    lo = np.where(known & (sign >= 0), value, _down(value))
    hi = np.where(known & (sign <= 0), value, _up(value))
    return lo, hi


def _sum_bounds(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return _directed(s, np.sign(err))


def _prod_bounds(a, b):
    with np.errstate(invalid="ignore", over="ignore"):
        p = a * b
        err = _prod_err(a, b, p)
    sign = np.where(_safe(a, b, p), np.sign(err), np.nan)
    sign = np.where((a == 0) | (b == 0), 0.0, sign)
    return _directed(p, sign)


def _quot_bounds(a, b):
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        q = a / b
        ph = q * b
        pl = _prod_err(q, b, ph)
        r = (a - ph) - pl
    sign = np.where(_safe(a, b, q), np.sign(r) * np.sign(b), np.nan)
    sign = np.where(a == 0, 0.0, sign)
    return _directed(q, sign)


def _sqrt_bounds(a):
    with np.errstate(invalid="ignore"):
        s = np.sqrt(a)
        ph = s * s
        pl = _prod_err(s, s, ph)
        r = (a - ph) - pl
    sign = np.where(_safe(a, s), np.sign(r), np.nan)
    sign = np.where(a == 0, 0.0, sign)
    return _directed(s, sign)


def _libm(fn, x, fixed_in, fixed_out):
    """Apply a monotone increasing libm function, widened unless at its fixed point."""
    with np.errstate(all="ignore"):
        y = fn(x)
    exact = x == fixed_in
    lo = np.where(exact, fixed_out, _down(y, LIBM_ULPS))
    hi = np.where(exact, fixed_out, _up(y, LIBM_ULPS))
    return lo, hi


def _bracket(value: Fraction):
    f = float(value)
    lo = f if Fraction(f) <= value else float(np.nextafter(f, -_INF))
    hi = f if Fraction(f) >= value else float(np.nextafter(f, _INF))
    return lo, hi


class IntervalArray:
    """Elementwise enclosures ``[lo[i], hi[i]]`` in binary64."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)

    @classmethod
    def point(cls, values) -> "IntervalArray":
        """Exact enclosure of integers below 2**53."""
        values = np.asarray(values)
        if values.size and np.abs(values).max() >= 2**53:
            raise ValueError("integer too large for an exact binary64 point")
        v = values.astype(np.float64)
        return cls(v, v.copy())

    @classmethod
    def const(cls, value: Fraction, shape) -> "IntervalArray":
        lo, hi = _bracket(Fraction(value))
        return cls(np.full(shape, lo), np.full(shape, hi))

    def __len__(self):
        return len(self.lo)

    def __getitem__(self, idx):
        return IntervalArray(self.lo[idx], self.hi[idx])

    @property
    def bad(self):
        return ~(np.isfinite(self.lo) & np.isfinite(self.hi))

    @property
    def exact(self):
        return self.lo == self.hi

    def _coerce(self, other):
        if isinstance(other, IntervalArray):
            return other
        return IntervalArray.const(Fraction(other), self.lo.shape)

    def __add__(self, other):
        other = self._coerce(other)
        lo, _ = _sum_bounds(self.lo, other.lo)
        _, hi = _sum_bounds(self.hi, other.hi)
        return IntervalArray(lo, hi)

    __radd__ = __add__

    def __neg__(self):
        return IntervalArray(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        if (self.lo >= 0).all() and (other.lo >= 0).all():
            lo, _ = _prod_bounds(self.lo, other.lo)
            _, hi = _prod_bounds(self.hi, other.hi)
            return IntervalArray(lo, hi)
        los, his = [], []
        for a in (self.lo, self.hi):
            for b in (other.lo, other.hi):
                lo, hi = _prod_bounds(a, b)
                los.append(lo)
                his.append(hi)
        return IntervalArray(np.minimum.reduce(los), np.maximum.reduce(his))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        straddle = (other.lo <= 0) & (other.hi >= 0)
        los, his = [], []
        with np.errstate(divide="ignore", invalid="ignore"):
            for a in (self.lo, self.hi):
                for b in (other.lo, other.hi):
                    lo, hi = _quot_bounds(a, b)
                    los.append(lo)
                    his.append(hi)
        lo = np.where(straddle, np.nan, np.minimum.reduce(los))
        hi = np.where(straddle, np.nan, np.maximum.reduce(his))
        return IntervalArray(lo, hi)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def sqrt(self) -> "IntervalArray":
        neg = self.lo < 0
        lo, _ = _sqrt_bounds(np.where(neg, np.nan, self.lo))
        _, hi = _sqrt_bounds(np.where(neg, np.nan, self.hi))
        return IntervalArray(np.maximum(lo, 0.0), hi)

    def log(self) -> "IntervalArray":
        nonpos = self.lo <= 0
        lo, _ = _libm(np.log, np.where(nonpos, np.nan, self.lo), 1.0, 0.0)
        _, hi = _libm(np.log, np.where(nonpos, np.nan, self.hi), 1.0, 0.0)
        return IntervalArray(lo, hi)

    def log1p(self) -> "IntervalArray":
        bad = self.lo <= -1
        lo, _ = _libm(np.log1p, np.where(bad, np.nan, self.lo), 0.0, 0.0)
        _, hi = _libm(np.log1p, np.where(bad, np.nan, self.hi), 0.0, 0.0)
        return IntervalArray(lo, hi)

    def exp(self) -> "IntervalArray":
        lo, _ = _libm(np.exp, self.lo, 0.0, 1.0)
        _, hi = _libm(np.exp, self.hi, 0.0, 1.0)
        return IntervalArray(np.maximum(lo, 0.0), hi)

    def expm1(self) -> "IntervalArray":
        lo, _ = _libm(np.expm1, self.lo, 0.0, 0.0)
        _, hi = _libm(np.expm1, self.hi, 0.0, 0.0)
        return IntervalArray(np.maximum(lo, -1.0), hi)

    # powers -------------------------------------------------------------

    def pow_int(self, k: int) -> "IntervalArray":
        if k < 0:
            return 1 / self.pow_int(-k)
        result = IntervalArray.const(Fraction(1), self.lo.shape)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base._square()
        return result

    def _square(self) -> "IntervalArray":
        if (self.lo >= 0).all():
            return self * self
        # x*x as a product of independent factors overestimates; square properly
        sq = self * self
        straddle = (self.lo < 0) & (self.hi > 0)
        return IntervalArray(np.where(straddle, 0.0, np.maximum(sq.lo, 0.0)), sq.hi)

    def pow_int_array(self, k) -> "IntervalArray":
        """Elementwise integer exponents."""
        k = np.asarray(k, dtype=np.int64)
        mag = np.abs(k)
        result = IntervalArray.const(Fraction(1), self.lo.shape)
        base = self
        while mag.any():
            bit = (mag & 1).astype(bool)
            prod = result * base
            result = IntervalArray(np.where(bit, prod.lo, result.lo), np.where(bit, prod.hi, result.hi))
            mag = mag >> 1
            if mag.any():
                base = base._square()
        neg = k < 0
        if neg.any():
            inv = 1 / result
            result = IntervalArray(np.where(neg, inv.lo, result.lo), np.where(neg, inv.hi, result.hi))
        return result

    def pow_rational(self, e: Fraction) -> "IntervalArray":
        e = Fraction(e)
        if e.denominator == 1:
            return self.pow_int(e.numerator)
        depth = e.denominator.bit_length() - 1
        if e.denominator == 1 << depth and depth <= _MAX_SQRT_DEPTH:
            r = self
            for _ in range(depth):
                r = r.sqrt()
            return r.pow_int(e.numerator)
        el, eh = _bracket(e)
        return self._pow_corners(np.full(self.lo.shape, el), np.full(self.lo.shape, eh))

    def pow(self, exponent: "IntervalArray") -> "IntervalArray":
        return self._pow_corners(exponent.lo, exponent.hi)

    def _pow_corners(self, el, eh) -> "IntervalArray":
        nonpos = self.lo <= 0
        blo = np.where(nonpos, np.nan, self.lo)
        bhi = np.where(nonpos, np.nan, self.hi)
        with np.errstate(all="ignore"):
            corners = [np.power(b, x) for b in (blo, bhi) for x in (el, eh)]
        lo = _down(np.minimum.reduce(corners), LIBM_ULPS)
        hi = _up(np.maximum.reduce(corners), LIBM_ULPS)
        return IntervalArray(np.maximum(lo, 0.0), hi)


def power_gap_array(p: IntervalArray, p_next: IntervalArray, x: Fraction) -> IntervalArray:
    """``p_next**x - p**x`` for x >= 0 via ``p**x * expm1(x * log1p(gap/p))``.

    The rewrite avoids the cancellation of the direct difference.
    """
    ratio = (p_next - p) / p
    t = ratio.log1p() * IntervalArray.const(Fraction(x), p.lo.shape)
    return p.pow_rational(x) * t.expm1()


def tri_compare_arrays(lhs: IntervalArray, rhs: IntervalArray) -> np.ndarray:
    """Elementwise verdict codes: LESS, GEQ or UNDECIDED (also for NaN rows)."""
    out = np.full(lhs.lo.shape, UNDECIDED, dtype=np.int8)
    out[lhs.hi < rhs.lo] = LESS
    out[lhs.lo >= rhs.hi] = GEQ
    out[lhs.bad | rhs.bad] = UNDECIDED
    return out
