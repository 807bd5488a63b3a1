"""Scalar directed-rounded intervals with an exact rational fast path.

Endpoints are held as :class:`fractions.Fraction`.  An interval whose two
endpoints coincide is *exact*: rational operations on exact operands stay
exact and unrounded.  As soon as an inexact operand or a transcendental
function is involved, the result endpoints are rounded outward to
``prec_bits`` significant bits, so sizes stay bounded.

Transcendental kernels come from ``mpmath.libmp``.  They are evaluated with
guard bits and then widened by a relative ``2**(1 - working_prec)`` before the
final outward rounding to ``prec_bits``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from mpmath import libmp

from pgk.errors import DomainError

GUARD_BITS = 24
# exact Fraction powers beyond this exponent go through the mpmath kernel
EXACT_POW_LIMIT = 64

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _raw_to_fraction(raw) -> Fraction:
    sign, man, exp, _ = raw
    if raw == libmp.fzero:
        return _ZERO
    if not man:
        raise DomainError("non-finite intermediate value")
    man = int(man)
    val = Fraction(man << exp) if exp >= 0 else Fraction(man, 1 << -exp)
    return -val if sign else val


def _fraction_to_raw(value: Fraction, prec: int, rnd: str):
    return libmp.from_rational(value.numerator, value.denominator, prec, rnd)


def round_down(value: Fraction, prec: int) -> Fraction:
    """Largest number with ``prec`` significant bits that is <= ``value``."""
    if not value:
        return _ZERO
    return _raw_to_fraction(_fraction_to_raw(value, prec, "f"))


def round_up(value: Fraction, prec: int) -> Fraction:
    if not value:
        return _ZERO
    return _raw_to_fraction(_fraction_to_raw(value, prec, "c"))


def _kernel(fn, arg: Fraction, prec: int, rnd: str) -> Fraction:
    """Apply an mpmath kernel to a rational argument with one-sided slack."""
    wp = prec + GUARD_BITS
    val = _raw_to_fraction(fn(_fraction_to_raw(arg, wp, rnd), wp, rnd))
    slack = abs(val) / (1 << (wp - 1))
    return val - slack if rnd == "f" else val + slack


def _iroot(n: int, k: int) -> int:
    """floor(n ** (1/k)) for n >= 0."""
    if n < 2:
        return n
    x = 1 << -(-n.bit_length() // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            return x
        x = y


def _exact_root(value: Fraction, k: int) -> Fraction | None:
    """The exact k-th root of a positive rational, if it is rational."""
    num, den = value.numerator, value.denominator
    rn, rd = _iroot(num, k), _iroot(den, k)
    if rn**k == num and rd**k == den:
        return Fraction(rn, rd)
    return None


@dataclass(frozen=True)
class NumInterval:
    """Closed interval ``[lo, hi]`` containing a real value."""

    lo: Fraction
    hi: Fraction
    prec_bits: int = 53

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    # construction -----------------------------------------------------

    @classmethod
    def exact(cls, value, prec_bits: int = 53) -> "NumInterval":
        v = Fraction(value)
        return cls(v, v, prec_bits)

    @classmethod
    def outward(cls, lo: Fraction, hi: Fraction, prec_bits: int) -> "NumInterval":
        """Round ``lo`` down and ``hi`` up to ``prec_bits`` (no-op for exact)."""
        if lo == hi:
            return cls(lo, hi, prec_bits)
        return cls(round_down(lo, prec_bits), round_up(hi, prec_bits), prec_bits)

    @classmethod
    def enclose(cls, value: Fraction, prec_bits: int) -> "NumInterval":
        """Rounded enclosure of a rational constant (degenerate if representable)."""
        value = Fraction(value)
        return cls(round_down(value, prec_bits), round_up(value, prec_bits), prec_bits)

    @classmethod
    def from_floats(cls, lo: float, hi: float, prec_bits: int = 53) -> "NumInterval":
        return cls(Fraction(lo), Fraction(hi), prec_bits)

    # inspection -------------------------------------------------------

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, value) -> bool:
        v = Fraction(value)
        return self.lo <= v <= self.hi

    def subset_of(self, other: "NumInterval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def float_bounds(self) -> tuple[float, float]:
        """Outward-rounded binary64 bounds (used for CSV/JSON emission)."""
        lo, hi = float(self.lo), float(self.hi)
        if Fraction(lo) > self.lo:
            lo = math.nextafter(lo, -math.inf)
        if Fraction(hi) < self.hi:
            hi = math.nextafter(hi, math.inf)
        return lo, hi

    def __repr__(self):
        lo, hi = self.float_bounds()
        tag = "exact" if self.is_exact else f"{self.prec_bits}b"
        return f"NumInterval[{lo!r}, {hi!r}]<{tag}>"

    # arithmetic -------------------------------------------------------

    def _coerce(self, other) -> "NumInterval":
        if isinstance(other, NumInterval):
            return other
        return NumInterval.exact(other, self.prec_bits)

    def _combine(self, other: "NumInterval", lo: Fraction, hi: Fraction) -> "NumInterval":
        prec = max(self.prec_bits, other.prec_bits)
        if self.is_exact and other.is_exact:
            return NumInterval(lo, hi, prec)
        return NumInterval.outward(lo, hi, prec)

    def __add__(self, other):
        other = self._coerce(other)
        return self._combine(other, self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return self._combine(other, self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return NumInterval(-self.hi, -self.lo, self.prec_bits)

    def __mul__(self, other):
        other = self._coerce(other)
        if self.is_exact and other.is_exact:
            v = self.lo * other.lo
            return self._combine(other, v, v)
        corners = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return self._combine(other, min(corners), max(corners))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other.lo <= 0 <= other.hi:
            raise DomainError(f"division by an enclosure containing 0: {other!r}")
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def reciprocal(self) -> "NumInterval":
        if self.lo <= 0 <= self.hi:
            raise DomainError(f"reciprocal of an enclosure containing 0: {self!r}")
        if self.is_exact:
            v = 1 / self.lo
            return NumInterval(v, v, self.prec_bits)
        return NumInterval.outward(1 / self.hi, 1 / self.lo, self.prec_bits)

    # powers and transcendental functions ------------------------------

    def pow_int(self, k: int) -> "NumInterval":
        if k < 0:
            return self.pow_int(-k).reciprocal()
        if k == 0:
            return NumInterval(_ONE, _ONE, self.prec_bits)
        if self.is_exact and (k <= EXACT_POW_LIMIT or self.lo.denominator == 1 or abs(self.lo.numerator) == 1):
            v = self.lo**k
            return NumInterval(v, v, self.prec_bits)
        lo, hi = self.lo, self.hi
        if lo >= 0:
            a, b = lo, hi
        elif hi <= 0:
            a, b = (-hi, -lo)
        else:
            a, b = _ZERO, max(-lo, hi)
        pa, pb = self._pow_bound(a, k, "f"), self._pow_bound(b, k, "c")
        if lo < 0 and k % 2:
            if hi <= 0:
                return NumInterval(-pb, -pa, self.prec_bits)
            return NumInterval(-self._pow_bound(-lo, k, "c"), self._pow_bound(hi, k, "c"), self.prec_bits)
        return NumInterval(pa, pb, self.prec_bits)

    def _pow_bound(self, base: Fraction, k: int, rnd: str) -> Fraction:
        # base >= 0
        if not base:
            return _ZERO
        if k <= EXACT_POW_LIMIT:
            v = base**k
            return round_down(v, self.prec_bits) if rnd == "f" else round_up(v, self.prec_bits)
        v = _kernel(lambda r, p, d: libmp.mpf_pow_int(r, k, p, d), base, self.prec_bits, rnd)
        return round_down(v, self.prec_bits) if rnd == "f" else round_up(v, self.prec_bits)

    def sqrt(self) -> "NumInterval":
        if self.lo < 0:
            raise DomainError(f"sqrt of an enclosure reaching below 0: {self!r}")
        if self.is_exact:
            root = _exact_root(self.lo, 2)
            if root is not None:
                return NumInterval(root, root, self.prec_bits)
        lo = _ZERO if not self.lo else _kernel(libmp.mpf_sqrt, self.lo, self.prec_bits, "f")
        hi = _kernel(libmp.mpf_sqrt, self.hi, self.prec_bits, "c")
        return NumInterval.outward(max(lo, _ZERO), hi, self.prec_bits)

    def log(self) -> "NumInterval":
        """Natural logarithm."""
        if self.lo <= 0:
            raise DomainError(f"log of an enclosure reaching 0 or below: {self!r}")
        if self.is_exact and self.lo == 1:
            return NumInterval(_ZERO, _ZERO, self.prec_bits)
        lo = _ZERO if self.lo == 1 else _kernel(libmp.mpf_log, self.lo, self.prec_bits, "f")
        hi = _ZERO if self.hi == 1 else _kernel(libmp.mpf_log, self.hi, self.prec_bits, "c")
        return NumInterval.outward(lo, hi, self.prec_bits)

    def exp(self) -> "NumInterval":
        if self.is_exact and not self.lo:
            return NumInterval(_ONE, _ONE, self.prec_bits)
        lo = _ONE if not self.lo else _kernel(libmp.mpf_exp, self.lo, self.prec_bits, "f")
        hi = _ONE if not self.hi else _kernel(libmp.mpf_exp, self.hi, self.prec_bits, "c")
        return NumInterval.outward(max(lo, _ZERO), hi, self.prec_bits)

    def pow_rational(self, e: Fraction) -> "NumInterval":
        """``self ** e`` for an exact rational exponent."""
        e = Fraction(e)
        if e.denominator == 1:
            return self.pow_int(e.numerator)
        if self.lo < 0 or (self.lo == 0 and e < 0):
            raise DomainError(f"non-integer power of an enclosure reaching {self.lo}")
        if self.is_exact:
            root = _exact_root(self.lo, e.denominator) if e.denominator <= EXACT_POW_LIMIT else None
            if root is not None:
                return NumInterval(root, root, self.prec_bits).pow_int(e.numerator)
        if self.lo == 0:
            hi = self._coerce(self.hi).pow_rational(e)
            return NumInterval(_ZERO, hi.hi, self.prec_bits)
        return (self.log() * e).exp()

    def pow(self, exponent: "NumInterval") -> "NumInterval":
        if exponent.is_exact:
            return self.pow_rational(exponent.lo)
        if self.lo <= 0:
            raise DomainError(f"real power of an enclosure reaching {self.lo}")
        return (self.log() * exponent).exp()


def pow_interval(base: int, expo, prec: int = 53) -> NumInterval:
    """Enclosure of ``base ** expo`` where ``expo`` is an exact decimal.

    ``expo`` may be a decimal string, an int or a Fraction; floats are
    rejected because they already carry representation error.
    """
    if base < 2:
        raise ValueError("base must be an integer >= 2")
    return NumInterval.exact(base, prec).pow_rational(to_exact(expo))


def to_exact(value) -> Fraction:
    """Convert an exact decimal string, int or Fraction to a Fraction."""
    if isinstance(value, float):
        raise TypeError("pass exponents as decimal strings or Fractions, not floats")
    if isinstance(value, str):
        value = value.strip()
    return Fraction(value)
