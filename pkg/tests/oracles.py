"""Independent reference implementations used as test oracles.

Nothing here imports pgk: primes come from trial division and real values
from the standard-library ``decimal`` module at 60 significant digits (the
package itself uses numpy binary64 and mpmath kernels).
"""

from __future__ import annotations

import math
from decimal import Decimal, localcontext
from fractions import Fraction

DIGITS = 60


def is_prime(k: int) -> bool:
    if k < 2:
        return False
    if k % 2 == 0:
        return k == 2
    d = 3
    while d * d <= k:
        if k % d == 0:
            return False
        d += 2
    return True


def primes_in(lo: int, hi: int) -> list[int]:
    return [k for k in range(lo, hi) if is_prime(k)]


def first_primes(count: int) -> list[int]:
    out, k = [], 2
    while len(out) < count:
        if is_prime(k):
            out.append(k)
        k += 1
    return out


def dec_pow(base: int, x: Fraction) -> Decimal:
    """base**x to DIGITS significant digits."""
    with localcontext() as ctx:
        ctx.prec = DIGITS + 10
        b = Decimal(base)
        if x.denominator == 1:
            return b ** int(x)
        return (Decimal(x.numerator) / Decimal(x.denominator) * b.ln()).exp()


def dec_q(q: str, n: int, p: int) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = DIGITS + 10
        if q == "1":
            return Decimal(1)
        if q == "n":
            return Decimal(n)
        if q == "p":
            return Decimal(p)
        if q == "n*log(n)":
            return Decimal(n) * Decimal(n).ln()
    raise ValueError(q)


def witness_margin(n: int, p: int, p1: int, x: Fraction, q: str, q_next_p: int) -> Decimal:
    """rhs - lhs of the prime-power gap inequality; > 0 means witness."""
    with localcontext() as ctx:
        ctx.prec = DIGITS + 10
        lhs = dec_q(q, n, p) * dec_pow(p1, x) - dec_q(q, n + 1, q_next_p) * dec_pow(p, x)
        rhs = dec_pow(p, x) * dec_pow(p1, x - 1)
        return rhs - lhs


def witnesses(x: Fraction, q: str, first: int, last: int, primes: list[int]) -> list[int]:
    """Witness indices; primes[k-1] is p_k and must reach index last+1.

    Raises if any margin is too close to 0 to decide at this precision.
    """
    out = []
    for n in range(first, last + 1):
        p, p1 = primes[n - 1], primes[n]
        m = witness_margin(n, p, p1, x, q, p1)
        if abs(m) < Decimal(10) ** (-40) * max(1, p1):
            raise AssertionError(f"oracle cannot decide n={n}")
        if m > 0:
            out.append(n)
    return out


def sqrt_diff_floor(a: int, b: int, digits: int = 40) -> Fraction:
    """Lower bound of sqrt(b) - sqrt(a) within 2*10^-digits, via isqrt scaling."""
    s = 10 ** (2 * digits)
    lo = math.isqrt(b * s) - math.isqrt(a * s) - 1
    return Fraction(lo, 10**digits)
