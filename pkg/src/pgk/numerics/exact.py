"""Exact rational evaluation of both sides of the prime-power inequality.

Used as the oracle for the interval path whenever x is an integer and q has
no log/sqrt.
"""

from __future__ import annotations

from fractions import Fraction

from pgk.errors import InapplicableError


def integer_exponent(x) -> int:
    x = Fraction(x)
    if x.denominator != 1:
        raise InapplicableError(f"exact path needs an integer exponent, got x={x}")
    return x.numerator


def exact_sides(n: int, x, q, p_n: int, p_next: int) -> tuple[Fraction, Fraction]:
    """``(q_n p_{n+1}^x - q_{n+1} p_n^x,  p_n^x p_{n+1}^(x-1))`` as Fractions."""
    from pgk.dsl import EvalContext, evaluate_exact

    k = integer_exponent(x)
    qn = evaluate_exact(q, EvalContext(n, p_n))
    qn1 = evaluate_exact(q, EvalContext(n + 1, p_next))
    pn_x = Fraction(p_n) ** k
    pn1_x = Fraction(p_next) ** k
    lhs = qn * pn1_x - qn1 * pn_x
    rhs = pn_x * Fraction(p_next) ** (k - 1)
    return lhs, rhs


def exact_eval(side: str, x, q, n: int, primes) -> Fraction:
    """Exact value of one side ("lhs" or "rhs") at index ``n``.

    ``primes`` is anything with ``nth_prime``; ``q`` is a parsed expression.
    """
    if side not in ("lhs", "rhs"):
        raise ValueError(f"side must be 'lhs' or 'rhs', not {side!r}")
    lhs, rhs = exact_sides(n, x, q, primes.nth_prime(n), primes.nth_prime(n + 1))
    return lhs if side == "lhs" else rhs
