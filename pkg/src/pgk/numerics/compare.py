"""Tri-valued comparison of enclosures and the precision ladder."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

from pgk.numerics.interval import NumInterval


class TriVerdict(enum.Enum):
    STRICTLY_LESS = "STRICTLY_LESS"
    GREATER_OR_EQUAL = "GREATER_OR_EQUAL"
    INDETERMINATE = "INDETERMINATE"

    @property
    def decided(self) -> bool:
        return self is not TriVerdict.INDETERMINATE

    @property
    def code(self) -> int:
        return _CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "TriVerdict":
        return _FROM_CODES[int(code)]


# compact codes used by the vectorised scanners
LESS, GEQ, UNDECIDED = 1, 0, -1
_CODES = {TriVerdict.STRICTLY_LESS: LESS, TriVerdict.GREATER_OR_EQUAL: GEQ, TriVerdict.INDETERMINATE: UNDECIDED}
_FROM_CODES = {v: k for k, v in _CODES.items()}

DEFAULT_LADDER = (53, 128, 256, 1024)


@dataclass(frozen=True)
class PrecisionPolicy:
    """Ascending list of working precisions (bits), truncated at ``cap``."""

    ladder: tuple[int, ...] = DEFAULT_LADDER
    cap: int | None = None

    def __post_init__(self):
        ladder = tuple(int(b) for b in self.ladder)
        if not ladder:
            raise ValueError("precision ladder must be nonempty")
        if any(b <= 0 for b in ladder):
            raise ValueError("precisions must be positive")
        if any(a >= b for a, b in zip(ladder, ladder[1:])):
            raise ValueError(f"precision ladder must be strictly ascending: {ladder}")
        cap = ladder[-1] if self.cap is None else int(self.cap)
        if cap < ladder[0]:
            raise ValueError(f"cap {cap} is below the first rung {ladder[0]}")
        object.__setattr__(self, "ladder", tuple(b for b in ladder if b <= cap))
        object.__setattr__(self, "cap", cap)

    @classmethod
    def parse(cls, text: str, cap: int | None = None) -> "PrecisionPolicy":
        return cls(tuple(int(t) for t in text.replace(" ", "").split(",") if t), cap)

    def above(self, bits: int) -> tuple[int, ...]:
        """Rungs strictly above ``bits`` (where escalation continues)."""
        return tuple(b for b in self.ladder if b > bits)

    def __str__(self):
        return ",".join(str(b) for b in self.ladder)


def tri_compare(lhs: NumInterval, rhs: NumInterval) -> TriVerdict:
    """Decide ``lhs < rhs`` from enclosures; strictness only across a gap."""
    if lhs.hi < rhs.lo:
        return TriVerdict.STRICTLY_LESS
    if lhs.lo >= rhs.hi:
        return TriVerdict.GREATER_OR_EQUAL
    return TriVerdict.INDETERMINATE


@dataclass(frozen=True)
class Escalation:
    verdict: TriVerdict
    prec_bits: int
    lhs: NumInterval
    rhs: NumInterval

    @property
    def widths(self):
        return self.lhs.width, self.rhs.width


def compare_with_escalation(
    lhs_thunk: Callable[[int], NumInterval],
    rhs_thunk: Callable[[int], NumInterval],
    policy: PrecisionPolicy | None = None,
    rungs: tuple[int, ...] | None = None,
) -> Escalation:
    """Walk the ladder until ``lhs < rhs`` is decided or the cap is exhausted.

    A thunk may raise :class:`~pgk.errors.IndeterminateSignError` or
    :class:`~pgk.errors.DomainError` at low precision; the first is retried at
    the next rung, the second propagates.
    """
    from pgk.errors import IndeterminateSignError

    policy = policy or PrecisionPolicy()
    rungs = policy.ladder if rungs is None else rungs
    result = None
    last_err = None
    for bits in rungs:
        try:
            lhs, rhs = lhs_thunk(bits), rhs_thunk(bits)
        except IndeterminateSignError as err:
            last_err = err
            continue
        result = Escalation(tri_compare(lhs, rhs), bits, lhs, rhs)
        if result.verdict.decided:
            return result
    if result is None:
        if last_err is None:
            raise ValueError("no precision rungs to evaluate")
        raise last_err
    return result
