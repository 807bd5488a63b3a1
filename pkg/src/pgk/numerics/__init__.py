"""Rigorous real arithmetic: intervals, tri-valued comparison, exact oracle."""

from pgk.numerics.interval import NumInterval, pow_interval, to_exact
from pgk.numerics.compare import (
    DEFAULT_LADDER,
    Escalation,
    PrecisionPolicy,
    TriVerdict,
    compare_with_escalation,
    tri_compare,
)
from pgk.numerics.vector import IntervalArray, tri_compare_arrays
from pgk.numerics.exact import exact_eval, exact_sides

__all__ = [
    "DEFAULT_LADDER",
    "Escalation",
    "IntervalArray",
    "NumInterval",
    "PrecisionPolicy",
    "TriVerdict",
    "compare_with_escalation",
    "exact_eval",
    "exact_sides",
    "pow_interval",
    "to_exact",
    "tri_compare",
    "tri_compare_arrays",
]
