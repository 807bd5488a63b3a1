"""CSV / JSON emission of scan results.

Every report starts with ``#`` metadata lines (tool version, command, the
scan parameters, precision policy, summary) so a CSV file describes itself.
Nothing run-dependent (timestamps, thread counts, paths) goes into the
output, which keeps reports byte-identical across runs and thread counts.
Floats are written with ``repr``, the shortest round-tripping form.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from pgk import __version__
from pgk.numerics.compare import TriVerdict

TOOL = f"pgk {__version__}"

WITNESS_COLUMNS = ("n", "p_n", "p_n1", "lhs_lo", "lhs_hi", "rhs_lo", "rhs_hi", "verdict")
RECORD_COLUMNS = ("n", "p_n", "value_lo", "value_hi", "quantity", "x")
KUMMER_COLUMNS = ("n", "margin_lo", "margin_hi", "verdict", "prec_bits")
CONSTRUCTIVE_COLUMNS = ("n", "q_lo", "q_hi", "residual_lo", "residual_hi")
SIEVE_COLUMNS = ("count", "largest")


def exact_text(x: Fraction) -> str:
    """Decimal spelling when finite ("0.5"), otherwise "p/q"."""
    x = Fraction(x)
    d = x.denominator
    for prime in (2, 5):
        while d % prime == 0:
            d //= prime
    if d != 1:
        return str(x)
    if x.denominator == 1:
        return str(x.numerator)
    digits = 0
    while (x * 10**digits).denominator != 1:
        digits += 1
    scaled = abs(x.numerator * 10**digits // x.denominator)
    s = str(scaled).rjust(digits + 1, "0")
    sign = "-" if x < 0 else ""
    return f"{sign}{s[:-digits]}.{s[-digits:]}"


@dataclass
class Report:
    command: str
    meta: dict
    summary: dict
    columns: tuple[str, ...]
    rows: Iterable[list] = field(default_factory=list)

    def header_lines(self) -> list[str]:
        lines = [f"# tool: {TOOL}", f"# command: {self.command}"]
        lines += [f"# {k}: {v}" for k, v in self.meta.items()]
        lines.append("# summary: " + json.dumps(self.summary, sort_keys=True, separators=(",", ":")))
        return lines

    def write_csv(self, out) -> None:
        for line in self.header_lines():
            out.write(line + "\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(self.columns)
        w.writerows(self.rows)

    def to_json_obj(self) -> dict:
        return {
            "tool": TOOL,
            "command": self.command,
            "metadata": self.meta,
            "summary": self.summary,
            "columns": list(self.columns),
            "rows": [dict(zip(self.columns, r)) for r in self.rows],
        }

    def write_json(self, out) -> None:
        json.dump(self.to_json_obj(), out, indent=1, allow_nan=False)
        out.write("\n")

    def write(self, out, fmt: str = "csv") -> None:
        if fmt == "json":
            self.write_json(out)
        elif fmt == "csv":
            self.write_csv(out)
        else:
            raise ValueError(f"unknown format {fmt!r}")

    def render(self, fmt: str = "csv") -> str:
        buf = io.StringIO()
        self.write(buf, fmt)
        return buf.getvalue()


def _verdict_names(codes: np.ndarray) -> list[str]:
    names = {c.code: c.value for c in TriVerdict}
    return [names[int(c)] for c in codes.tolist()]


def witness_report(report, command: str = "witness") -> Report:
    r = report.rows
    rows = []
    if r is not None:
        rows = list(
            zip(
                r.n.tolist(),
                r.p.tolist(),
                r.p_next.tolist(),
                r.lhs_lo.tolist(),
                r.lhs_hi.tolist(),
                r.rhs_lo.tolist(),
                r.rhs_hi.tolist(),
                _verdict_names(r.verdict),
            )
        )
    meta = {
        "x": exact_text(report.x),
        "q": report.q_text,
        "range": f"{report.range[0]}..{report.range[1]}",
        "policy": str(report.policy),
    }
    return Report(command, meta, report.summary(), WITNESS_COLUMNS, rows)


def records_report(scan, policy, command: str = "records") -> Report:
    x = exact_text(scan.x)
    lo, hi = scan.lo.copy(), scan.hi.copy()
    for i, n in enumerate(scan.n.tolist()):
        if n in scan.refined:
            lo[i], hi[i] = scan.refined[n].float_bounds()
    q = scan.quantity.value
    rows = [[n, p, a, b, q, x] for n, p, a, b in zip(scan.n.tolist(), scan.p.tolist(), lo.tolist(), hi.tolist())]
    summary = {
        "quantity": q,
        "tag": f"{scan.quantity.short}({x})",
        "x": x,
        "range": list(scan.range),
        "record_events": len(scan),
        "strictly_decreasing": scan.strictly_decreasing(),
        "unconfirmed": scan.unconfirmed,
        "final_record": rows[-1][:4] if rows else None,
        "liminf_upper_bound": None if not rows else rows[-1][3],
        "liminf_caption": "upper bound on liminf over scanned range",
    }
    meta = {"quantity": q, "x": x, "range": f"{scan.range[0]}..{scan.range[1]}", "policy": str(policy)}
    return Report(command, meta, summary, RECORD_COLUMNS, rows)


def kummer_report(result, instance, mode: str, policy, command: str = "kummer") -> Report:
    rows = []
    for m in result.rows:
        lo, hi = m.margin.float_bounds()
        rows.append([m.n, lo, hi, m.verdict.value, m.prec_bits])
    meta = {"mode": mode, **{k: v for k, v in instance.describe().items() if v is not None}}
    meta["range"] = f"{result.range[0]}..{result.range[1]}"
    meta["policy"] = str(policy)
    return Report(command, meta, result.summary(), KUMMER_COLUMNS, rows)


def constructive_report(rows_in, a_text: str, b_text: str, S, index_range, prec: int, command: str = "kummer") -> Report:
    rows = []
    worst = 0.0
    for r in rows_in:
        ql, qh = r.q.float_bounds()
        rl, rh = r.residual.float_bounds()
        worst = max(worst, abs(rl), abs(rh))
        rows.append([r.n, ql, qh, rl, rh])
    exact = all(r.residual.is_exact and r.residual.lo == 0 for r in rows_in)
    summary = {
        "rows": len(rows),
        "residual_max_abs": worst,
        "residual_exactly_zero": exact,
        "range": list(index_range),
    }
    meta = {
        "mode": "constructive",
        "a": a_text,
        "b": b_text,
        "sum": S if isinstance(S, str) else exact_text(S),
        "range": f"{index_range[0]}..{index_range[1]}",
        "precision": prec,
    }
    return Report(command, meta, summary, CONSTRUCTIVE_COLUMNS, rows)


# JSON schemas (draft 2020-12) used by the tests to validate emitted reports.

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_VERDICT = {"enum": [v.value for v in TriVerdict]}


def _schema(row_props: dict) -> dict:
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "required": ["tool", "command", "metadata", "summary", "columns", "rows"],
        "properties": {
            "tool": {"type": "string"},
            "command": {"type": "string"},
            "metadata": {"type": "object", "required": ["range"]},
            "summary": {"type": "object"},
            "columns": {"type": "array", "items": {"type": "string"}},
            "rows": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": list(row_props),
                    "properties": row_props,
                    "additionalProperties": False,
                },
            },
        },
    }


WITNESS_SCHEMA = _schema(
    {
        "n": _INT,
        "p_n": _INT,
        "p_n1": _INT,
        "lhs_lo": _NUM,
        "lhs_hi": _NUM,
        "rhs_lo": _NUM,
        "rhs_hi": _NUM,
        "verdict": _VERDICT,
    }
)
RECORD_SCHEMA = _schema(
    {"n": _INT, "p_n": _INT, "value_lo": _NUM, "value_hi": _NUM, "quantity": {"type": "string"}, "x": {"type": "string"}}
)
KUMMER_SCHEMA = _schema({"n": _INT, "margin_lo": _NUM, "margin_hi": _NUM, "verdict": _VERDICT, "prec_bits": _INT})
CONSTRUCTIVE_SCHEMA = _schema({"n": _INT, "q_lo": _NUM, "q_hi": _NUM, "residual_lo": _NUM, "residual_hi": _NUM})
