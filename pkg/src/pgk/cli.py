"""Command-line front end: ``pgk sieve | witness | records | kummer``.

Exit codes: 0 success, 1 computation/resource failure, 2 usage or
hypothesis error.  Reports go to stdout (or ``--output``) as CSV or JSON.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from pgk import __version__, dsl
from pgk.errors import (
    DSLError,
    EvaluationError,
    HypothesisError,
    InapplicableError,
    IndeterminateSignError,
    PGKError,
    ResourceLimitError,
)
from pgk.numerics import PrecisionPolicy, to_exact
from pgk.primes import DEFAULT_HARD_LIMIT, PrimeCache
from pgk.report import Report, SIEVE_COLUMNS, constructive_report, exact_text, kummer_report, records_report, witness_report

log = logging.getLogger("pgk")

ENV_CACHE = "PGK_CACHE_DIR"
DEFAULT_TO = 1000

EXIT_OK, EXIT_RESOURCE, EXIT_USAGE = 0, 1, 2


class UsageError(PGKError):
    pass


def resolve_cache_dir(flag: str | None) -> Path:
    """--cache-dir, then $PGK_CACHE_DIR, then the platform data directory."""
    if flag:
        return Path(flag)
    env = os.environ.get(ENV_CACHE)
    if env:
        return Path(env)
    import platformdirs

    return Path(platformdirs.user_data_dir("pgk"))


@dataclass
class RunConfig:
    cache_dir: Path
    policy: PrecisionPolicy
    hard_limit: int
    threads: int
    fmt: str
    output: str | None

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        if args.hard_limit < 2:
            raise UsageError("--hard-limit must be at least 2")
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        try:
            policy = PrecisionPolicy.parse(args.precision)
        except ValueError as err:
            raise UsageError(f"bad --precision: {err}") from err
        return cls(resolve_cache_dir(args.cache_dir), policy, args.hard_limit, args.threads, args.format, args.output)

    def cache(self) -> PrimeCache:
        return PrimeCache(self.cache_dir, hard_limit=self.hard_limit, threads=self.threads)

    def emit(self, report: Report) -> None:
        if self.output:
            with open(self.output, "w", newline="", encoding="utf-8") as fh:
                report.write(fh, self.fmt)
        else:
            report.write(sys.stdout, self.fmt)


def _range(args) -> tuple[int, int]:
    if args.from_ < 1:
        raise UsageError("--from must be >= 1")
    return args.from_, args.to


def _exponent(text: str):
    try:
        return to_exact(text)
    except (ValueError, ZeroDivisionError) as err:
        raise UsageError(f"bad exponent {text!r}") from err


def cmd_sieve(args, cfg: RunConfig) -> int:
    cache = cfg.cache()
    if args.limit is not None:
        if args.limit < 2:
            raise UsageError("--limit must be at least 2")
        count = cache.prime_count(args.limit)
        largest = int(cache.primes[count - 1])
    else:
        if args.count < 1:
            raise UsageError("--count must be at least 1")
        cache.ensure_count(args.count)
        count, largest = args.count, cache.nth_prime(args.count)
    # nothing here depends on how far earlier runs happened to sieve
    summary = {"count": count, "largest": largest}
    meta = {"range": f"1..{count}", "mode": "limit" if args.limit is not None else "count"}
    print(f"{count} primes, largest {largest}", file=sys.stderr)
    cfg.emit(Report("sieve", meta, summary, SIEVE_COLUMNS, [[count, largest]]))
    return EXIT_OK


def cmd_witness(args, cfg: RunConfig) -> int:
    from pgk.gaps import scan_witnesses

    x = _exponent(args.x)
    rep = scan_witnesses(
        x, args.q, _range(args), cfg.policy, primes=cfg.cache(), method=args.method, threads=cfg.threads
    )
    cfg.emit(witness_report(rep))
    return EXIT_OK


def cmd_records(args, cfg: RunConfig) -> int:
    from pgk.gaps import Quantity, check_hypothesis, record_scan

    quantity = Quantity.lookup(args.quantity)
    x = _exponent(args.x)
    check_hypothesis(quantity, x)
    scan = record_scan(quantity, x, _range(args), cfg.policy, primes=cfg.cache(), threads=cfg.threads)
    cfg.emit(records_report(scan, cfg.policy))
    return EXIT_OK


def cmd_kummer(args, cfg: RunConfig) -> int:
    from pgk import kummer

    index_range = _range(args)
    start = args.start if args.start is not None else index_range[0]
    needs_p = any("p" in dsl.variables(dsl.parse_sequence(t)) for t in (args.a, args.b, args.q) if t)
    primes = cfg.cache() if needs_p else None
    if args.mode == "constructive":
        if args.sum is None:
            raise UsageError("--mode constructive needs --sum S")
        S = _exponent(args.sum)
        rows = kummer.constructive_scan(
            args.a, args.b, S, index_range, cfg.policy.ladder[-1], primes=primes, start=start
        )
        cfg.emit(constructive_report(rows, args.a, args.b, exact_text(S), index_range, cfg.policy.ladder[-1]))
        return EXIT_OK
    if args.q is None:
        raise UsageError(f"--mode {args.mode} needs --q")
    inst = kummer.KummerInstance.parse(args.a, args.b, args.q, start)
    scan = kummer.scan_sufficiency if args.mode == "sufficiency" else kummer.scan_violations
    result = scan(inst, index_range, cfg.policy, primes=primes, threads=cfg.threads)
    cfg.emit(kummer_report(result, inst, args.mode, cfg.policy))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--cache-dir", help=f"prime cache directory (default: ${ENV_CACHE}, then the platform data dir)")
    g.add_argument("--precision", default="53,128,256,1024", help="ascending precision ladder in bits")
    g.add_argument("--hard-limit", type=int, default=DEFAULT_HARD_LIMIT, help="largest integer the sieve may reach")
    g.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--output", "-o", help="write the report here instead of stdout")
    g.add_argument("-v", "--verbose", action="store_true")

    def scan_range(p, default_to=DEFAULT_TO):
        p.add_argument("--from", dest="from_", type=int, default=1, metavar="FROM")
        p.add_argument("--to", type=int, default=default_to)

    parser = argparse.ArgumentParser(prog="pgk", description="Prime-power gaps, gap records and Kummer-type tests.")
    parser.add_argument("--version", action="version", version=f"pgk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sieve", parents=[common], help="extend the prime cache")
    what = p.add_mutually_exclusive_group(required=True)
    what.add_argument("--count", type=int, help="make sure this many primes are cached")
    what.add_argument("--limit", type=int, help="sieve every integer up to this bound")
    p.set_defaults(func=cmd_sieve)

    p = sub.add_parser("witness", parents=[common], help="scan for witnesses of the prime-power gap inequality")
    p.add_argument("--x", default="1", help="exponent (decimal or p/q)")
    p.add_argument("--q", default="1", help="positive sequence in n and p, or one of: " + ", ".join(dsl.SHORTHANDS))
    p.add_argument("--method", choices=("interval", "exact"), default="interval")
    scan_range(p)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("records", parents=[common], help="record minima of a gap quantity")
    p.add_argument("--quantity", required=True, choices=("gap_over_px", "gap_over_log", "power_gap"))
    p.add_argument("--x", default="1")
    scan_range(p)
    p.set_defaults(func=cmd_records)

    p = sub.add_parser("kummer", parents=[common], help="Kummer-type margin scans")
    p.add_argument("--a", required=True)
    p.add_argument("--b", default="1")
    p.add_argument("--q")
    p.add_argument("--mode", choices=("sufficiency", "violations", "constructive"), default="sufficiency")
    p.add_argument("--sum", help="known value of sum a_n b_n (constructive mode)")
    p.add_argument("--start", type=int, help="starting index N (default: --from)")
    scan_range(p)
    p.set_defaults(func=cmd_kummer)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig.from_args(args)
        return args.func(args, cfg)
    except (ResourceLimitError, MemoryError) as err:
        print(f"pgk: resource failure: {err}", file=sys.stderr)
        return EXIT_RESOURCE
    except IndeterminateSignError as err:
        print(f"pgk: unresolved at the precision cap: {err}", file=sys.stderr)
        return EXIT_RESOURCE
    except HypothesisError as err:
        print(f"pgk: hypothesis error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, DSLError, InapplicableError, EvaluationError, ValueError) as err:
        print(f"pgk: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
