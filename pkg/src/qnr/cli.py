"""Command-line entry point.

Every command prints a JSON envelope ``{command, params, result, version}``
except ``scan``, which writes the envelope and a convergence CSV to
``--out`` and prints a comparison table.  Exit codes: 0 success, 2 bad
input, 3 I/O failure, 4 resource limit.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from decimal import Decimal, InvalidOperation
from math import prod
from pathlib import Path

from . import __version__
from .empirical import TRACE_COLUMNS, ScanConfig, convergence_trace
from .errors import DomainError, QnrError
from .patterns import build_pattern_classes, find_prime_with_pattern, large_m_construction
from .primes import PrimeTable, load_cache, save_cache, sieve_primes
from .quadratic import ResiduePattern, nk_nonresidues
from .series import (
    binom_identity,
    binom_tail,
    gap_constant,
    m_average,
    mu_k,
    mu_ratio_check,
    parse_z,
)

log = logging.getLogger("qnr")

CACHE_ENV = "QNR_PRIME_CACHE"
EXIT_OK, EXIT_INPUT, EXIT_IO, EXIT_RESOURCE = 0, 2, 3, 4


def sig12(value):
    """Round floats to 12 significant digits for output; recurse into containers."""
    if isinstance(value, float):
        return float(f"{value:.12g}")
    if isinstance(value, dict):
        return {k: sig12(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sig12(v) for v in value]
    return value


def envelope(command: str, params: dict, result) -> dict:
    return {"command": command, "params": sig12(params), "result": sig12(result), "version": __version__}


def int_arg(text: str) -> int:
    """Integer from '1000', '1e6' or '2.5e3'; non-integral values are refused."""
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value.is_finite() or value != value.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(value)


def eps_arg(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def z_arg(text: str):
    try:
        return parse_z(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def load_table(limit: int = 10**5) -> PrimeTable:
    """Sieve to ``limit``, going through the cache file named by $QNR_PRIME_CACHE if set."""
    path = os.environ.get(CACHE_ENV)
    if path and Path(path).is_file():
        try:
            table = load_cache(path)
        except (QnrError, OSError) as exc:
            log.warning("ignoring prime cache %s: %s", path, exc)
        else:
            if table.limit >= limit:
                return table
            table = table.extend(limit)
            _store_cache(table, path)
            return table
    table = sieve_primes(limit)
    if path:
        _store_cache(table, path)
    return table


def _store_cache(table: PrimeTable, path: str) -> None:
    try:
        save_cache(table, path)
    except OSError as exc:
        log.warning("could not write prime cache %s: %s", path, exc)


def _series_result(sv) -> dict:
    return {"value": sv.value, "tail_bound": sv.tail_bound, "terms_used": sv.terms_used}


def cmd_nkp(args) -> dict:
    res = nk_nonresidues(args.p, args.k, load_table())
    return envelope("nkp", {"p": args.p, "k": args.k}, {"p": res.p, "values": list(res.values)})


def cmd_series(args) -> dict:
    table = load_table()
    name = args.name
    params: dict = {"name": name}
    if name in ("mu", "ratio", "binom-identity", "binom-tail") and args.k is None:
        raise DomainError(f"series {name} needs --k")
    if name == "mu":
        params.update(k=args.k, eps=args.eps)
        result = _series_result(mu_k(args.k, args.eps, table, terms=args.terms))
    elif name == "gap":
        if args.z is None:
            raise DomainError("series gap needs --z num/den")
        params.update(z=f"{args.z.numerator}/{args.z.denominator}", eps=args.eps)
        sv = gap_constant(args.z, args.eps, table, terms=args.terms)
        result = _series_result(sv) | {"complement": 1 - sv.value}
    elif name == "mavg":
        params.update(eps=args.eps)
        result = _series_result(m_average(args.eps, table))
    elif name == "binom-identity":
        last = args.n if args.n is not None else args.k + 400
        params.update(k=args.k, n=last)
        result = {"value": binom_identity(args.k, last)}
    elif name == "binom-tail":
        params.update(k=args.k)
        result = {"value": binom_tail(args.k)}
    else:
        params.update(k=args.k)
        result = {"value": mu_ratio_check(args.k, table, eps=args.eps)}
    return envelope("series", params, result)


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def cmd_scan(args, out=None) -> dict:
    out = out or sys.stdout
    z_list = tuple(args.z or ())
    config = ScanConfig(args.x, args.kmax, z_list, args.pattern_n, args.shards, args.threads)
    table = load_table(max(args.x, 10**5))
    result, trace = convergence_trace(config, table, eps=args.eps)
    params = {
        "x": args.x,
        "k_max": args.kmax,
        "z_list": [f"{z.numerator}/{z.denominator}" for z in z_list],
        "pattern_n": args.pattern_n,
        "eps": args.eps,
    }
    env = envelope("scan", params, result.to_json_dict())

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=TRACE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(sig12(row) for row in trace)
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(out_dir / "scan.json", json.dumps(env, indent=2) + "\n")
        _atomic_write(out_dir / "convergence.csv", buf.getvalue())
    except OSError as exc:
        raise _IOFailure(f"cannot write results to {out_dir}: {exc}") from exc

    final = [row for row in trace if row["x"] == args.x]
    print(f"primes scanned: {result.primes_scanned}  (odd primes <= {args.x})", file=out)
    print(f"{'statistic':<14} {'empirical':>16} {'series':>16} {'abs_err':>12}", file=out)
    for row in final:
        print(
            f"{row['stat_name']:<14} {row['empirical']:>16.12g} "
            f"{row['theoretical']:>16.12g} {row['abs_err']:>12.4g}",
            file=out,
        )
    return env


class _IOFailure(Exception):
    pass


def _phi_of_modulus(q_primes: list[int]) -> int:
    return 4 * prod(p - 1 for p in q_primes)


def cmd_pattern(args) -> dict:
    pattern = ResiduePattern.parse(args.eps)
    table = load_table()
    classes = build_pattern_classes(pattern, table)
    limit = args.limit if args.limit is not None else 10**6
    prime = find_prime_with_pattern(pattern, limit, table, classes)
    size = len(classes)
    result = {
        "n": pattern.n,
        "q": classes.q,
        "class_count": size,
        "phi_q_over_2n": _phi_of_modulus(list(classes.odd_primes)) // 2**pattern.n,
        "classes": [int(t) for t in classes.classes] if size <= args.show else None,
        "prime": prime,
    }
    return envelope("pattern", {"eps": args.eps, "limit": limit}, result)


def cmd_largem(args) -> dict:
    record = large_m_construction(args.y, args.limit, load_table())
    return envelope("largem", {"y": args.y, "limit": args.limit}, record.to_json_dict())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnr", description="Prime quadratic non-residues: averages, gaps, constructions."
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nkp", help="k smallest prime non-residues mod p")
    p.add_argument("--p", type=int_arg, required=True)
    p.add_argument("--k", type=int_arg, default=1)
    p.set_defaults(func=cmd_nkp)

    p = sub.add_parser("series", help="evaluate a limit constant")
    p.add_argument(
        "name", choices=["mu", "gap", "mavg", "binom-identity", "binom-tail", "ratio"]
    )
    p.add_argument("--k", type=int_arg)
    p.add_argument("--z", type=z_arg)
    p.add_argument("--n", type=int_arg, help="last index for binom-identity")
    p.add_argument("--eps", type=eps_arg, default=1e-9)
    p.add_argument("--terms", type=int_arg, help="fixed number of terms (mu, gap)")
    p.set_defaults(func=cmd_series)

    p = sub.add_parser("scan", help="empirical statistics over primes p <= x")
    p.add_argument("--x", type=int_arg, required=True)
    p.add_argument("--kmax", type=int_arg, default=2)
    p.add_argument("--z", type=z_arg, action="append", help="gap threshold num/den; repeatable")
    p.add_argument("--pattern-n", type=int_arg, default=0)
    p.add_argument("--shards", type=int_arg, default=1)
    p.add_argument("--threads", type=int_arg, default=None)
    p.add_argument("--eps", type=eps_arg, default=1e-9, help="series accuracy for the comparison")
    p.add_argument("--out", default="qnr-scan")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("pattern", help="residue classes and least prime for a +/- pattern")
    p.add_argument("--eps", required=True, help="pattern such as '+-+'")
    p.add_argument("--limit", type=int_arg)
    p.add_argument("--show", type=int_arg, default=64, help="list classes when at most this many")
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("largem", help="construct a prime with large M(p)")
    p.add_argument("--y", type=int_arg, required=True)
    p.add_argument("--limit", type=int_arg)
    p.set_defaults(func=cmd_largem)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        env = args.func(args)
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except QnrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.command != "scan":
        print(json.dumps(env))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
