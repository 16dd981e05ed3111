"""Command-line entry point: run experiments and write CSV tables."""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, config_hash, load_config

SUBCOMMANDS = {
    "solve": (1, 2, 3, 4),
    "dnmap": (5,),
    "linearize": (6,),
    "reconstruct": (7,),
    "stability": (8,),
    "cgo": (9,),
    "gauge": (10, 11, 12, 13),
    "verify-all": tuple(range(1, 14)),
}

THREAD_VARIABLE = "FRACLAB_THREADS"


def build_parser():
    parser = argparse.ArgumentParser(prog="fraclab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fraclab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML configuration file")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        dest="overrides", help="override a configuration entry (repeatable)")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, help="seed for randomized fixtures")
    common.add_argument("--quiet", action="store_true", help="print only failures")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, numbers in SUBCOMMANDS.items():
        sub.add_parser(name, parents=[common],
                       help=f"acceptance criteria {', '.join(map(str, numbers))}")
    return parser


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, str)):
        return str(value)
    try:
        return format(float(value), ".17g")
    except (TypeError, ValueError):
        return str(value)


def _slug(text):
    return "".join(ch if ch.isalnum() else "_" for ch in text.lower()).strip("_")


def write_table(path, header, columns, rows):
    """CSV with a ``#``-prefixed metadata block."""
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def result_header(result, cfg, digest):
    lines = [
        f"fraclab {__version__}",
        f"config sha256 {digest}",
        f"seed {cfg['seed']}",
        f"criterion {result.number}: {result.title}",
        f"identity: {result.identity}",
    ]
    for c in result.checks:
        lines.append(f"check {c.name}: {_fmt(c.value)} {c.relation} {_fmt(c.tol)} "
                     f"{'pass' if c.passed else 'fail'}")
    for key in sorted(result.metrics):
        lines.append(f"metric {key}: {_fmt(result.metrics[key])}")
    return lines


def write_result(result, cfg, outdir):
    digest = config_hash(cfg)
    header = result_header(result, cfg, digest)
    stem = f"criterion_{result.number:02d}_{_slug(result.title)}"
    paths = [outdir / f"{stem}.csv"]
    write_table(paths[0], header, result.columns, result.rows)
    for name, (columns, rows) in sorted(result.fields.items()):
        p = outdir / f"{stem}_{_slug(name)}_field.csv"
        write_table(p, header, columns, rows)
        paths.append(p)
    return paths


def run(command, cfg, quiet=False, stream=None):
    """Run the criteria of ``command``; return the exit status and results."""
    from .experiments import CRITERIA

    stream = sys.stdout if stream is None else stream
    outdir = Path(cfg["output"])
    outdir.mkdir(parents=True, exist_ok=True)
    results = []
    for number in SUBCOMMANDS[command]:
        res = CRITERIA[number](cfg)
        write_result(res, cfg, outdir)
        results.append(res)
        if not quiet or not res.passed:
            print(f"{res.summary()} [{res.seconds:.1f} s]", file=stream, flush=True)
    failed = [r for r in results if not r.passed]
    for r in failed:
        for c in r.failed_checks():
            print(f"failed check in criterion {r.number}: {c.name} = {c.value:.6g} "
                  f"(required {c.relation} {c.tol:.6g})", file=sys.stderr)
    return (1 if failed else 0), results


def _limit_threads():
    threads = os.environ.get(THREAD_VARIABLE)
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)


def main(argv=None):
    args = build_parser().parse_args(argv)
    _limit_threads()
    try:
        cfg = load_config(args.config, args.overrides, seed=args.seed, output=args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    status, _ = run(args.command, cfg, quiet=args.quiet)
    return status


if __name__ == "__main__":
    sys.exit(main())
