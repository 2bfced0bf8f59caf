"""
    Command line entry point.

        mmflearn run --config <path> --out <dir> [--seed S] [--runs K] [--method M] [--workers W]
        mmflearn report --in <dir> --out <file>
        mmflearn bench-tree --config <path>

    Exit codes: 0 success, 2 invalid input, 1 runtime failure.
"""

import argparse
import json
import logging
import sys

from .config import parse_config
from .experiment import ReportError, bench_tree, report, run_experiment
from .mmf import ValidationError

LATENCY_RATIO_LIMIT = 15.0


def _parser():
    p = argparse.ArgumentParser(prog='mmflearn')
    p.add_argument('-v', '--verbose', action='store_true')
    sub = p.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='simulate every configured method')
    run.add_argument('--config', required=True)
    run.add_argument('--out', required=True)
    run.add_argument('--seed', type=int)
    run.add_argument('--runs', type=int)
    run.add_argument('--method', action='append',
                     help='restrict to this method; may be repeated')
    run.add_argument('--workers', type=int)

    rep = sub.add_parser('report', help='aggregate summary CSVs into mean and standard error')
    rep.add_argument('--in', dest='in_dir', required=True)
    rep.add_argument('--out', required=True)

    bench = sub.add_parser('bench-tree', help='recommendation latency of the tree learner')
    bench.add_argument('--config', required=True)
    bench.add_argument('--agent', type=int, default=0)
    return p


def main(argv=None):
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(levelname)s %(message)s')
    try:
        if args.command == 'run':
            cfg = parse_config(args.config, seed=args.seed, runs=args.runs,
                               workers=args.workers)
            methods = tuple(args.method) if args.method else None
            if methods:
                cfg = cfg.replace(methods=methods)
            out = run_experiment(cfg, args.out, methods=methods)
            print(f'wrote {out}')
        elif args.command == 'report':
            print(f'wrote {report(args.in_dir, args.out)}')
        else:
            cfg = parse_config(args.config)
            if not 0 <= args.agent < cfg.n_agents:
                raise ValidationError(f'agent {args.agent} out of range', field='agent')
            res = bench_tree(cfg, agent=args.agent)
            ratio = res[10000]['latency_s'] / res[1000]['latency_s']
            print(json.dumps({str(k): v for k, v in res.items()}, indent=2))
            print(f'latency ratio 10000/1000: {ratio:.2f}')
            if ratio > LATENCY_RATIO_LIMIT:
                print(f'warning: ratio exceeds {LATENCY_RATIO_LIMIT:g}', file=sys.stderr)
    except (ValidationError, ReportError) as exc:
        print(f'error: {exc}', file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f'error: {exc.strerror}: {exc.filename}', file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f'error: {type(exc).__name__}: {exc}', file=sys.stderr)
        return 1
    return 0
