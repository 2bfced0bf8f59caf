"""
    Seeded multi-run orchestration, CSV output, aggregate reports and the tree latency benchmark.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
import glob
import json
import logging
import os
import time

import numpy as np

from . import __version__
from .mechanisms import MechanismKind, simulate
from .metrics import fairness_gap_series
from .payoffs import sample_load, sample_reward
from .rng import make_stream

log = logging.getLogger(__name__)

SUMMARY_HEADER = ['method', 'run', 't', 'round_loss', 'cum_loss']
AGENT_HEADER = ['method', 'run', 't', 'agent', 'phase', 'load', 'reported_load', 'allocation',
                'reward', 'ud_est', 'ud_lb', 'ud_ub', 'fairness_gap']
REPORT_HEADER = ['method', 't', 'n_runs', 'mean_cum_loss', 'stderr_cum_loss']


class ReportError(ValueError):
    pass


def _fmt(x):
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ''
    if isinstance(x, (float, np.floating)):
        return format(float(x), '.12g')
    return str(x)


def _run_one(args):
    config, method, run, digest = args
    trace = simulate(config, method, run=run, track_intervals=True, digest=digest)
    gap = fairness_gap_series(trace)
    summary = [[method, run, r.t, _fmt(r.loss.lot), _fmt(c)]
               for r, c in zip(trace.records, trace.cum_loss)]
    agents = []
    for idx, r in enumerate(trace.records):
        for i in range(len(trace.profiles)):
            lb = r.ud_lb[i] if r.ud_lb is not None else None
            ub = r.ud_ub[i] if r.ud_ub is not None else None
            agents.append([method, run, r.t, i, r.phase, _fmt(r.loads[i]),
                           _fmt(r.reported_loads[i]), _fmt(r.allocations[i]),
                           _fmt(r.rewards[i]), _fmt(r.ud_est[i]), _fmt(lb), _fmt(ub),
                           _fmt(gap[idx, i])])
    return summary, agents


def _write_csv(path, header, rows, digest):
    with open(path, 'w', encoding='utf-8', newline='') as fh:
        fh.write(f'# config_digest={digest}\n')
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)


def run_experiment(config, out_dir, methods=None, runs=None, workers=None):
    """ Writes summary.csv, agents.csv and metadata.json under out_dir. """
    methods = tuple(methods or config.methods)
    runs = config.runs if runs is None else runs
    workers = config.workers if workers is None else workers
    digest = config.digest()
    os.makedirs(out_dir, exist_ok=True)
    tasks = [(config, m, r, digest) for m in methods for r in range(runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = []
        for task in tasks:
            log.info('running %s run %d', task[1], task[2])
            results.append(_run_one(task))
    summary = [row for res in results for row in res[0]]
    agents = [row for res in results for row in res[1]]
    _write_csv(os.path.join(out_dir, 'summary.csv'), SUMMARY_HEADER, summary, digest)
    _write_csv(os.path.join(out_dir, 'agents.csv'), AGENT_HEADER, agents, digest)
    meta = {'config_digest': digest, 'seed': config.seed, 'runs': runs,
            'methods': list(methods), 'version': __version__, 'config': config.as_dict()}
    with open(os.path.join(out_dir, 'metadata.json'), 'w', encoding='utf-8') as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=list)
        fh.write('\n')
    return out_dir


def _read_summary(path):
    with open(path, encoding='utf-8') as fh:
        first = fh.readline().strip()
        if not first.startswith('# config_digest='):
            raise ReportError(f'{path}: missing config digest header')
        digest = first.split('=', 1)[1]
        rows = list(csv.DictReader(fh))
    return digest, rows


def report(in_dir, out_file):
    """ Mean and standard error of cum_loss across runs for every (method, t). """
    paths = sorted(glob.glob(os.path.join(in_dir, '**', 'summary*.csv'), recursive=True))
    if not paths:
        raise ReportError(f'no summary CSV under {in_dir}')
    digests = set()
    table = {}
    for path in paths:
        digest, rows = _read_summary(path)
        digests.add(digest)
        for row in rows:
            key = (row['method'], int(row['t']))
            table.setdefault(key, {})[(path, int(row['run']))] = float(row['cum_loss'])
    if len(digests) > 1:
        raise ReportError(f'mixed configurations in {in_dir}: {sorted(digests)}')
    out = []
    for (method, t) in sorted(table, key=lambda k: (k[0], k[1])):
        vals = np.array([table[(method, t)][k] for k in sorted(table[(method, t)])])
        se = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
        out.append([method, t, len(vals), _fmt(float(vals.mean())), _fmt(se)])
    parent = os.path.dirname(os.path.abspath(out_file))
    os.makedirs(parent, exist_ok=True)
    _write_csv(out_file, REPORT_HEADER, out, digests.pop())
    return out_file


def bench_tree(config, checkpoints=(100, 1000, 10000), agent=0):
    """ Mean time per recommendation, including bound refreshes, over the rounds leading up to
    each checkpoint (number of recorded points).

    One agent's tree is fed by a single-agent per-round loop with stochastic feedback.
    """
    from .mechanisms import make_learner
    profile = config.profiles()[agent]
    learner = make_learner(MechanismKind.TREE_NSP, profile, config, config.n_agents)
    feedback = config.feedback_for(MechanismKind.TREE_NSP)
    if feedback == 'deterministic':
        feedback = 'bernoulli_aggregate'
    load_rng = make_stream(config.seed, 0, agent, 'bench-load')
    reward_rng = make_stream(config.seed, 0, agent, 'bench-reward')
    lo, hi = config.load_range
    out = {}
    recorded = 0
    for target in sorted(checkpoints):
        spent = 0.0
        start = recorded
        while recorded < target:
            t = recorded + 1
            t0 = time.perf_counter()
            learner.begin_round(t)
            w = learner.get_ud_rec()
            spent += time.perf_counter() - t0
            v = sample_load(lo, hi, load_rng)
            a = min(v * w, 1.0)
            s = sample_reward(profile.payoff, feedback, a, v, reward_rng, config.sigma)
            learner.record(a / v, s.reward, s.sigma)
            recorded += 1
        out[target] = {'latency_s': spent / max(recorded - start, 1),
                       'n_nodes': len(learner.nodes), 'hmax': learner.hmax}
    return out
