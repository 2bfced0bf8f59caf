"""
    Loss, fairness, strategy and coverage metrics over simulation traces.
"""

from dataclasses import dataclass

import numpy as np

from .payoffs import utility_eval


@dataclass(frozen=True)
class LossComponents:
    lambda_ur: float
    lambda_or: float
    lambda_ud: float
    lot: float


def loss_components(true_demands, allocations) -> LossComponents:
    """ Unallocated, over-allocated and unmet amounts; the round loss is
    min(unallocated + over-allocated, unmet). """
    d = np.asarray(true_demands, dtype=float)
    a = np.asarray(allocations, dtype=float)
    if d.shape != a.shape:
        raise ValueError('demands and allocations differ in length')
    ur = max(1.0 - float(a.sum()), 0.0)
    over = float(np.maximum(a - d, 0.0).sum())
    under = float(np.maximum(d - a, 0.0).sum())
    return LossComponents(ur, over, under, min(ur + over, under))


@dataclass
class MetricSeries:
    round_loss: np.ndarray
    cum_loss: np.ndarray
    fairness_gap: np.ndarray  # (T, n) cumulative
    coverage_hits: int = 0
    coverage_total: int = 0

    @property
    def coverage(self):
        return self.coverage_hits / self.coverage_total if self.coverage_total else None


def fairness_gap_series(trace, profiles=None):
    """ Cumulative per-agent sums of u(e/v) - u(a/v), shape (T, n). """
    profiles = trace.profiles if profiles is None else profiles
    loads = trace.column('loads')
    allocs = trace.column('allocations')
    cols = []
    for i, p in enumerate(profiles):
        v = loads[:, i]
        cols.append(utility_eval(p, p.entitlement / v) - utility_eval(p, allocs[:, i] / v))
    return np.cumsum(np.column_stack(cols), axis=0)


def fairness_gap(trace, profiles=None):
    """ Final per-agent gap; <= 0 means the agent did no worse than its entitlement. """
    return fairness_gap_series(trace, profiles)[-1]


def utility_sum(trace, agent):
    return float(trace.utilities()[:, agent].sum())


def strategy_gaps(config, kind, policies, agent=0, run=0):
    """ {policy: U^pi - U} for one agent; the truthful run is shared across policies and every
    pair of runs shares all random streams. """
    from .mechanisms import simulate
    truthful = config.profiles()
    u_true = utility_sum(simulate(config, kind, run=run, profiles=truthful), agent)
    out = {}
    for policy in policies:
        deviating = list(truthful)
        deviating[agent] = truthful[agent].with_policy(policy)
        # utilities are always measured against the true payoff and loads
        u_dev = utility_sum(simulate(config, kind, run=run, profiles=deviating), agent)
        out[policy] = u_dev - u_true
    return out


def strategy_gap(config, kind, policy, agent=0, run=0):
    return strategy_gaps(config, kind, [policy], agent, run)[policy]


NOT_APPLICABLE = None


def coverage_counts(trace, profiles=None):
    """ (hits, total) over (round, agent) pairs with an interval. """
    profiles = trace.profiles if profiles is None else profiles
    if not trace.records or trace.records[0].ud_lb is None:
        return 0, 0
    w = np.array([p.unit_demand for p in profiles])
    lb = trace.column('ud_lb')
    ub = trace.column('ud_ub')
    ok = ~np.isnan(lb)
    hits = ok & (lb <= w) & (w <= ub)
    return int(hits.sum()), int(ok.sum())


def coverage_rate(trace, profiles=None):
    hits, total = coverage_counts(trace, profiles)
    return hits / total if total else NOT_APPLICABLE


def metric_series(trace):
    hits, total = coverage_counts(trace)
    return MetricSeries(trace.round_loss, trace.cum_loss, fairness_gap_series(trace),
                        hits, total)
