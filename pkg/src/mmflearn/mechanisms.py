"""
    Multi-round simulations: the bracketed strategy-proof framework, the per-round framework
    and the entitlement baseline.

    Every agent's load and reward are drawn every round whether or not they are used, so the
    random streams line up across methods and across paired runs.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .learners import (BinarySearchState, GlmLearner, GridState, TreeLearner, grid_point,
                       kappa_for, rprime_det_sp, rprime_glm, rprime_tree)
from .learners.deterministic import rprime_det
from .metrics import loss_components
from .mmf import ValidationError, max_min_fairness
from .payoffs import apply_policy, sample_load, sample_reward, utility_eval
from .rng import make_stream


class MechanismKind(str, Enum):
    ENTITLEMENT = 'entitlement'
    DET_SP_GRID = 'det_sp_grid'
    DET_SP_BS = 'det_sp_bs'
    DET_NSP_BS = 'det_nsp_bs'
    GLM_SP = 'glm_sp'
    GLM_NSP = 'glm_nsp'
    TREE_SP = 'tree_sp'
    TREE_NSP = 'tree_nsp'

    @property
    def framework(self):
        if self is MechanismKind.ENTITLEMENT:
            return 'baseline'
        return 'nsp' if '_nsp' in self.value else 'sp'

    @property
    def learner(self):
        return {'entitlement': None, 'det_sp_grid': 'grid', 'det_sp_bs': 'bs',
                'det_nsp_bs': 'bs'}.get(self.value, self.value.split('_')[0])

    @property
    def deterministic_only(self):
        return self.learner in ('grid', 'bs')


@dataclass
class RoundRecord:
    t: int
    q: int
    phase: str
    loads: np.ndarray
    reported_loads: np.ndarray
    demands: np.ndarray
    allocations: np.ndarray
    rewards: np.ndarray
    sigmas: np.ndarray
    ud_est: np.ndarray
    ud_lb: np.ndarray = None
    ud_ub: np.ndarray = None
    loss: object = None


@dataclass
class SimulationTrace:
    kind: str
    run: int
    config_digest: str
    profiles: list
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    @property
    def round_loss(self):
        return np.array([r.loss.lot for r in self.records])

    @property
    def cum_loss(self):
        return np.cumsum(self.round_loss)

    def utilities(self):
        """ (T, n) realized utilities u_i(a_it / v_it) with true loads. """
        allocs, loads = self.column('allocations'), self.column('loads')
        return np.column_stack([utility_eval(p, allocs[:, i] / loads[:, i])
                                for i, p in enumerate(self.profiles)])


# learner construction -----------------------------------------------------------------------

def make_learner(kind, profile, config, n):
    kind = MechanismKind(kind)
    spec = profile.payoff
    alpha = profile.policy.reported_threshold(spec.alpha)
    udmax = config.udmax
    if kind.learner == 'grid':
        return GridState(udmax, alpha)
    if kind.learner == 'bs':
        return BinarySearchState(udmax, alpha)
    if kind.learner == 'glm':
        if spec.kind not in ('tanh', 'algebraic'):
            raise ValidationError(f'parametric learner needs a known link; payoff {spec.kind!r} '
                                  'has none', field='payoff')
        kappa = kappa_for(spec.kind, udmax, config.theta_max, config.kappa)
        return GlmLearner(spec.kind, udmax, alpha, config.theta_min, config.theta_max, kappa, n,
                          delta=config.delta, beta_scale=config.beta_scale_glm,
                          theta_lb_rule=config.theta_lb_rule)
    if kind.learner == 'tree':
        L = config.L if config.L is not None else spec.lipschitz_L
        return TreeLearner(L, udmax, alpha, n, delta=config.delta,
                           beta_scale=config.beta_scale_tree, debug=config.tree_debug)
    raise ValidationError(f'no learner for {kind.value}', field='method')


def check_compatible(kind, feedback):
    kind = MechanismKind(kind)
    if kind.deterministic_only and feedback != 'deterministic':
        raise ValidationError(f'{kind.value} needs deterministic feedback, got {feedback}',
                              field='feedback')


# environment --------------------------------------------------------------------------------

class _Env:
    """ Per-run random streams, true demands and reward sampling. """

    def __init__(self, config, profiles, run, feedback):
        self.config = config
        self.profiles = profiles
        self.run = run
        self.feedback = feedback
        self.n = len(profiles)
        self.seed = config.seed
        self.ents = np.array([p.entitlement for p in profiles])
        self.w_star = np.array([p.unit_demand for p in profiles])
        self.load_rngs = [make_stream(self.seed, run, i, 'load') for i in range(self.n)]
        self.lo, self.hi = config.load_range

    def draw_loads(self, t):
        v = np.array([sample_load(self.lo, self.hi, rng) for rng in self.load_rngs])
        v_rep = v.copy()
        for i, p in enumerate(self.profiles):
            if p.policy.kind != 'truthful':
                v_rep[i] = apply_policy(p.policy, v[i], 0.0, self._policy_rng(i, t))[0]
        return v, v_rep

    def _policy_rng(self, i, t):
        if self.profiles[i].policy.kind != 'random_misreport':
            return None
        return make_stream(self.seed, self.run, i, 'policy', t)

    def feedback_for(self, t, allocs, v):
        """ True rewards, reported rewards and the SGCs handed to learners. """
        X = np.empty(self.n)
        X_rep = np.empty(self.n)
        sig = np.empty(self.n)
        for i, p in enumerate(self.profiles):
            rng = None if self.feedback == 'deterministic' else \
                make_stream(self.seed, self.run, i, 'reward', t)
            s = sample_reward(p.payoff, self.feedback, allocs[i], v[i], rng, self.config.sigma)
            X[i] = s.reward
            # deterministic rewards are sigma-sub-Gaussian for any sigma
            sig[i] = s.sigma if s.sigma > 0 else self.config.sigma
            X_rep[i] = X[i] if p.policy.kind == 'truthful' else \
                apply_policy(p.policy, v[i], X[i], self._policy_rng(i, t))[1]
        return X, X_rep, sig


def _normalloc(learner, a, v_rep):
    x = a / v_rep
    if isinstance(learner, GlmLearner):
        return x
    return min(max(x, 0.0), learner.udmax)


def _intervals(learners, n):
    lb = np.full(n, np.nan)
    ub = np.full(n, np.nan)
    for i, lr in enumerate(learners):
        iv = lr.interval()
        if iv is not None:
            lb[i], ub[i] = iv
    return lb, ub


# frameworks ---------------------------------------------------------------------------------

def _sp_schedule(kind, n, horizon):
    """ Yields (q, phase, agent, step) until the horizon; agent is None for all-agent rounds. """
    learner = MechanismKind(kind).learner
    t = 0
    q = 0
    while True:
        q += 1
        if learner == 'grid':
            explore = [(i, 0) for i in range(n)]
            rp = rprime_det_sp(q, n)
        elif learner == 'bs':
            explore = [(j % n, j // n) for j in range(2 * n)]
            rp = rprime_det(q)
        elif learner == 'glm':
            explore = [(None, 0)]
            rp = rprime_glm(q)
        else:
            explore = [(i, 0) for i in range(n)]
            rp = rprime_tree(q, n)
        for agent, step in explore:
            t += 1
            yield q, 'explore', agent, step
            if t >= horizon:
                return
        yield q, 'snapshot', None, 0
        for _ in range(rp):
            t += 1
            yield q, 'exploit', None, 0
            if t >= horizon:
                return


def simulate(config, kind, run=0, profiles=None, observer=None, track_intervals=False,
             digest=''):
    """ Run one method for config.horizon rounds. ``observer(t, learners, record)`` is called
    after every round. """
    kind = MechanismKind(kind)
    profiles = list(config.profiles() if profiles is None else profiles)
    n = len(profiles)
    feedback = config.feedback_for(kind)
    check_compatible(kind, feedback)
    env = _Env(config, profiles, run, feedback)
    learners = [make_learner(kind, p, config, n) for p in profiles] \
        if kind.framework != 'baseline' else []
    trace = SimulationTrace(kind.value, run, digest, profiles)
    horizon = config.horizon

    if kind.framework == 'baseline':
        steps = ((0, 'baseline', None, 0) for _ in range(horizon))
    elif kind.framework == 'nsp':
        steps = ((0, 'first' if t == 0 else 'rec', None, 0) for t in range(horizon))
    else:
        steps = _sp_schedule(kind, n, horizon)

    ub_snap = np.zeros(n)
    t = 0
    for q, phase, agent, step in steps:
        if phase == 'snapshot':
            ub_snap = np.array([lr.get_ud_ub() for lr in learners])
            continue
        t += 1
        for lr in learners:
            lr.begin_round(t)
        v, v_rep = env.draw_loads(t)
        est = np.full(n, np.nan)
        demands = np.full(n, np.nan)
        record_mask = np.zeros(n, dtype=bool)
        if phase in ('baseline', 'first') or (phase == 'explore' and agent is None):
            allocs = env.ents.copy()
            record_mask[:] = phase != 'baseline'
        elif phase == 'explore':
            lr = learners[agent]
            if kind.learner == 'grid':
                probe = grid_point(q, config.udmax)
            else:
                probe = lr.get_ud_rec_for_ub()
            est[agent] = probe
            allocs = np.zeros(n)
            allocs[agent] = min(v_rep[agent] * probe, 1.0)
            demands[agent] = v_rep[agent] * probe
            record_mask[agent] = v_rep[agent] > 0
        else:
            if phase == 'rec':
                est = np.array([lr.get_ud_rec() for lr in learners])
                record_mask[:] = True
            else:
                est = ub_snap.copy()
            demands = v_rep * est
            allocs = max_min_fairness(env.ents, demands)
        X, X_rep, sig = env.feedback_for(t, allocs, v)
        for i in np.flatnonzero(record_mask):
            learners[i].record(_normalloc(learners[i], allocs[i], v_rep[i]), X_rep[i], sig[i])
        rec = RoundRecord(t, q, phase, v, v_rep, demands, allocs, X, sig, est,
                          loss=loss_components(v * env.w_star, allocs))
        if track_intervals and learners:
            rec.ud_lb, rec.ud_ub = _intervals(learners, n)
        trace.records.append(rec)
        if observer is not None:
            observer(t, learners, rec)
    trace.snapshots = [lr.snapshot() for lr in learners]
    return trace


def run_sp(config, kind, **kwargs):
    if MechanismKind(kind).framework != 'sp':
        raise ValidationError(f'{kind} is not a bracketed method', field='method')
    return simulate(config, kind, **kwargs)


def run_nsp(config, kind, **kwargs):
    if MechanismKind(kind).framework != 'nsp':
        raise ValidationError(f'{kind} is not a per-round method', field='method')
    return simulate(config, kind, **kwargs)


def run_baseline(config, **kwargs):
    return simulate(config, MechanismKind.ENTITLEMENT, **kwargs)
