"""
    Confidence intervals on the unit demand when payoffs are mu(theta x) with a known link mu.

    theta is estimated by maximum quasi-likelihood: the root of
        sum_s (a_s / sigma_s^2) * (mu(a_s theta) - X_s) = 0,
    clipped below at theta_min. The interval on theta has radius beta / A with
        A^2 = sum_s a_s^2 / sigma_s^2,
        beta = scale * (5 / kappa) * sqrt(log(n pi^2 |D|^2 / (6 delta))),
    and maps to the unit demand through w = mu^{-1}(alpha) / theta.
"""

from dataclasses import dataclass
import math

import numpy as np

from ..mmf import ValidationError
from ..payoffs import get_link


class EstimationError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class GlmInterval:
    theta_hat: float
    theta_lb: float
    theta_ub: float
    ud_lb: float
    ud_ub: float


def kappa_for(link, udmax, theta_max=None, source='range'):
    """ Lower bound on mu' used by the confidence radius.

    'range' takes the infimum over [0, theta_max * udmax], the arguments the estimator can
    actually see; 'unit' takes it over [0, udmax]. A number is used as given.
    """
    link = get_link(link) if isinstance(link, str) else link
    if isinstance(source, (int, float)):
        if source <= 0:
            raise ValidationError('kappa must be positive', field='kappa')
        return float(source)
    if source == 'unit':
        return link.min_slope(0.0, udmax)
    if source == 'range':
        if theta_max is None:
            raise ValidationError("kappa source 'range' needs theta_max", field='theta_max')
        return link.min_slope(0.0, theta_max * udmax)
    raise ValidationError(f'unknown kappa source {source!r}', field='kappa')


def rprime_glm(q):
    return math.floor(5.0 * math.sqrt(q) / 6.0)


def solve_quasi_likelihood(a, x, sigma, link, lo, hi, theta0=None, max_iter=200):
    """ Root of the weighted score on [lo, hi], or the violated endpoint if there is none.

    Safeguarded Newton: a Newton step is taken when it stays inside the current bracket,
    otherwise the bracket is bisected (geometrically, as theta can span decades).
    """
    w = a / sigma ** 2
    wa = w * a
    target = float(w @ x)
    scale = float(np.sum(w))
    if scale <= 0:
        raise EstimationError('no data point with a positive allocation')

    def resid(th):
        return float(w @ link.mu(a * th)) - target

    r_lo = resid(lo)
    if r_lo >= 0:
        return lo
    r_hi = resid(hi)
    if r_hi <= 0:
        return hi
    th = lo + 1.0 if theta0 is None else theta0
    if not lo < th < hi:
        th = math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
    r = resid(th)
    for _ in range(max_iter):
        if r == 0.0:
            return th
        if r < 0:
            lo = th
        else:
            hi = th
        d = float(wa @ link.dmu(a * th))
        nxt = th - r / d if d > 0 else float('nan')
        if not lo < nxt < hi:
            nxt = math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
        if abs(nxt - th) <= 1e-14 * abs(th) or hi - lo <= 1e-15 * hi:
            break
        th = nxt
        r = resid(th)
    r = resid(th)
    if abs(r) > 1e-10 * scale:
        raise NumericalError(f'quasi-likelihood solve stalled with residual {r:.3e}')
    return th


class GlmState:
    """ Per-agent data and constants for the parametric estimator. """

    def __init__(self, link, udmax, alpha, theta_min, theta_max, kappa, n_agents,
                 delta=1e-3, beta_scale=1.0, theta_lb_rule='max'):
        self.link = get_link(link) if isinstance(link, str) else link
        if theta_min <= 0 or theta_max <= theta_min:
            raise ValidationError('need 0 < theta_min < theta_max', field='theta_min')
        if theta_lb_rule not in ('max', 'min'):
            raise ValidationError("theta_lb_rule must be 'max' or 'min'", field='theta_lb_rule')
        self.udmax = udmax
        self.alpha = alpha
        self.theta_min = theta_min
        self.theta_max = theta_max
        self.kappa = kappa
        self.n_agents = n_agents
        self.delta = delta
        self.beta_scale = beta_scale
        self.theta_lb_rule = theta_lb_rule
        self.mu_inv_alpha = self.link.inv(alpha)
        self._a = np.empty(64)
        self._x = np.empty(64)
        self._s = np.empty(64)
        self.size = 0
        self._theta_hat = None
        self._cache = None

    # data ---------------------------------------------------------------------------------

    @property
    def a(self):
        return self._a[:self.size]

    @property
    def x(self):
        return self._x[:self.size]

    @property
    def sigma(self):
        return self._s[:self.size]

    def add(self, normalloc, reward, sigma):
        if not sigma > 0:
            raise ValidationError('parametric learner needs a positive sub-Gaussian constant',
                                  field='sigma')
        if normalloc < 0:
            raise ValidationError('allocation must be non-negative', field='normalloc')
        if self.size == len(self._a):
            for name in ('_a', '_x', '_s'):
                buf = getattr(self, name)
                setattr(self, name, np.concatenate([buf, np.empty_like(buf)]))
        self._a[self.size] = normalloc
        self._x[self.size] = reward
        self._s[self.size] = sigma
        self.size += 1
        self._cache = None


def theta_estimate(state: GlmState) -> float:
    theta = solve_quasi_likelihood(state.a, state.x, state.sigma, state.link,
                                   state.theta_min, state.theta_max, theta0=state._theta_hat)
    state._theta_hat = theta
    return theta


def glm_A(state: GlmState) -> float:
    if state.size == 0:
        return 0.0
    return float(np.sqrt(np.sum(state.a ** 2 / state.sigma ** 2)))


def glm_beta(state: GlmState) -> float:
    arg = state.n_agents * math.pi ** 2 * state.size ** 2 / (6.0 * state.delta)
    return state.beta_scale * (5.0 / state.kappa) * math.sqrt(max(math.log(arg), 0.0))


def interval_from(theta_hat, A, beta, theta_min, mu_inv_alpha, udmax, rule='max'):
    radius = beta / A
    theta_ub = theta_hat + radius
    if rule == 'max':
        theta_lb = max(theta_min, theta_hat - radius)
    else:
        theta_lb = min(theta_min, theta_hat - radius)
    ud_ub = udmax if theta_lb <= 0 else min(max(mu_inv_alpha / theta_lb, 0.0), udmax)
    ud_lb = min(mu_inv_alpha / theta_ub, ud_ub)
    return GlmInterval(theta_hat, theta_lb, theta_ub, ud_lb, ud_ub)


def glm_interval(state: GlmState) -> GlmInterval:
    if state._cache is not None:
        return state._cache
    A = glm_A(state)
    if A == 0.0:
        out = GlmInterval(float('nan'), state.theta_min, float('inf'), 0.0, state.udmax)
    else:
        out = interval_from(theta_estimate(state), A, glm_beta(state), state.theta_min,
                            state.mu_inv_alpha, state.udmax, state.theta_lb_rule)
    state._cache = out
    return out


class GlmLearner(GlmState):
    """ User class for the parametric model; recommendations are the upper confidence bound. """

    def begin_round(self, t):
        pass

    def record(self, normalloc, reward, sigma):
        self.add(normalloc, reward, sigma)

    def get_ud_ub(self):
        return glm_interval(self).ud_ub

    get_ud_rec = get_ud_ub

    def interval(self):
        iv = glm_interval(self)
        return iv.ud_lb, iv.ud_ub

    def snapshot(self):
        iv = glm_interval(self)
        return {'n_data': self.size, 'theta_hat': iv.theta_hat,
                'ud_lb': iv.ud_lb, 'ud_ub': iv.ud_ub}
