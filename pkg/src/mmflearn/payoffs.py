"""
    Ground-truth environment: payoff functions, utilities, loads, rewards and report policies.

    Every quantity is expressed per unit load, i.e. x = allocation / load.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from .mmf import ValidationError

PAYOFF_KINDS = ('tanh', 'algebraic', 'logistic')
FEEDBACK_MODES = ('deterministic', 'bernoulli_aggregate', 'gaussian')
POLICY_KINDS = ('truthful', 'load_scale', 'reward_shift', 'threshold_shift', 'random_misreport')


class DomainError(ValueError):
    pass


# Links for the parametric family mu(theta * x) -----------------------------------------------

class Link:
    """ A known increasing function mu with derivative and inverse. """
    name = None

    def mu(self, z):
        raise NotImplementedError

    def dmu(self, z):
        raise NotImplementedError

    def inv(self, y):
        raise NotImplementedError

    def min_slope(self, lo, hi):
        """ Infimum of the derivative over [lo, hi]; both links are concave on z >= 0. """
        return float(self.dmu(hi))


class TanhLink(Link):
    name = 'tanh'

    def mu(self, z):
        return np.tanh(z)

    def dmu(self, z):
        return 1.0 - np.tanh(z) ** 2

    def inv(self, y):
        return math.atanh(y)


class AlgebraicLink(Link):
    name = 'algebraic'

    def mu(self, z):
        return z / (1.0 + z)

    def dmu(self, z):
        return 1.0 / (1.0 + z) ** 2

    def inv(self, y):
        return y / (1.0 - y)


LINKS = {'tanh': TanhLink(), 'algebraic': AlgebraicLink()}


def get_link(name):
    try:
        return LINKS[name]
    except KeyError:
        raise ValidationError(f'unknown link {name!r}; expected one of {sorted(LINKS)}',
                              field='link') from None


# Payoffs ------------------------------------------------------------------------------------

@dataclass(frozen=True)
class PayoffSpec:
    """ f(x) = mu(theta x) for tanh/algebraic, 1/(1+exp(-theta (x-b))) for logistic.

    ``lipschitz_L`` is the scale L for which f is (L/udmax)-Lipschitz on [0, udmax]; it is
    computed from the parameters when left as None.
    """
    kind: str
    alpha: float
    udmax: float
    theta: float = 1.0
    b: float = 0.0
    lipschitz_L: float = None

    def __post_init__(self):
        if self.kind not in PAYOFF_KINDS:
            raise ValidationError(f'unknown payoff kind {self.kind!r}', field='payoff')
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f'threshold must lie in (0, 1), got {self.alpha}',
                                  field='thresholds')
        if self.udmax <= 0:
            raise ValidationError('udmax must be positive', field='udmax')
        if self.theta <= 0:
            raise ValidationError('theta must be positive', field='theta')
        if self.lipschitz_L is None:
            object.__setattr__(self, 'lipschitz_L', _max_slope(self) * self.udmax)
        elif self.lipschitz_L <= 0:
            raise ValidationError('lipschitz_L must be positive', field='L')


def _max_slope(spec):
    if spec.kind in ('tanh', 'algebraic'):
        return spec.theta  # both have slope theta at 0 and are concave
    # logistic slope peaks at x = b
    x = min(max(spec.b, 0.0), spec.udmax)
    s = 1.0 / (1.0 + math.exp(-spec.theta * (x - spec.b)))
    return spec.theta * s * (1.0 - s)


def payoff_eval(spec: PayoffSpec, x):
    if spec.kind == 'tanh':
        return np.tanh(spec.theta * x)
    if spec.kind == 'algebraic':
        return 1.0 - 1.0 / (1.0 + spec.theta * x)
    z = -spec.theta * (np.asarray(x, dtype=float) - spec.b)
    out = 1.0 / (1.0 + np.exp(np.minimum(z, 700.0)))
    return float(out) if np.ndim(out) == 0 else out


def unit_demand(spec: PayoffSpec) -> float:
    """ Closed-form f^{-1}(alpha). Raises DomainError if it falls outside (0, udmax]. """
    a = spec.alpha
    if spec.kind == 'tanh':
        w = math.atanh(a) / spec.theta
    elif spec.kind == 'algebraic':
        w = (a / (1.0 - a)) / spec.theta
    else:
        w = spec.b + math.log(a / (1.0 - a)) / spec.theta
    if not 0.0 < w <= spec.udmax * (1 + 1e-12):
        raise DomainError(f'threshold {a} is not reached on (0, {spec.udmax}] '
                          f'(unit demand would be {w})')
    return w


def payoff_for_unit_demand(kind, w_star, alpha, udmax, logistic_offset=0.6):
    """ Back-solve the parameters so that f(w_star) = alpha. Logistic puts b at 0.6 w_star. """
    if kind == 'tanh':
        return PayoffSpec('tanh', alpha, udmax, theta=math.atanh(alpha) / w_star)
    if kind == 'algebraic':
        return PayoffSpec('algebraic', alpha, udmax, theta=(alpha / (1 - alpha)) / w_star)
    if kind == 'logistic':
        b = logistic_offset * w_star
        theta = math.log(alpha / (1 - alpha)) / (w_star - b)
        if theta <= 0:
            raise DomainError(f'logistic payoff with offset {logistic_offset} cannot reach '
                              f'{alpha} at {w_star}')
        return PayoffSpec('logistic', alpha, udmax, theta=theta, b=b)
    raise ValidationError(f'unknown payoff kind {kind!r}', field='payoff')


# Report policies ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ReportPolicy:
    kind: str = 'truthful'
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValidationError(f'unknown policy {self.kind!r}', field='policy')
        if self.kind == 'load_scale' and self.param <= 0:
            raise ValidationError('load_scale factor must be positive', field='policy')
        if self.kind == 'random_misreport' and not 0 <= self.param <= 1:
            raise ValidationError('random_misreport probability must be in [0, 1]',
                                  field='policy')

    @classmethod
    def parse(cls, text):
        """ 'truthful', 'load_scale(2)', 'reward_shift(-0.1)', ... """
        text = text.strip()
        if '(' not in text:
            return cls(text)
        kind, arg = text.split('(', 1)
        return cls(kind.strip(), float(arg.rstrip(')')))

    def __str__(self):
        return self.kind if self.kind == 'truthful' else f'{self.kind}({self.param:g})'

    def reported_threshold(self, alpha):
        if self.kind != 'threshold_shift':
            return alpha
        return min(max(alpha + self.param, 1e-6), 1 - 1e-6)


TRUTHFUL = ReportPolicy()


def apply_policy(policy: ReportPolicy, true_load, true_reward, rng=None):
    """ Map the agent's true (load, reward) to what it reports this round. """
    kind = policy.kind
    if kind == 'load_scale':
        return true_load * policy.param, true_reward
    if kind == 'reward_shift':
        return true_load, min(max(true_reward - policy.param, 0.0), 1.0)
    if kind == 'random_misreport':
        if rng is None:
            raise ValueError('random_misreport needs a random stream')
        # fixed draw count per round keeps the policy stream aligned across rounds
        u, scale, fake = rng.random(3)
        if u < policy.param:
            return true_load * 2.0 ** (2.0 * scale - 1.0), float(fake)
        return true_load, true_reward
    # truthful, and threshold_shift which only acts once at setup
    return true_load, true_reward


# Agents -------------------------------------------------------------------------------------

@dataclass(frozen=True)
class AgentProfile:
    entitlement: float
    payoff: PayoffSpec
    utility_lipschitz: float = None
    policy: ReportPolicy = field(default_factory=ReportPolicy)

    def __post_init__(self):
        if self.entitlement <= 0:
            raise ValidationError('entitlement must be positive', field='entitlements')
        if self.utility_lipschitz is None:
            object.__setattr__(self, 'utility_lipschitz',
                               self.payoff.lipschitz_L / self.payoff.udmax)

    @property
    def alpha(self):
        return self.payoff.alpha

    @property
    def unit_demand(self):
        return unit_demand(self.payoff)

    def with_policy(self, policy):
        if isinstance(policy, str):
            policy = ReportPolicy.parse(policy)
        return replace(self, policy=policy)


def utility_eval(profile: AgentProfile, x):
    """ min(f(x), alpha): grows with the payoff, flat once the threshold is met. """
    return np.minimum(payoff_eval(profile.payoff, x), profile.payoff.alpha)


# Loads and rewards --------------------------------------------------------------------------

@dataclass(frozen=True)
class FeedbackSample:
    reward: float
    sigma: float


def sample_load(lo, hi, rng):
    if not 0 < lo <= hi:
        raise ValidationError(f'invalid load range [{lo}, {hi}]', field='load_range')
    if lo == hi:
        return float(lo)
    return float(rng.uniform(lo, hi))


def sample_reward(spec, mode, a, v, rng=None, sigma_cfg=0.1):
    mean = float(payoff_eval(spec, a / v))
    if mode == 'deterministic':
        return FeedbackSample(mean, 0.0)
    if mode == 'bernoulli_aggregate':
        m = max(int(math.floor(v)), 1)
        p = min(max(mean, 0.0), 1.0)
        return FeedbackSample(rng.binomial(m, p) / m, 1.0 / (2.0 * math.sqrt(v)))
    if mode == 'gaussian':
        x = mean + sigma_cfg * rng.standard_normal()
        return FeedbackSample(min(max(x, 0.0), 1.0), sigma_cfg)
    raise ValidationError(f'unknown feedback mode {mode!r}', field='feedback')
