"""
    Experiment configuration: a flat ``key = value`` file, ``#`` comments, comma-separated lists.

    Example::

        name = tanh5
        n_agents = 5
        methods = entitlement, glm_nsp, tree_nsp
        payoff = tanh
        unit_demands = logspace(1e-6, 1e-4)
        thresholds = 0.9
"""

from dataclasses import asdict, dataclass, field, fields
import hashlib
import json
import math

import numpy as np

from .mechanisms import MechanismKind, check_compatible
from .mmf import ENTITLEMENT_TOL, ValidationError
from .payoffs import (FEEDBACK_MODES, PAYOFF_KINDS, AgentProfile, DomainError, PayoffSpec,
                      ReportPolicy, payoff_for_unit_demand)


class ConfigError(ValidationError):
    """ Carries every field-level problem found in one parse. """

    def __init__(self, errors):
        super().__init__('; '.join(f'{k}: {m}' for k, m in errors),
                         field=errors[0][0] if errors else None)
        self.errors = errors


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = 'experiment'
    n_agents: int = 5
    entitlements: tuple = None  # None means equal
    horizon: int = 2000
    methods: tuple = ('entitlement',)
    feedback: str = 'auto'
    payoff: str = 'tanh'
    unit_demands: tuple = None  # None means log-spaced over [1e-6, 1e-4]
    thresholds: tuple = (0.9,)
    load_range: tuple = (5000.0, 15000.0)
    udmax: float = None
    L: float = None
    theta_min: float = None
    theta_max: float = None
    kappa: object = 'unit'
    delta: float = 1e-3
    beta_scale_glm: float = 0.2
    beta_scale_tree: float = 1.0
    theta_lb_rule: str = 'max'
    sigma: float = 0.1
    logistic_offset: float = 0.6
    policies: tuple = ()
    runs: int = 5
    seed: int = 0
    workers: int = 1
    tree_debug: bool = False
    _profiles: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.entitlements is None:
            object.__setattr__(self, 'entitlements', (1.0 / self.n_agents,) * self.n_agents)
        if self.unit_demands is None:
            object.__setattr__(self, 'unit_demands',
                               tuple(np.logspace(-6, -4, self.n_agents).tolist()))
        if len(self.thresholds) == 1:
            object.__setattr__(self, 'thresholds', tuple(self.thresholds) * self.n_agents)
        errors = self._check()
        if errors:
            raise ConfigError(errors)
        self._fill_defaults()

    # validation ---------------------------------------------------------------------------

    def _check(self):
        errs = []
        n = self.n_agents
        if n < 1:
            errs.append(('n_agents', 'must be at least 1'))
            return errs
        for key in ('entitlements', 'unit_demands', 'thresholds'):
            if len(getattr(self, key)) != n:
                errs.append((key, f'expected {n} values, got {len(getattr(self, key))}'))
        if any(e <= 0 for e in self.entitlements):
            errs.append(('entitlements', 'every entitlement must be positive'))
        elif abs(sum(self.entitlements) - 1.0) > ENTITLEMENT_TOL:
            errs.append(('entitlements', f'must sum to 1, got {sum(self.entitlements)!r}'))
        if self.horizon < 1:
            errs.append(('horizon', 'must be at least 1'))
        if self.payoff not in PAYOFF_KINDS:
            errs.append(('payoff', f'unknown payoff {self.payoff!r}'))
        if self.feedback != 'auto' and self.feedback not in FEEDBACK_MODES:
            errs.append(('feedback', f'unknown feedback mode {self.feedback!r}'))
        if any(w <= 0 for w in self.unit_demands):
            errs.append(('unit_demands', 'must be positive'))
        if any(not 0 < a < 1 for a in self.thresholds):
            errs.append(('thresholds', 'must lie in (0, 1)'))
        lo, hi = self.load_range
        if not 0 < lo <= hi:
            errs.append(('load_range', f'need 0 < lo <= hi, got {lo}, {hi}'))
        for key in ('udmax', 'L', 'theta_min', 'theta_max'):
            val = getattr(self, key)
            if val is not None and not val > 0:
                errs.append((key, 'must be positive'))
        if self.udmax is not None and any(w > self.udmax for w in self.unit_demands):
            errs.append(('udmax', 'must be at least every unit demand'))
        if not 0 < self.delta < 1:
            errs.append(('delta', 'must lie in (0, 1)'))
        for key in ('beta_scale_glm', 'beta_scale_tree', 'sigma'):
            if not getattr(self, key) > 0:
                errs.append((key, 'must be positive'))
        if self.theta_lb_rule not in ('max', 'min'):
            errs.append(('theta_lb_rule', "must be 'max' or 'min'"))
        if not (self.kappa in ('unit', 'range') or
                isinstance(self.kappa, (int, float)) and self.kappa > 0):
            errs.append(('kappa', "must be 'unit', 'range' or a positive number"))
        if self.policies and len(self.policies) != n:
            errs.append(('policies', f'expected {n} values'))
        if self.runs < 1:
            errs.append(('runs', 'must be at least 1'))
        if self.workers < 1:
            errs.append(('workers', 'must be at least 1'))
        for m in self.methods:
            try:
                kind = MechanismKind(m)
            except ValueError:
                errs.append(('methods', f'unknown method {m!r}'))
                continue
            if self.feedback != 'auto':
                try:
                    check_compatible(kind, self.feedback)
                except ValidationError as exc:
                    errs.append(('feedback', str(exc)))
            if kind.learner == 'glm' and self.payoff == 'logistic':
                errs.append(('methods', 'parametric methods need a tanh or algebraic payoff'))
        return errs

    def _fill_defaults(self):
        w = np.array(self.unit_demands)
        if self.udmax is None:
            object.__setattr__(self, 'udmax', float(1.5 * w.max()))
        profiles = self._build_profiles()
        thetas = [p.payoff.theta for p in profiles]
        if self.theta_min is None:
            object.__setattr__(self, 'theta_min', 0.5 * min(thetas))
        if self.theta_max is None:
            object.__setattr__(self, 'theta_max', 10.0 * max(thetas))
        if self.theta_max <= self.theta_min:
            raise ConfigError([('theta_max', 'must exceed theta_min')])
        object.__setattr__(self, '_profiles', profiles)

    def _build_profiles(self):
        out = []
        for i in range(self.n_agents):
            try:
                spec = payoff_for_unit_demand(self.payoff, self.unit_demands[i],
                                              self.thresholds[i], self.udmax,
                                              self.logistic_offset)
            except (DomainError, ValueError) as exc:
                raise ConfigError([('unit_demands', f'agent {i}: {exc}')]) from None
            policy = ReportPolicy.parse(self.policies[i]) if self.policies else ReportPolicy()
            out.append(AgentProfile(self.entitlements[i], spec, policy=policy))
        return tuple(out)

    # accessors ----------------------------------------------------------------------------

    def profiles(self):
        return list(self._profiles)

    def feedback_for(self, kind):
        if self.feedback != 'auto':
            return self.feedback
        return 'deterministic' if MechanismKind(kind).deterministic_only \
            else 'bernoulli_aggregate'

    def replace(self, **changes):
        data = {f.name: getattr(self, f.name) for f in fields(self) if f.name != '_profiles'}
        # derived values carry over; pass None to recompute them
        data.update(changes)
        return ExperimentConfig(**data)

    def as_dict(self):
        d = asdict(self)
        d.pop('_profiles')
        return d

    def digest(self):
        d = self.as_dict()
        for key in ('runs', 'workers', 'methods'):
            d.pop(key)
        blob = json.dumps(d, sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# parsing ------------------------------------------------------------------------------------

_ALIASES = {'T': 'horizon', 'method': 'methods', 'n': 'n_agents', 'beta_scale': None}
_INT = {'n_agents', 'horizon', 'runs', 'seed', 'workers'}
_FLOAT = {'udmax', 'L', 'theta_min', 'theta_max', 'delta', 'beta_scale_glm', 'beta_scale_tree',
          'sigma', 'logistic_offset'}
_FLOAT_LIST = {'unit_demands', 'thresholds', 'load_range'}
_STR_LIST = {'methods', 'policies'}
_STR = {'name', 'feedback', 'payoff', 'theta_lb_rule'}
_BOOL = {'tree_debug'}


def _split(value):
    # list separators are commas outside parentheses
    parts, depth, cur = [], 0, ''
    for ch in value:
        if ch == '(':
            depth += 1
        elif ch == ')':
            depth -= 1
        if ch == ',' and depth == 0:
            parts.append(cur.strip())
            cur = ''
        else:
            cur += ch
    if cur.strip():
        parts.append(cur.strip())
    return parts


def _parse_floats(value):
    value = value.strip()
    if value.startswith('logspace(') and value.endswith(')'):
        lo, hi = (float(x) for x in value[9:-1].split(','))
        return ('logspace', lo, hi)
    return tuple(float(x) for x in _split(value))


def parse_config_text(text, **overrides):
    raw = {}
    errors = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            errors.append((f'line {lineno}', f'expected key = value, got {line!r}'))
            continue
        key, value = (s.strip() for s in line.split('=', 1))
        raw[key] = value
    raw.update({k: str(v) for k, v in overrides.items() if v is not None})

    kwargs = {}
    logspace = None
    for key, value in raw.items():
        name = _ALIASES.get(key, key)
        try:
            if key == 'beta_scale':
                kwargs['beta_scale_glm'] = kwargs['beta_scale_tree'] = float(value)
            elif name in _INT:
                kwargs[name] = int(value)
            elif name in _FLOAT:
                kwargs[name] = float(value)
            elif name in _FLOAT_LIST:
                parsed = _parse_floats(value)
                if parsed and parsed[0] == 'logspace':
                    if name != 'unit_demands':
                        raise ValueError('logspace(...) is only allowed for unit_demands')
                    logspace = parsed[1:]
                else:
                    kwargs[name] = parsed
            elif name in _STR_LIST:
                kwargs[name] = tuple(_split(value))
            elif name in _STR:
                kwargs[name] = value
            elif name in _BOOL:
                if value.lower() not in ('true', 'false', '1', '0', 'yes', 'no'):
                    raise ValueError(f'expected a boolean, got {value!r}')
                kwargs[name] = value.lower() in ('true', '1', 'yes')
            elif name == 'entitlements':
                if value != 'equal':
                    kwargs[name] = tuple(float(x) for x in _split(value))
            elif name == 'kappa':
                kwargs[name] = value if value in ('unit', 'range') else float(value)
            else:
                errors.append((key, 'unknown key'))
        except ValueError as exc:
            errors.append((key, str(exc)))
    if 'load_range' in kwargs and len(kwargs['load_range']) != 2:
        errors.append(('load_range', 'expected two values'))
        kwargs.pop('load_range')
    if errors:
        raise ConfigError(errors)
    if logspace is not None:
        n = kwargs.get('n_agents', ExperimentConfig.n_agents)
        lo, hi = logspace
        if not 0 < lo <= hi:
            raise ConfigError([('unit_demands', 'logspace bounds must be positive')])
        kwargs['unit_demands'] = tuple(np.logspace(math.log10(lo), math.log10(hi), n).tolist())
    try:
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except (ValidationError, ValueError, TypeError) as exc:
        raise ConfigError([(getattr(exc, 'field', None) or 'config', str(exc))]) from None


def parse_config(path, **overrides):
    with open(path, encoding='utf-8') as fh:
        return parse_config_text(fh.read(), **overrides)
