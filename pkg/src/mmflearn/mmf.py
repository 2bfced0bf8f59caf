"""
    Single-round max-min fair allocation of a unit resource.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

ENTITLEMENT_TOL = 1e-9


class ValidationError(ValueError):
    """ Raised for malformed inputs. ``index`` names the offending agent when known. """

    def __init__(self, message, index=None, field=None):
        super().__init__(message)
        self.index = index
        self.field = field


@dataclass(frozen=True)
class AllocationProblem:
    entitlements: tuple
    demands: tuple

    def __init__(self, entitlements: Sequence[float], demands: Sequence[float]):
        object.__setattr__(self, 'entitlements', tuple(float(e) for e in entitlements))
        object.__setattr__(self, 'demands', tuple(float(d) for d in demands))
        self.validate()

    @property
    def n(self):
        return len(self.entitlements)

    def validate(self):
        ents, dems = self.entitlements, self.demands
        if len(ents) != len(dems):
            raise ValidationError(
                f'{len(ents)} entitlements but {len(dems)} demands', field='demands')
        if not ents:
            raise ValidationError('at least one agent is required', field='entitlements')
        for i, e in enumerate(ents):
            if not np.isfinite(e) or e <= 0:
                raise ValidationError(f'entitlement {i} must be positive, got {e}',
                                      index=i, field='entitlements')
        total = sum(ents)
        if abs(total - 1.0) > ENTITLEMENT_TOL:
            raise ValidationError(f'entitlements sum to {total!r}, expected 1',
                                  field='entitlements')
        for i, d in enumerate(dems):
            if not np.isfinite(d) or d < 0:
                raise ValidationError(f'demand {i} must be non-negative, got {d}',
                                      index=i, field='demands')


@dataclass(frozen=True)
class AllocationVector:
    allocations: tuple

    def __len__(self):
        return len(self.allocations)

    def __getitem__(self, i):
        return self.allocations[i]

    def __iter__(self):
        return iter(self.allocations)

    def as_array(self):
        return np.array(self.allocations, dtype=float)


def _mmf(entitlements, demands):
    """ Water-filling core on plain sequences; inputs assumed valid. """
    n = len(entitlements)
    ratios = [demands[j] / entitlements[j] for j in range(n)]
    # stable sort: equal ratios keep agent-index order
    order = sorted(range(n), key=ratios.__getitem__)
    allocs = [0.0] * n
    resource_left = 1.0
    entitlement_left = 1.0
    for pos, j in enumerate(order):
        if demands[j] < resource_left * entitlements[j] / entitlement_left:
            allocs[j] = demands[j]
            resource_left -= demands[j]
            entitlement_left -= entitlements[j]
        else:
            for k in order[pos:]:
                allocs[k] = resource_left * entitlements[k] / entitlement_left
            break
    return allocs


def mmf_allocate(problem: AllocationProblem) -> AllocationVector:
    """ Grant small relative demands in full, split the rest in proportion to entitlements.

    Agents are visited in ascending order of demand/entitlement. The first agent whose demand
    is not below its proportional share of what is left triggers a proportional split among
    every agent not yet served.
    """
    return AllocationVector(tuple(_mmf(problem.entitlements, problem.demands)))


def max_min_fairness(entitlements, demands):
    """ Array-in, array-out convenience wrapper with validation. """
    problem = AllocationProblem(entitlements, demands)
    return np.array(_mmf(problem.entitlements, problem.demands))
