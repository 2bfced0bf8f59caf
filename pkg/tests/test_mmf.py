import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmflearn.metrics import loss_components
from mmflearn.mmf import AllocationProblem, ValidationError, max_min_fairness, mmf_allocate
from oracles import water_fill


def test_four_agent_example():
    out = mmf_allocate(AllocationProblem([0.25] * 4, [0.1, 0.28, 0.4, 0.5]))
    np.testing.assert_allclose(out.as_array(), [0.1, 0.28, 0.31, 0.31], atol=1e-12)


def test_zero_demands_give_zero():
    assert list(max_min_fairness([0.2, 0.3, 0.5], [0, 0, 0])) == [0, 0, 0]


def test_two_agent_example_matches_water_filling():
    # frozen from the water-filling oracle
    expected = water_fill([0.5, 0.5], [0.2, 0.9])
    np.testing.assert_allclose(expected, [0.2, 0.8], atol=1e-9)
    np.testing.assert_allclose(max_min_fairness([0.5, 0.5], [0.2, 0.9]), [0.2, 0.8], atol=1e-12)


@pytest.mark.parametrize('ents, dems, field, index', [
    ([0.5, 0.6], [0.1, 0.1], 'entitlements', None),
    ([0.5, 0.5], [0.1, -0.1], 'demands', 1),
    ([0.0, 1.0], [0.1, 0.1], 'entitlements', 0),
    ([0.5, 0.5], [0.1], 'demands', None),
])
def test_validation_errors(ents, dems, field, index):
    with pytest.raises(ValidationError) as err:
        AllocationProblem(ents, dems)
    assert err.value.field == field
    assert err.value.index == index


def test_equal_ratios_keep_index_order():
    # both agents hit the proportional branch together; result is symmetric
    out = max_min_fairness([0.5, 0.5], [0.7, 0.7])
    np.testing.assert_allclose(out, [0.5, 0.5])


@st.composite
def instances(draw, n_max=12):
    n = draw(st.integers(1, n_max))
    raw = draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n))
    ents = np.array(raw) / sum(raw)
    ents[-1] = 1.0 - ents[:-1].sum()
    if ents[-1] <= 0:
        ents = np.full(n, 1.0 / n)
    dems = np.array(draw(st.lists(st.floats(0.0, 2.0), min_size=n, max_size=n)))
    return ents, dems


@settings(max_examples=300, deadline=None)
@given(instances())
def test_allocation_bounded_by_demand_and_entitlement(inst):
    e, d = inst
    a = max_min_fairness(e, d)
    assert a.sum() <= 1 + 1e-9
    assert np.all(a <= d + 1e-12)
    below = d < e
    np.testing.assert_allclose(a[below], d[below], atol=1e-12)
    assert np.all(a[~below] >= e[~below] - 1e-12)


@settings(max_examples=300, deadline=None)
@given(instances(), st.data())
def test_unmet_agent_cannot_change_allocation(inst, data):
    e, d = inst
    a = max_min_fairness(e, d)
    short = np.flatnonzero(a < d - 1e-12)
    if not len(short):
        return
    i = data.draw(st.sampled_from(list(short)))
    d2 = d.copy()
    d2[i] = data.draw(st.floats(a[i], 3.0))
    assert abs(max_min_fairness(e, d2)[i] - a[i]) <= 1e-9


@settings(max_examples=300, deadline=None)
@given(instances(), st.data())
def test_allocation_monotone_in_own_demand(inst, data):
    e, d = inst
    i = data.draw(st.integers(0, len(e) - 1))
    d2 = d.copy()
    d2[i] = d[i] + data.draw(st.floats(0.0, 1.0))
    assert max_min_fairness(e, d2)[i] >= max_min_fairness(e, d)[i] - 1e-12


@settings(max_examples=300, deadline=None)
@given(instances())
def test_truthful_demands_leave_nothing_on_the_table(inst):
    e, d = inst
    assert loss_components(d, max_min_fairness(e, d)).lot <= 1e-9


@settings(max_examples=200, deadline=None)
@given(instances(), st.randoms())
def test_permutation_equivariance(inst, rnd):
    e, d = inst
    perm = list(range(len(e)))
    rnd.shuffle(perm)
    a = max_min_fairness(e, d)
    np.testing.assert_allclose(max_min_fairness(e[perm], d[perm]), a[perm], atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(instances())
def test_matches_water_filling_oracle(inst):
    e, d = inst
    np.testing.assert_allclose(max_min_fairness(e, d), water_fill(e, d), atol=1e-7)
