import math

import pytest

from core.errors import BoundPreconditionError, ConfigurationError
from core.schedules import (
	BoundParams, StepsizeSchedule, check_theorem1_stepsizes, corollary1_bound, corollary1_terms, corollary_stepsize,
	is_time_invariant, stepsize, theorem1_bound, theorem1_terms,
)


def params(**overrides) -> BoundParams:
	values = dict(
		gamma=0.5, lam=0.01, period=2, num_agents=4, horizon=1000, kappa=0.1, delta=0.1, num_states=2, num_actions=1,
	)
	values.update(overrides)
	return BoundParams(**values)


def test_constant_and_poly_stepsizes():
	assert stepsize(StepsizeSchedule(kind="constant", value=0.2), 5, 100, 3, 0.9) == 0.2
	assert stepsize(StepsizeSchedule(kind="poly", alpha=0.5), 0, 400, 3, 0.9) == pytest.approx(0.05)


def test_corollary_stepsize_is_clipped_to_one():
	assert corollary_stepsize(10, 2, 0.9) == 1.0
	T, K, gamma = 10 ** 6, 4, 0.5
	assert corollary_stepsize(T, K, gamma) == pytest.approx(4.0 * math.log(T * K) ** 2 / ((1.0 - gamma) * T))


def test_two_phase_switches_at_t0():
	schedule = StepsizeSchedule.from_dict({'kind': "two_phase", 'lambda1': 0.2, 't0': 10})
	assert schedule.phase2.kind == "poly" and schedule.phase2.alpha == 0.5
	assert stepsize(schedule, 9, 100, 1, 0.9) == 0.2
	assert stepsize(schedule, 10, 100, 1, 0.9) == pytest.approx(0.1)


def test_two_phase_without_t0_cannot_be_evaluated():
	schedule = StepsizeSchedule.from_dict({'kind': "two_phase", 'lambda1': 0.2})
	with pytest.raises(ConfigurationError):
		stepsize(schedule, 0, 100, 1, 0.9)
	assert stepsize(schedule.with_t0(5), 0, 100, 1, 0.9) == 0.2


def test_stepsize_rejects_iteration_outside_horizon():
	with pytest.raises(ConfigurationError):
		stepsize(StepsizeSchedule(kind="constant", value=0.1), 100, 100, 1, 0.9)


@pytest.mark.parametrize("document", [
	{'kind': "constant", 'value': 0.0},
	{'kind': "constant", 'value': 1.5},
	{'kind': "poly", 'alpha': -1.0},
	{'kind': "constant", 'value': 0.1, 'alpha': 0.5},
	{'kind': "cosine"},
	{'value': 0.1},
	{'kind': "two_phase", 'lambda1': 0.1, 'phase2': {'kind': "two_phase", 'lambda1': 0.1}},
])
def test_schedule_validation(document):
	with pytest.raises(ConfigurationError):
		StepsizeSchedule.from_dict(document)


def test_time_invariance():
	assert is_time_invariant(StepsizeSchedule(kind="poly", alpha=0.5), 100)
	two_phase = StepsizeSchedule.from_dict({'kind': "two_phase", 'lambda1': 0.2, 't0': 10})
	assert not is_time_invariant(two_phase, 100)
	assert is_time_invariant(two_phase, 10)


def test_theorem1_stepsize_hypotheses():
	assert check_theorem1_stepsizes(StepsizeSchedule(kind="constant", value=0.01), 2, 100, 1, 0.5) == []
	failures = check_theorem1_stepsizes(StepsizeSchedule(kind="constant", value=0.1), 10, 100, 1, 0.99)
	assert any(failure.startswith("period_drift") for failure in failures)
	assert check_theorem1_stepsizes(StepsizeSchedule(kind="constant", value=0.1), 0, 100, 1, 0.5)


def test_theorem1_terms_sum_to_bound():
	terms = theorem1_terms(params())
	assert list(terms) == ['optimization', 'heterogeneity', 'local_sampling', 'global_sampling']
	assert all(value > 0.0 for value in terms.values())
	assert theorem1_bound(params()) == pytest.approx(sum(terms.values()))


def test_theorem1_optimization_term():
	p = params()
	expected = 4.0 / (1.0 - p.gamma) ** 2 * math.exp(-0.5 * math.sqrt((1.0 - p.gamma) * p.lam * p.horizon))
	assert theorem1_terms(p)['optimization'] == pytest.approx(expected)


def test_theorem1_without_local_drift():
	terms = theorem1_terms(params(period=1))
	assert terms['heterogeneity'] == 0.0
	assert terms['local_sampling'] == 0.0


def test_theorem1_heterogeneity_scales_with_kappa():
	low = theorem1_terms(params(kappa=0.1))['heterogeneity']
	high = theorem1_terms(params(kappa=0.2))['heterogeneity']
	assert high == pytest.approx(2.0 * low)


@pytest.mark.parametrize("overrides, hypothesis", [
	({'gamma': 1.0}, "gamma"),
	({'delta': 0.5}, "delta"),
	({'period': 0}, "period"),
	({'kappa': -0.1}, "kappa"),
	({'lam': 0.6}, "stepsize_period"),
	({'gamma': 0.99, 'lam': 0.1, 'period': 10}, "period_drift"),
])
def test_theorem1_preconditions(overrides, hypothesis):
	with pytest.raises(BoundPreconditionError) as error:
		theorem1_terms(params(**overrides))
	assert error.value.hypothesis == hypothesis


def test_corollary1_terms():
	p = params(period=1, horizon=10 ** 6, num_agents=4)
	terms = corollary1_terms(p)
	assert terms['heterogeneity'] == 0.0
	assert terms['optimization'] == pytest.approx(4.0 / ((1.0 - p.gamma) ** 2 * p.horizon * p.num_agents))
	assert corollary1_bound(p) == pytest.approx(sum(terms.values()))


def test_corollary1_rejects_long_periods():
	with pytest.raises(BoundPreconditionError):
		corollary1_terms(params(period=1000, horizon=10 ** 6))


def test_theorem1_grows_with_period():
	bounds = [theorem1_bound(params(period=period, lam=0.01)) for period in (1, 2, 3)]
	assert bounds[0] < bounds[1] < bounds[2]
