import numpy as np
import pytest

import core.engine as engine
from core.engine import (
	IDENTITY_TOLERANCE, RunConfig, detect_phase_transition, local_step, run, smoothed_errors, sync_average,
	verify_coarse_bounds, verify_error_iteration,
)
from core.envs import MazeSpec, make_homogeneous_ensemble
from core.errors import ConfigurationError, InvariantViolationError, UnsupportedIdentityError
from core.mdp import Ensemble, TabularMDP
from core.sampler import RngStream, SampleDraw
from core.schedules import StepsizeSchedule

CONSTANT = StepsizeSchedule(kind="constant", value=0.2)


def make_config(ensemble, **overrides) -> RunConfig:
	values = dict(ensemble=ensemble, period=3, horizon=30, schedule=CONSTANT, seed=13)
	values.update(overrides)
	return RunConfig(**values)


def test_local_step_formula():
	q = np.array([[0.2, 0.4], [0.6, 0.0]])
	reward = np.array([[1.0, 0.0], [0.0, 1.0]])
	draw = SampleDraw(0, 0, np.array([[1, 0], [0, 1]]), 2)
	updated = local_step(q, draw, 0.5, reward, 0.9)
	# V = (0.4, 0.6)
	expected = 0.5 * q + 0.5 * (reward + 0.9 * np.array([[0.6, 0.4], [0.4, 0.6]]))
	assert np.allclose(updated, expected)


def test_local_step_rejects_bad_stepsize():
	draw = SampleDraw(0, 0, np.zeros((2, 1), dtype=int), 2)
	with pytest.raises(ConfigurationError):
		local_step(np.zeros((2, 1)), draw, 0.0, np.zeros((2, 1)), 0.5)


def test_sync_average():
	assert np.array_equal(sync_average([np.zeros((2, 1)), np.full((2, 1), 2.0)]), np.ones((2, 1)))


def test_zero_horizon_trace(maze_ensemble):
	trace = run(make_config(maze_ensemble, horizon=0))
	assert trace.errors.tolist() == [float(np.max(maze_ensemble.q_star))]
	assert np.isnan(trace.stepsizes[0])


def test_sync_flags_follow_period(maze_ensemble):
	trace = run(make_config(maze_ensemble, period=4, horizon=20))
	assert np.flatnonzero(trace.synced).tolist() == [4, 8, 12, 16, 20]
	assert np.isnan(trace.stepsizes[-1])
	assert np.all(trace.stepsizes[:-1] == 0.2)


def test_never_synchronizing(maze_ensemble):
	trace = run(make_config(maze_ensemble, period=0, record_locals=True))
	assert not trace.synced.any()
	assert not np.allclose(trace.local_tables[-1][0], trace.local_tables[-1][1])


def test_period_one_keeps_agents_identical(maze_ensemble):
	trace = run(make_config(maze_ensemble, period=1, record_locals=True))
	for tables in trace.local_tables:
		assert np.array_equal(tables[0], tables[1])


def test_run_is_independent_of_thread_count(maze_ensemble):
	sequential = run(make_config(maze_ensemble, threads=1))
	parallel = run(make_config(maze_ensemble, threads=3))
	assert np.array_equal(sequential.errors, parallel.errors)
	assert np.array_equal(sequential.q_final, parallel.q_final)


def test_run_is_reproducible_and_seed_sensitive(maze_ensemble):
	first = run(make_config(maze_ensemble))
	second = run(make_config(maze_ensemble))
	other = run(make_config(maze_ensemble, seed=14))
	assert np.array_equal(first.errors, second.errors)
	assert not np.array_equal(first.errors, other.errors)


def test_deterministic_homogeneous_start_at_optimum():
	spec = MazeSpec(grid_side=3, drift=0.0, wall_density=0.3, seed=2, reward_p=0.5, discount=0.9)
	ensemble = make_homogeneous_ensemble(spec, 2)
	trace = run(make_config(ensemble, q_init=ensemble.q_star))
	assert trace.errors.max() <= 1e-9


def test_identities_hold_on_maze(maze_ensemble):
	trace = run(make_config(maze_ensemble, verify_identities=True, horizon=60))
	assert trace.identity_residuals.shape == (60,)
	assert trace.identity_residuals.max() <= IDENTITY_TOLERANCE * trace.value_bound
	assert trace.bound_violations == []


def test_unrolled_identity_recomputed_from_locals(maze_ensemble):
	trace = run(make_config(maze_ensemble, record_locals=True, horizon=25))
	for t in (0, 11, 24):
		assert verify_error_iteration(trace, maze_ensemble, t) <= IDENTITY_TOLERANCE * trace.value_bound


def test_unrolled_identity_needs_locals_and_constant_steps(maze_ensemble):
	trace = run(make_config(maze_ensemble))
	with pytest.raises(ConfigurationError):
		verify_error_iteration(trace, maze_ensemble, 0)
	two_phase = StepsizeSchedule(kind="two_phase", lambda1=0.2, t0=10, phase2=StepsizeSchedule(kind="constant", value=0.1))
	trace = run(make_config(maze_ensemble, schedule=two_phase, record_locals=True))
	with pytest.raises(UnsupportedIdentityError):
		verify_error_iteration(trace, maze_ensemble, 20)


def test_time_varying_steps_skip_identity(maze_ensemble):
	two_phase = StepsizeSchedule(kind="two_phase", lambda1=0.2, t0=10, phase2=StepsizeSchedule(kind="constant", value=0.1))
	trace = run(make_config(maze_ensemble, schedule=two_phase, verify_identities=True))
	assert trace.identity_residuals is None


def test_identity_violation_raises_with_trace(maze_ensemble, monkeypatch):
	monkeypatch.setattr(engine, "_error_increment", lambda *args: np.ones((maze_ensemble.num_states, 4)))
	with pytest.raises(InvariantViolationError) as error:
		run(make_config(maze_ensemble, verify_identities=True))
	assert error.value.trace is not None
	assert error.value.trace.horizon == 30


def test_coarse_bounds_on_recorded_tables(maze_ensemble):
	trace = run(make_config(maze_ensemble, period=5, record_locals=True))
	report = verify_coarse_bounds(trace)
	assert report.passed
	assert report.checked == 31 * maze_ensemble.num_agents


def test_local_errors_recorded(maze_ensemble):
	trace = run(make_config(maze_ensemble, record_locals=True))
	assert trace.local_errors.shape == (31, maze_ensemble.num_agents)
	assert np.all(trace.local_errors <= trace.value_bound)


def test_trace_frame_schema(maze_ensemble):
	frame = run(make_config(maze_ensemble, horizon=5)).to_frame()
	assert list(frame.columns) == ["t", "linf_error", "lambda", "synced", "run_id", "seed"]
	assert len(frame) == 6
	assert frame['seed'].iloc[0] == "13"


@pytest.mark.parametrize("overrides", [
	{'period': -1},
	{'horizon': -1},
	{'threads': 0},
	{'seed': -5},
	{'q_init': np.full((9, 4), 50.0)},
	{'q_init': np.zeros((2, 2))},
])
def test_run_config_validation(maze_ensemble, overrides):
	with pytest.raises(ConfigurationError):
		make_config(maze_ensemble, **overrides)


def test_q_init_is_frozen(maze_ensemble):
	config = make_config(maze_ensemble, q_init=np.zeros((9, 4)))
	assert not config.q_init.flags.writeable
	assert RngStream(config.seed).master_seed == 13


def test_phase_transition_of_monotone_series():
	assert detect_phase_transition(np.linspace(5.0, 1.0, 40), window=5) == 39


def test_phase_transition_at_dip():
	errors = np.concatenate([np.linspace(10.0, 1.0, 50), np.linspace(1.0, 5.0, 51)[1:]])
	assert abs(detect_phase_transition(errors, window=5) - 49) <= 2


def test_phase_transition_window_validation():
	with pytest.raises(ConfigurationError):
		detect_phase_transition(np.ones(3), window=5)
	with pytest.raises(ConfigurationError):
		detect_phase_transition(np.ones(10), window=0)


def test_single_agent_synchronous_q_learning():
	successors = np.array([[1, 2], [2, 0], [0, 0]])
	kernel = np.zeros((6, 3))
	kernel[np.arange(6), successors.ravel()] = 1.0
	reward = np.array([[0.0, 1.0], [0.5, 0.0], [1.0, 0.2]])
	ensemble = Ensemble.from_agents([TabularMDP(3, 2, kernel, reward, 0.8)])
	trace = run(RunConfig(ensemble=ensemble, period=1, horizon=40, schedule=CONSTANT, seed=2))

	q = np.zeros((3, 2))
	errors = [float(np.max(np.abs(ensemble.q_star - q)))]
	for _ in range(40):
		q = 0.8 * q + 0.2 * (reward + 0.8 * q.max(axis=1)[successors])
		errors.append(float(np.max(np.abs(ensemble.q_star - q))))
	assert np.allclose(trace.errors, errors, atol=1e-14)
	assert np.allclose(trace.q_final, q, atol=1e-14)
	assert trace.synced[1:].all()


def test_smoothed_errors_truncate_at_edges():
	smoothed = smoothed_errors(np.array([0.0, 3.0, 6.0, 9.0]), window=3)
	assert np.allclose(smoothed, [1.5, 3.0, 6.0, 7.5])
	assert np.array_equal(smoothed_errors(np.array([2.0, 1.0]), window=1), [2.0, 1.0])
