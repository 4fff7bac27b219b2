import numpy as np
import pytest

from core.errors import ConfigurationError
from core.mdp import Ensemble, TabularMDP
from core.sampler import RngStream, apply_empirical, empirical_matrix, sample_draw


def test_draws_depend_only_on_seed_agent_and_iteration(maze_ensemble):
	rng = RngStream(42)
	first = sample_draw(maze_ensemble, 1, 17, rng)
	sample_draw(maze_ensemble, 0, 3, rng)
	second = sample_draw(maze_ensemble, 1, 17, RngStream(42))
	assert np.array_equal(first.successors, second.successors)


def test_different_iterations_use_different_uniforms():
	rng = RngStream(42)
	assert not np.array_equal(rng.uniforms(0, 0, 16), rng.uniforms(0, 1, 16))
	assert not np.array_equal(rng.uniforms(0, 0, 16), rng.uniforms(1, 0, 16))


def test_successors_lie_in_support(maze_ensemble):
	rng = RngStream(5)
	for t in range(20):
		for k in range(maze_ensemble.num_agents):
			draw = sample_draw(maze_ensemble, k, t, rng)
			kernel = maze_ensemble.agents[k].kernel
			pairs = np.arange(kernel.shape[0])
			assert np.all(kernel[pairs, draw.flat_successors] > 0.0)


def test_point_mass_kernels_skip_randomness(lower_bound_ensemble):
	identity = sample_draw(lower_bound_ensemble, 0, 9, RngStream(1))
	swap = sample_draw(lower_bound_ensemble, 1, 9, RngStream(2))
	assert identity.successors[:, 0].tolist() == [0, 1]
	assert swap.successors[:, 0].tolist() == [1, 0]


def test_empirical_matrix_is_one_hot(maze_ensemble):
	draw = sample_draw(maze_ensemble, 0, 0, RngStream(3))
	matrix = empirical_matrix(draw)
	assert np.array_equal(matrix.sum(axis=1), np.ones(matrix.shape[0]))
	values = np.linspace(0.0, 1.0, maze_ensemble.num_states)
	expected = (matrix @ values).reshape(maze_ensemble.num_states, maze_ensemble.num_actions)
	assert np.array_equal(apply_empirical(draw, values), expected)


def test_empirical_frequencies_match_kernel(maze_ensemble):
	rng = RngStream(8)
	kernel = maze_ensemble.agents[0].kernel
	counts = np.zeros_like(kernel)
	draws = 4000
	for t in range(draws):
		counts += empirical_matrix(sample_draw(maze_ensemble, 0, t, rng))
	assert np.max(np.abs(counts / draws - kernel)) < 0.035


def test_apply_empirical_checks_shape(maze_ensemble):
	draw = sample_draw(maze_ensemble, 0, 0, RngStream(3))
	with pytest.raises(ConfigurationError):
		apply_empirical(draw, np.zeros(2))


@pytest.mark.parametrize("seed", [-1, 2 ** 64, True, 1.5])
def test_rng_stream_rejects_invalid_seed(seed):
	with pytest.raises(ConfigurationError):
		RngStream(seed)


def test_sample_draw_rejects_unknown_agent(maze_ensemble):
	with pytest.raises(ConfigurationError):
		sample_draw(maze_ensemble, 5, 0, RngStream(0))


@pytest.mark.slow
def test_pairs_are_sampled_independently():
	mdp = TabularMDP(2, 1, [[0.5, 0.5], [0.3, 0.7]], [1.0, 0.0], 0.5)
	ensemble = Ensemble.from_agents([mdp])
	rng = RngStream(21)
	draws = 100_000
	hits = np.array([sample_draw(ensemble, 0, t, rng).flat_successors == 1 for t in range(draws)], dtype=np.float64)
	assert np.allclose(hits.mean(axis=0), [0.5, 0.7], atol=0.01)
	correlation = np.corrcoef(hits[:, 0], hits[:, 1])[0, 1]
	assert abs(correlation) <= 0.02
