import numpy as np
import pytest

from core.envs import LowerBoundSpec, MazeSpec, make_homogeneous_ensemble, make_lower_bound_ensemble, make_maze_ensemble
from utils.lib import set_logging


@pytest.fixture(autouse=True)
def quiet_logging():
	set_logging("WARNING")
	yield
	set_logging("WARNING")


@pytest.fixture
def maze_spec():
	return MazeSpec(grid_side=3, drift=0.1, wall_density=0.3, seed=7, reward_p=0.3, discount=0.9)


@pytest.fixture
def maze_ensemble(maze_spec):
	return make_maze_ensemble(maze_spec, 3)


@pytest.fixture
def homogeneous_ensemble(maze_spec):
	return make_homogeneous_ensemble(maze_spec, 3)


@pytest.fixture
def lower_bound_spec():
	return LowerBoundSpec(num_agents=2, reward=(1.0, 0.0), discount=0.5)


@pytest.fixture
def lower_bound_ensemble(lower_bound_spec):
	return make_lower_bound_ensemble(lower_bound_spec)


@pytest.fixture
def fast_document(tmp_path):
	"""Document d'expérience minuscule : labyrinthe 3×3, T = 60, 2 répétitions"""
	return {
		'num_agents': 2,
		'gamma': 0.9,
		'horizon': 60,
		'num_repeats': 2,
		'seed': 11,
		'window': 5,
		'out_dir': str(tmp_path / "out"),
		'ensemble': {'kind': "maze", 'maze': {'grid_side': 3, 'drift': 0.1, 'wall_density': 0.3, 'reward_p': 0.3}},
	}


def two_state_kernel(p: float) -> np.ndarray:
	return np.array([[1.0 - p, p], [p, 1.0 - p]])
