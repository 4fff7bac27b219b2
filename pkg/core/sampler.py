"""Échantillonnage synchrone par modèle génératif"""
from dataclasses import dataclass

import numpy as np

from core.errors import ConfigurationError
from core.mdp import Ensemble

MAX_SEED = 2 ** 64


@dataclass(frozen=True)
class RngStream:
	"""
	Flux à compteur : le tirage de (agent, itération) ne dépend que de
	(master_seed, agent, itération), quel que soit l'ordre d'exécution.
	Le couple d'indice p = s·|A| + a consomme le p-ième uniforme.
	"""
	master_seed: int

	def __post_init__(self):
		if isinstance(self.master_seed, bool) or not isinstance(self.master_seed, (int, np.integer)):
			raise ConfigurationError(f"Graine {self.master_seed!r} non entière")
		if not 0 <= int(self.master_seed) < MAX_SEED:
			raise ConfigurationError(f"Graine {self.master_seed} hors de [0, 2^64)")
		object.__setattr__(self, 'master_seed', int(self.master_seed))

	def generator(self, agent: int, iteration: int) -> np.random.Generator:
		key = np.random.SeedSequence([self.master_seed, int(agent), int(iteration)])
		return np.random.Generator(np.random.Philox(key))

	def uniforms(self, agent: int, iteration: int, size: int) -> np.ndarray:
		return self.generator(agent, iteration).random(size)


@dataclass(frozen=True, eq=False)
class SampleDraw:
	iteration: int
	agent: int
	successors: np.ndarray
	num_states: int

	@property
	def flat_successors(self) -> np.ndarray:
		return self.successors.ravel()


def sample_draw(ensemble: Ensemble, agent: int, iteration: int, rng: RngStream) -> SampleDraw:
	"""Un état suivant par couple (s, a), par inversion de la fonction de répartition de P^k(·|s,a)"""
	if not 0 <= agent < ensemble.num_agents:
		raise ConfigurationError(f"Agent {agent} hors de [0, {ensemble.num_agents})")
	mdp = ensemble.agents[agent]
	if mdp.point_successors is not None:
		successors = mdp.point_successors
	else:
		uniforms = rng.uniforms(agent, iteration, mdp.num_pairs)
		successors = np.count_nonzero(mdp.kernel_cdf <= uniforms[:, np.newaxis], axis=1)
		successors = np.minimum(successors, mdp.num_states - 1)
	return SampleDraw(
		iteration=iteration,
		agent=agent,
		successors=successors.reshape(mdp.num_states, mdp.num_actions),
		num_states=mdp.num_states,
	)


def empirical_matrix(draw: SampleDraw) -> np.ndarray:
	"""Matrice 0/1 P̃ : une seule entrée à 1 par ligne (s, a)"""
	flat = draw.flat_successors
	matrix = np.zeros((flat.size, draw.num_states))
	matrix[np.arange(flat.size), flat] = 1.0
	return matrix


def apply_empirical(draw: SampleDraw, values: np.ndarray) -> np.ndarray:
	"""(s, a) ↦ V(successeur(s, a)), soit P̃V sans former la matrice"""
	values = np.asarray(values, dtype=np.float64)
	if values.shape != (draw.num_states,):
		raise ConfigurationError(f"Table de valeurs de forme {values.shape}, attendu ({draw.num_states},)")
	return values[draw.successors]
