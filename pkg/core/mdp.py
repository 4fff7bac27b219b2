"""
MDP tabulaires, environnement global, hétérogénéité des transitions et Q* exact.

Disposition des noyaux : une ligne par couple (s, a), indice s·|A| + a, et une
colonne par état suivant. Les tables Q (et les erreurs Δ) sont de forme (|S|, |A|).
"""
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import Literal, TypeAlias

import numpy as np
from loguru import logger

from config.settings import VALUE_ITERATION_MAX_ITERS, VALUE_ITERATION_TOLERANCE
from core.errors import ConfigurationError, NumericalError

ROW_SUM_TOLERANCE = 1e-12

QTable: TypeAlias = np.ndarray
Norm = Literal["max-entry", "l1"]


def _frozen(values) -> np.ndarray:
	array = np.array(values, dtype=np.float64)
	array.flags.writeable = False
	return array


@dataclass(frozen=True, eq=False)
class TabularMDP:
	"""Environnement d'un agent : noyau stochastique par lignes, récompense, actualisation"""
	num_states: int
	num_actions: int
	kernel: np.ndarray
	reward: np.ndarray
	discount: float

	def __post_init__(self):
		if self.num_states < 1 or self.num_actions < 1:
			raise ConfigurationError(
				f"Dimensions invalides : |S|={self.num_states}, |A|={self.num_actions}"
			)
		pairs = self.num_states * self.num_actions
		kernel = _frozen(self.kernel)
		if kernel.shape != (pairs, self.num_states):
			raise ConfigurationError(
				f"Noyau de forme {kernel.shape}, attendu {(pairs, self.num_states)}"
			)
		reward = _frozen(self.reward)
		if reward.size != pairs:
			raise ConfigurationError(f"Récompense de taille {reward.size}, attendu {pairs}")
		reward = reward.reshape(self.num_states, self.num_actions)

		if np.any(kernel < 0.0) or np.any(kernel > 1.0):
			raise ConfigurationError("Les probabilités de transition doivent être dans [0, 1]")
		row_error = np.max(np.abs(kernel.sum(axis=1) - 1.0))
		if row_error > ROW_SUM_TOLERANCE:
			raise ConfigurationError(f"Noyau non stochastique : écart de somme {row_error:.3e}")
		if np.any(reward < 0.0) or np.any(reward > 1.0):
			raise ConfigurationError("Les récompenses doivent être dans [0, 1]")
		if not 0.0 <= self.discount < 1.0:
			raise ConfigurationError(f"Facteur d'actualisation {self.discount} hors de [0, 1)")

		object.__setattr__(self, 'kernel', kernel)
		object.__setattr__(self, 'reward', reward)
		object.__setattr__(self, 'discount', float(self.discount))

	@property
	def num_pairs(self) -> int:
		return self.num_states * self.num_actions

	@property
	def value_bound(self) -> float:
		return 1.0 / (1.0 - self.discount)

	@cached_property
	def kernel_cdf(self) -> np.ndarray:
		"""Sommes cumulées des lignes (ordre croissant des états), à 1 dès le dernier état atteignable"""
		cdf = np.cumsum(self.kernel, axis=1)
		last_support = self.num_states - 1 - np.argmax(self.kernel[:, ::-1] > 0.0, axis=1)
		cdf[np.arange(self.num_states)[np.newaxis, :] >= last_support[:, np.newaxis]] = 1.0
		cdf.flags.writeable = False
		return cdf

	@cached_property
	def point_successors(self) -> np.ndarray | None:
		"""Successeur certain de chaque couple si toutes les lignes sont des masses de Dirac, sinon None"""
		if not np.all(self.kernel.max(axis=1) == 1.0):
			return None
		successors = self.kernel.argmax(axis=1)
		successors.flags.writeable = False
		return successors


@dataclass(frozen=True, eq=False)
class Ensemble:
	"""K MDP partageant (S, A, R, γ), le MDP global dérivé et l'hétérogénéité κ"""
	agents: tuple
	shared_reward: np.ndarray
	discount: float
	global_mdp: TabularMDP
	kappa_inf: float
	kappa_l1: float

	def __post_init__(self):
		if len(self.agents) < 1:
			raise ConfigurationError("Un ensemble contient au moins un agent")
		first = self.agents[0]
		for index, agent in enumerate(self.agents):
			if (agent.num_states, agent.num_actions) != (first.num_states, first.num_actions):
				raise ConfigurationError(f"L'agent {index} n'a pas les dimensions de l'agent 0")
			if agent.discount != self.discount or not np.array_equal(agent.reward, self.shared_reward):
				raise ConfigurationError(f"L'agent {index} ne partage pas (R, γ) avec l'ensemble")
		mean_error = np.max(np.abs(self.global_mdp.kernel - global_kernel(self.agents)))
		if mean_error > ROW_SUM_TOLERANCE:
			raise ConfigurationError(f"Noyau global incohérent : écart {mean_error:.3e}")
		if not (0.0 <= self.kappa_inf <= 1.0 and 0.0 <= self.kappa_l1 <= 2.0):
			raise ConfigurationError(f"Hétérogénéité hors bornes : κ∞={self.kappa_inf}, κ1={self.kappa_l1}")

	@classmethod
	def from_agents(cls, agents: Sequence[TabularMDP]) -> 'Ensemble':
		agents = tuple(agents)
		if not agents:
			raise ConfigurationError("Un ensemble contient au moins un agent")
		first = agents[0]
		mean_kernel = global_kernel(agents)
		global_mdp = TabularMDP(
			first.num_states, first.num_actions, mean_kernel, first.reward, first.discount
		)
		stacked = np.stack([agent.kernel for agent in agents])
		return cls(
			agents=agents,
			shared_reward=first.reward,
			discount=first.discount,
			global_mdp=global_mdp,
			kappa_inf=_heterogeneity(stacked, global_mdp.kernel, "max-entry"),
			kappa_l1=_heterogeneity(stacked, global_mdp.kernel, "l1"),
		)

	@classmethod
	def from_kernels(cls, kernels, reward, discount: float, num_states: int, num_actions: int) -> 'Ensemble':
		return cls.from_agents(
			TabularMDP(num_states, num_actions, kernel, reward, discount) for kernel in kernels
		)

	@property
	def num_agents(self) -> int:
		return len(self.agents)

	@property
	def num_states(self) -> int:
		return self.global_mdp.num_states

	@property
	def num_actions(self) -> int:
		return self.global_mdp.num_actions

	@cached_property
	def q_star(self) -> QTable:
		"""Q* du MDP global"""
		q_star = optimal_q(self.global_mdp)
		q_star.flags.writeable = False
		return q_star


def global_kernel(ensemble) -> np.ndarray:
	"""Moyenne entrée par entrée (1/K)Σ_k P^k des noyaux des agents"""
	agents = ensemble.agents if isinstance(ensemble, Ensemble) else tuple(ensemble)
	if not agents:
		raise ConfigurationError("Aucun noyau à moyenner")
	kernels = [agent.kernel if isinstance(agent, TabularMDP) else np.asarray(agent, dtype=np.float64) for agent in agents]
	shape = kernels[0].shape
	for index, kernel in enumerate(kernels):
		if kernel.shape != shape:
			raise ConfigurationError(f"Noyau {index} de forme {kernel.shape}, attendu {shape}")
	return np.mean(np.stack(kernels), axis=0)


def _heterogeneity(stacked: np.ndarray, mean_kernel: np.ndarray, norm: Norm) -> float:
	gap = np.abs(mean_kernel[np.newaxis] - stacked)
	if norm == "max-entry":
		return float(gap.max())
	if norm == "l1":
		return float(gap.sum(axis=2).max())
	raise ConfigurationError(f"Norme inconnue : {norm}")


def heterogeneity(ensemble: Ensemble, norm: Norm = "max-entry") -> float:
	"""sup_{k,s,a} ‖P̄(·|s,a) − P^k(·|s,a)‖ pour la norme choisie"""
	stacked = np.stack([agent.kernel for agent in ensemble.agents])
	if stacked.shape[1:] != ensemble.global_mdp.kernel.shape:
		raise ConfigurationError("Les noyaux des agents ne correspondent pas au noyau global")
	return _heterogeneity(stacked, ensemble.global_mdp.kernel, norm)


def _check_table(mdp: TabularMDP, q) -> np.ndarray:
	q = np.asarray(q, dtype=np.float64)
	if q.shape != (mdp.num_states, mdp.num_actions):
		raise ConfigurationError(f"Table de forme {q.shape}, attendu {(mdp.num_states, mdp.num_actions)}")
	return q


def greedy_value(q: QTable) -> np.ndarray:
	"""V(s) = max_a q(s, a)"""
	return np.asarray(q, dtype=np.float64).max(axis=1)


def bellman_apply(mdp: TabularMDP, q: QTable) -> QTable:
	"""(s,a) ↦ R(s,a) + γ Σ_{s'} P(s'|s,a) max_{a'} q(s',a')"""
	q = _check_table(mdp, q)
	expected = (mdp.kernel @ greedy_value(q)).reshape(mdp.num_states, mdp.num_actions)
	return mdp.reward + mdp.discount * expected


def linf_error(q: QTable, q_star: QTable) -> float:
	q = np.asarray(q, dtype=np.float64)
	q_star = np.asarray(q_star, dtype=np.float64)
	if q.shape != q_star.shape:
		raise ConfigurationError(f"Formes incompatibles : {q.shape} et {q_star.shape}")
	return float(np.max(np.abs(q - q_star)))


def optimal_q(
		mdp: TabularMDP,
		tolerance: float = VALUE_ITERATION_TOLERANCE,
		max_iters: int = VALUE_ITERATION_MAX_ITERS,
) -> QTable:
	"""
	Point fixe de l'équation d'optimalité de Bellman.

	Les processus de récompense (|A| = 1) sont résolus exactement par
	(I − γP)Q = R ; sinon itération sur les valeurs arrêtée dès que la variation
	d'un balayage est ≤ tolerance·(1−γ)/γ, ce qui garantit une erreur ≤ tolerance.
	"""
	if tolerance <= 0:
		raise ConfigurationError(f"Tolérance {tolerance} non positive")
	gamma = mdp.discount
	if gamma == 0.0:
		return np.array(mdp.reward)

	if mdp.num_actions == 1:
		system = np.eye(mdp.num_states) - gamma * mdp.kernel
		values = np.linalg.solve(system, mdp.reward[:, 0])
		slack = VALUE_ITERATION_TOLERANCE * mdp.value_bound
		excess = float(max(-values.min(), values.max() - mdp.value_bound, 0.0))
		if excess > slack:
			raise NumericalError(
				f"Solution linéaire hors de [0, 1/(1−γ)] (écart {excess:.3e})",
				residual=excess,
			)
		return values.reshape(mdp.num_states, 1)

	threshold = tolerance * (1.0 - gamma) / gamma
	q = np.zeros((mdp.num_states, mdp.num_actions))
	change = np.inf
	for sweep in range(max_iters):
		updated = bellman_apply(mdp, q)
		change = float(np.max(np.abs(updated - q)))
		q = updated
		if change <= threshold:
			logger.debug("Itération sur les valeurs convergée en {} balayages", sweep + 1)
			return q
	raise NumericalError(
		f"Itération sur les valeurs non convergée en {max_iters} balayages (variation {change:.3e})",
		residual=change,
	)


def dump_ensemble(ensemble: Ensemble) -> dict:
	"""Document JSON : dimensions, γ, récompense à plat et K noyaux à plat"""
	return {
		'num_states': ensemble.num_states,
		'num_actions': ensemble.num_actions,
		'gamma': ensemble.discount,
		'reward': ensemble.shared_reward.ravel().tolist(),
		'kernels': [agent.kernel.ravel().tolist() for agent in ensemble.agents],
	}


def load_ensemble(document: dict) -> Ensemble:
	try:
		num_states = int(document['num_states'])
		num_actions = int(document['num_actions'])
		kernels = [
			np.asarray(flat, dtype=np.float64).reshape(num_states * num_actions, num_states)
			for flat in document['kernels']
		]
		return Ensemble.from_kernels(
			kernels, document['reward'], float(document['gamma']), num_states, num_actions
		)
	except (KeyError, TypeError, ValueError) as e:
		if isinstance(e, ConfigurationError):
			raise
		raise ConfigurationError(f"Document d'ensemble invalide : {e}") from e
