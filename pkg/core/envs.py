"""Générateurs d'environnements : labyrinthes aléatoires, contrôles homogènes, instance à deux états"""
from dataclasses import asdict, dataclass, fields

import numpy as np
from loguru import logger

from core.errors import ConfigurationError
from core.mdp import Ensemble, TabularMDP

# Actions (gauche, haut, droite, bas) en déplacements (ligne, colonne)
MOVES = ((0, -1), (-1, 0), (0, 1), (1, 0))

IDENTITY_KERNEL = np.eye(2)
SWAP_KERNEL = np.array([[0.0, 1.0], [1.0, 0.0]])


def _from_fragment(cls, fragment: dict):
	known = {f.name for f in fields(cls)}
	unknown = set(fragment) - known
	if unknown:
		raise ConfigurationError(f"Champs inconnus pour {cls.__name__} : {sorted(unknown)}")
	return cls(**fragment)


@dataclass(frozen=True)
class MazeSpec:
	grid_side: int = 5
	drift: float = 0.1
	wall_density: float = 0.2
	seed: int | None = None
	reward_p: float = 0.05
	discount: float = 0.99

	def __post_init__(self):
		if self.grid_side < 2:
			raise ConfigurationError(f"grid_side={self.grid_side} doit être ≥ 2")
		if not 0.0 <= self.drift or 3.0 * self.drift > 1.0:
			raise ConfigurationError(
				f"drift={self.drift} ne laisse pas de masse au déplacement voulu (1 − 3·drift < 0)"
			)
		if not 0.0 <= self.wall_density <= 1.0:
			raise ConfigurationError(f"wall_density={self.wall_density} hors de [0, 1]")
		if not 0.0 <= self.reward_p <= 1.0:
			raise ConfigurationError(f"reward_p={self.reward_p} hors de [0, 1]")
		if self.seed is not None and not 0 <= self.seed < 2 ** 64:
			raise ConfigurationError(f"seed={self.seed} n'est pas un entier de 64 bits")

	@classmethod
	def from_dict(cls, fragment: dict) -> 'MazeSpec':
		return _from_fragment(cls, fragment)

	def to_dict(self) -> dict:
		return asdict(self)

	@property
	def num_states(self) -> int:
		return self.grid_side ** 2

	def with_seed(self, seed: int) -> 'MazeSpec':
		return MazeSpec(**{**asdict(self), 'seed': int(seed)})


@dataclass(frozen=True)
class LowerBoundSpec:
	num_agents: int = 2
	reward: tuple = (1.0, 0.0)
	discount: float = 0.5

	def __post_init__(self):
		if self.num_agents < 2 or self.num_agents % 2:
			raise ConfigurationError(f"La construction exige un K pair ≥ 2 (reçu {self.num_agents})")
		reward = tuple(float(r) for r in self.reward)
		if len(reward) != 2:
			raise ConfigurationError(f"La récompense doit avoir 2 entrées (reçu {len(reward)})")
		object.__setattr__(self, 'reward', reward)
		# (I − P̄)R ∝ R₀ − R₁ et P̄R ∝ R₀ + R₁
		if reward[0] == reward[1] or reward[0] + reward[1] == 0.0:
			raise ConfigurationError(
				f"Récompense {reward} pas en position générale : (I − P̄)R ou P̄R est nul"
			)

	@classmethod
	def from_dict(cls, fragment: dict) -> 'LowerBoundSpec':
		return _from_fragment(cls, fragment)

	def to_dict(self) -> dict:
		return asdict(self)


def _require_seed(spec: MazeSpec) -> int:
	if spec.seed is None:
		raise ConfigurationError("MazeSpec.seed doit être fixé avant la génération")
	return spec.seed


def make_bernoulli_reward(seed, p: float, size) -> np.ndarray:
	"""Chaque entrée vaut 1 avec probabilité p, 0 sinon"""
	if not 0.0 <= p <= 1.0:
		raise ConfigurationError(f"Probabilité {p} hors de [0, 1]")
	rng = np.random.default_rng(seed)
	return (rng.random(size) < p).astype(np.float64)


def _sample_walls(spec: MazeSpec, agent: int) -> np.ndarray:
	rng = np.random.default_rng(np.random.SeedSequence([_require_seed(spec), 1, agent]))
	return rng.random((spec.grid_side, spec.grid_side)) < spec.wall_density


def maze_kernel(spec: MazeSpec, walls: np.ndarray) -> np.ndarray:
	"""
	Noyau (|S|·4) × |S| d'un labyrinthe : 1 − 3·drift sur la direction voulue,
	drift sur chacune des trois autres ; un mouvement hors grille ou vers un mur
	laisse l'agent sur place.
	"""
	side = spec.grid_side
	num_states = side * side
	kernel = np.zeros((num_states * len(MOVES), num_states))
	for row in range(side):
		for col in range(side):
			state = row * side + col
			for action in range(len(MOVES)):
				pair = state * len(MOVES) + action
				for direction, (d_row, d_col) in enumerate(MOVES):
					mass = 1.0 - 3.0 * spec.drift if direction == action else spec.drift
					target_row, target_col = row + d_row, col + d_col
					blocked = (
						not (0 <= target_row < side and 0 <= target_col < side)
						or walls[target_row, target_col]
					)
					target = state if blocked else target_row * side + target_col
					kernel[pair, target] += mass
	return kernel / kernel.sum(axis=1, keepdims=True)


def _shared_reward(spec: MazeSpec) -> np.ndarray:
	seed = np.random.SeedSequence([_require_seed(spec), 0])
	return make_bernoulli_reward(seed, spec.reward_p, spec.num_states * len(MOVES))


def make_maze_ensemble(spec: MazeSpec, num_agents: int) -> Ensemble:
	"""K labyrinthes aux murs tirés indépendamment, récompense et γ communs"""
	if num_agents < 1:
		raise ConfigurationError(f"num_agents={num_agents} doit être ≥ 1")
	reward = _shared_reward(spec)
	agents = [
		TabularMDP(spec.num_states, len(MOVES), maze_kernel(spec, _sample_walls(spec, k)), reward, spec.discount)
		for k in range(num_agents)
	]
	ensemble = Ensemble.from_agents(agents)
	logger.debug(
		"Labyrinthes générés : K={}, seed={}, κ∞={:.4f}, κ1={:.4f}",
		num_agents, spec.seed, ensemble.kappa_inf, ensemble.kappa_l1,
	)
	return ensemble


def make_homogeneous_ensemble(spec: MazeSpec, num_agents: int) -> Ensemble:
	"""Le labyrinthe de l'agent 0 répliqué K fois"""
	if num_agents < 1:
		raise ConfigurationError(f"num_agents={num_agents} doit être ≥ 1")
	agent = TabularMDP(
		spec.num_states, len(MOVES), maze_kernel(spec, _sample_walls(spec, 0)), _shared_reward(spec), spec.discount
	)
	return Ensemble.from_agents([agent] * num_agents)


def make_lower_bound_ensemble(spec: LowerBoundSpec) -> Ensemble:
	"""Deux états, une action : identité pour les agents de rang impair, échange pour les pairs"""
	kernels = [IDENTITY_KERNEL if k % 2 == 0 else SWAP_KERNEL for k in range(spec.num_agents)]
	return Ensemble.from_kernels(kernels, spec.reward, spec.discount, num_states=2, num_actions=1)
