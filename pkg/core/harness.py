"""Configuration des expériences, répétitions semées et agrégation des traces"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from config.settings import (
	AGGREGATE_COLUMNS, DEFAULT_EXPERIMENT, DESK_PROFILE, ENSEMBLE_KINDS, EXPERIMENT_KINDS, KIND_DEFAULTS,
	PLATEAU_FRACTION, SMOOTHING_WINDOW,
)
from core.engine import RunConfig, RunTrace, detect_phase_transition, run, smoothed_errors
from core.envs import LowerBoundSpec, MazeSpec, make_homogeneous_ensemble, make_lower_bound_ensemble, make_maze_ensemble
from core.errors import ConfigurationError
from core.mdp import Ensemble
from core.oracle import closed_form_delta, lambda0, lower_bound_floor, regime_floor
from core.reports import CheckResult
from core.schedules import StepsizeSchedule
from utils.data import config_hash, deep_merge, get_attr
from utils.lib import log


def repeat_seed(master_seed: int, repeat: int) -> int:
	"""Graine d'échantillonnage de la répétition i, dérivée de (graine maître, i)"""
	return int(np.random.SeedSequence([master_seed, repeat]).generate_state(1, np.uint64)[0])


def environment_seed(master_seed: int, repeat: int) -> int:
	return int(np.random.SeedSequence([master_seed, repeat, 1]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class EnsembleSpec:
	kind: str = "maze"
	maze: MazeSpec = field(default_factory=MazeSpec)
	lower_bound: LowerBoundSpec = field(default_factory=LowerBoundSpec)

	def __post_init__(self):
		if self.kind not in ENSEMBLE_KINDS:
			raise ConfigurationError(f"Type d'ensemble inconnu : {self.kind} (attendu {ENSEMBLE_KINDS})")

	@classmethod
	def from_dict(cls, document: dict, gamma: float | None = None, num_agents: int | None = None) -> 'EnsembleSpec':
		document = document or {}
		maze = dict(document.get('maze') or {})
		lower_bound = dict(document.get('lower_bound') or {})
		if gamma is not None:
			maze.setdefault('discount', gamma)
			lower_bound.setdefault('discount', gamma)
		if num_agents is not None and num_agents % 2 == 0:
			lower_bound.setdefault('num_agents', num_agents)
		if 'reward' in lower_bound:
			lower_bound['reward'] = tuple(lower_bound['reward'])
		return cls(
			kind=document.get('kind', "maze"),
			maze=MazeSpec.from_dict(maze),
			lower_bound=LowerBoundSpec.from_dict(lower_bound),
		)

	def to_dict(self) -> dict:
		return {'kind': self.kind, 'maze': self.maze.to_dict(), 'lower_bound': self.lower_bound.to_dict()}


def build_ensemble(spec: EnsembleSpec, num_agents: int, seed: int) -> Ensemble:
	"""Ensemble d'une répétition ; la graine dérivée ne sert que si le labyrinthe n'en fixe pas"""
	if spec.kind == "lower_bound":
		return make_lower_bound_ensemble(spec.lower_bound)
	maze = spec.maze if spec.maze.seed is not None else spec.maze.with_seed(seed)
	if spec.kind == "homogeneous":
		return make_homogeneous_ensemble(maze, num_agents)
	return make_maze_ensemble(maze, num_agents)


LOWER_BOUND_FIELDS = {'gammas', 'rounds', 'lambdas', 'periods', 'floor_gamma', 'floor_periods', 'floor_rounds'}
VERIFY_FIELDS = {'num_runs', 'lambdas'}


def _reject_unknown(section: str, document: dict, known: set):
	if not isinstance(document, dict):
		raise ConfigurationError(f"La section {section} doit être un dictionnaire, reçu {document!r}")
	unknown = set(document) - known
	if unknown:
		raise ConfigurationError(f"Champs inconnus dans {section} : {sorted(unknown)}")


def lower_bound_settings(document: dict) -> dict:
	"""Section lower_bound_check typée : listes de flottants et d'entiers"""
	_reject_unknown('lower_bound_check', document, LOWER_BOUND_FIELDS)
	lambdas = document.get('lambdas')
	return {
		'gammas': [float(gamma) for gamma in document['gammas']],
		'rounds': int(document['rounds']),
		'lambdas': None if lambdas is None else [float(lam) for lam in lambdas],
		'periods': [int(period) for period in document['periods']],
		'floor_gamma': float(document['floor_gamma']),
		'floor_periods': [int(period) for period in document['floor_periods']],
		'floor_rounds': [int(rounds) for rounds in document['floor_rounds']],
	}


def verify_settings(document: dict) -> dict:
	_reject_unknown('verify', document, VERIFY_FIELDS)
	return {
		'num_runs': int(document['num_runs']),
		'lambdas': [float(lam) for lam in document['lambdas']],
	}


@dataclass
class ExperimentConfig:
	kind: str
	ensemble: EnsembleSpec
	num_agents: int
	horizon: int
	periods: list
	schedules: list
	num_repeats: int
	seed: int
	out_dir: str
	gamma: float
	threads: int = 1
	window: int = SMOOTHING_WINDOW
	t0: int | None = None
	phase2: StepsizeSchedule | None = None
	tolerances: list = field(default_factory=list)
	record_locals: bool = False
	verify_identities: bool = False
	lower_bound_check: dict = field(default_factory=dict)
	verify: dict = field(default_factory=dict)
	replay_dir: str | None = None
	source: dict = field(default_factory=dict)

	def __post_init__(self):
		if self.kind not in EXPERIMENT_KINDS:
			raise ConfigurationError(f"Type d'expérience inconnu : {self.kind} (attendu {EXPERIMENT_KINDS})")
		if self.num_repeats < 1:
			raise ConfigurationError(f"num_repeats={self.num_repeats} doit être ≥ 1")
		if self.num_agents < 1:
			raise ConfigurationError(f"num_agents={self.num_agents} doit être ≥ 1")
		if self.horizon < 0:
			raise ConfigurationError(f"horizon={self.horizon} négatif")
		if not self.periods or any(period < 0 for period in self.periods):
			raise ConfigurationError(f"Périodes invalides : {self.periods} (0 = jamais)")
		if not self.schedules:
			raise ConfigurationError("Au moins un pas d'apprentissage est requis")
		if self.threads < 1:
			raise ConfigurationError(f"threads={self.threads} doit être ≥ 1")
		if not 0 <= self.seed < 2 ** 64:
			raise ConfigurationError(f"Graine {self.seed} hors de [0, 2^64)")

	@classmethod
	def from_dict(cls, document: dict) -> 'ExperimentConfig':
		"""Valeurs par défaut < profil de référence < défauts du type d'expérience < document"""
		document = document or {}
		kind = document.get('kind', DEFAULT_EXPERIMENT['kind'])
		merged = deep_merge(DEFAULT_EXPERIMENT, DESK_PROFILE, KIND_DEFAULTS.get(kind), document)
		known = {'kind', 'ensemble', 'num_agents', 'horizon', 'periods', 'schedules', 'num_repeats', 'seed',
		         'out_dir', 'gamma', 'threads', 'window', 't0', 'phase2', 'tolerances', 'record_locals',
		         'verify_identities', 'lower_bound_check', 'verify', 'replay_dir'}
		unknown = set(merged) - known
		if unknown:
			raise ConfigurationError(f"Champs inconnus dans la configuration : {sorted(unknown)}")
		try:
			gamma = float(merged['gamma'])
			num_agents = int(merged['num_agents'])
			return cls(
				kind=merged['kind'],
				ensemble=EnsembleSpec.from_dict(merged.get('ensemble'), gamma, num_agents),
				num_agents=num_agents,
				horizon=int(merged['horizon']),
				periods=[int(period) for period in merged['periods']],
				schedules=[StepsizeSchedule.from_dict(schedule) for schedule in merged['schedules']],
				num_repeats=int(merged['num_repeats']),
				seed=int(merged['seed']),
				out_dir=str(merged['out_dir']),
				gamma=gamma,
				threads=int(merged['threads']),
				window=int(merged['window']),
				t0=None if merged.get('t0') is None else int(merged['t0']),
				phase2=StepsizeSchedule.from_dict(merged['phase2']) if merged.get('phase2') else None,
				tolerances=[float(level) for level in merged['tolerances']],
				record_locals=bool(merged['record_locals']),
				verify_identities=bool(merged['verify_identities']),
				lower_bound_check=lower_bound_settings(merged.get('lower_bound_check') or {}),
				verify=verify_settings(merged.get('verify') or {}),
				replay_dir=None if merged.get('replay_dir') is None else str(merged['replay_dir']),
				source=merged,
			)
		except KeyError as e:
			raise ConfigurationError(f"Champ obligatoire manquant : {e.args[0]}") from e
		except (TypeError, ValueError, AttributeError) as e:
			if isinstance(e, ConfigurationError):
				raise
			raise ConfigurationError(f"Configuration invalide : {e}") from e

	@property
	def hash(self) -> str:
		return config_hash(self.source)

	@property
	def seeds(self) -> list:
		return [
			{'repeat': i, 'sample_seed': repeat_seed(self.seed, i), 'environment_seed': environment_seed(self.seed, i)}
			for i in range(self.num_repeats)
		]


def build_repeat_ensembles(config: ExperimentConfig, spec: EnsembleSpec | None = None, num_agents: int | None = None) -> list:
	spec = spec or config.ensemble
	num_agents = num_agents or config.num_agents
	return [build_ensemble(spec, num_agents, environment_seed(config.seed, i)) for i in range(config.num_repeats)]


def run_repeats(
		config: ExperimentConfig,
		period: int,
		schedule: StepsizeSchedule | list,
		label: str,
		ensembles: list | None = None,
		horizon: int | None = None,
) -> list[RunTrace]:
	"""
	Une trace par répétition. Avec threads > 1, les répétitions tournent en
	parallèle ; une répétition unique répartit plutôt ses agents sur les fils.
	"""
	ensembles = ensembles or build_repeat_ensembles(config)
	schedules = schedule if isinstance(schedule, list) else [schedule] * config.num_repeats
	horizon = config.horizon if horizon is None else horizon
	agent_threads = config.threads if config.num_repeats == 1 else 1

	def run_one(repeat: int) -> RunTrace:
		return run(RunConfig(
			ensemble=ensembles[repeat],
			period=period,
			horizon=horizon,
			schedule=schedules[repeat],
			seed=repeat_seed(config.seed, repeat),
			record_locals=config.record_locals,
			verify_identities=config.verify_identities,
			threads=agent_threads,
			run_id=f"{label}#{repeat}",
		))

	if config.threads > 1 and config.num_repeats > 1:
		with ThreadPoolExecutor(max_workers=config.threads) as pool:
			traces = list(pool.map(run_one, range(config.num_repeats)))
	else:
		traces = [run_one(repeat) for repeat in range(config.num_repeats)]
	log("RUN", label, f"{len(traces)} répétition(s), E={period}, {schedules[0].label}")
	return traces


def plateau_error(errors, fraction: float = PLATEAU_FRACTION) -> float:
	"""Moyenne de l'erreur sur les dernières fraction·(T+1) itérations"""
	errors = np.asarray(errors, dtype=np.float64)
	count = max(1, math.ceil(fraction * errors.size))
	return float(errors[-count:].mean())


def iterations_to_tolerance(errors, level: float) -> int | None:
	"""Première itération où l'erreur passe sous level·‖Δ₀‖∞ ; None si jamais"""
	errors = np.asarray(errors, dtype=np.float64)
	hits = np.flatnonzero(errors <= level * errors[0])
	return int(hits[0]) if hits.size else None


@dataclass
class AggregateSeries:
	label: str
	mean: np.ndarray
	std: np.ndarray
	final_errors: list
	t0s: list
	plateau_errors: list = field(default_factory=list)
	minimum_errors: list = field(default_factory=list)

	def __post_init__(self):
		if self.mean.shape != self.std.shape:
			raise ConfigurationError("Moyenne et écart-type de longueurs différentes")
		if np.any(self.std < 0.0):
			raise ConfigurationError("Écart-type négatif")

	@property
	def horizon(self) -> int:
		return len(self.mean) - 1

	def to_frame(self) -> pd.DataFrame:
		frame = pd.DataFrame({'t': np.arange(self.horizon + 1), 'mean': self.mean, 'std': self.std})
		return frame[AGGREGATE_COLUMNS]

	def summary(self) -> dict:
		return {
			'label': self.label,
			'final_errors': self.final_errors,
			'plateau_errors': self.plateau_errors,
			'minimum_errors': self.minimum_errors,
			't0': self.t0s,
			'mean_plateau': float(np.mean(self.plateau_errors)),
			'std_plateau': float(np.std(self.plateau_errors)),
		}


def aggregate(label: str, traces: list, window: int = SMOOTHING_WINDOW) -> AggregateSeries:
	"""Moyenne et écart-type (ddof = 0) par itération à travers les répétitions"""
	if not traces:
		raise ConfigurationError(f"Aucune trace à agréger pour {label}")
	lengths = {len(get_attr(trace, 'errors')) for trace in traces}
	if len(lengths) != 1:
		raise ConfigurationError(f"Traces de longueurs différentes pour {label} : {sorted(lengths)}")
	stacked = np.stack([trace.errors for trace in traces])
	effective_window = min(window, stacked.shape[1])
	return AggregateSeries(
		label=label,
		mean=stacked.mean(axis=0),
		std=stacked.std(axis=0),
		final_errors=[float(trace.errors[-1]) for trace in traces],
		t0s=[detect_phase_transition(trace, effective_window) for trace in traces],
		plateau_errors=[plateau_error(trace.errors) for trace in traces],
		minimum_errors=[float(smoothed_errors(trace, effective_window).min()) for trace in traces],
	)


ORACLE_TOLERANCE = 1e-10
FLOOR_SLACK = 1e-9


def lower_bound_lambdas(gamma: float, rounds: int, period: int) -> list[float]:
	"""Grille couvrant les deux régimes : λ₀/4, λ₀/2, λ₀ et de grands pas jusqu'à 1/(1+γ)"""
	upper = 1.0 / (1.0 + gamma)
	pivot = lambda0(rounds, gamma, period) if rounds >= 2 else upper / 4.0
	candidates = [pivot / 4.0, pivot / 2.0, pivot, 0.5, 0.6, upper]
	return sorted({min(lam, upper) for lam in candidates if 0.0 < lam <= upper})


def sync_checkpoints(rounds: int, count: int = 20) -> list[int]:
	"""Rondes 0 et r, plus une grille géométrique entre les deux"""
	if rounds < 1:
		return [0]
	return sorted({0, rounds, *np.unique(np.geomspace(1, rounds, count).astype(int)).tolist()})


def simulate_lower_bound(spec: LowerBoundSpec, lambdas, period: int, rounds: int) -> dict[float, RunTrace]:
	"""
	Algorithme synchrone sur l'instance à deux états, vectorisé sur la grille de pas.

	Les noyaux sont des masses de Dirac, donc un pas local est l'application
	affine Q^k ← ((1−λ)I + λγP^k)Q^k + λR, sans aucun tirage.
	"""
	if period < 1 or rounds < 0:
		raise ConfigurationError(f"E={period} doit être ≥ 1 et r={rounds} ≥ 0")
	grid = np.asarray(lambdas, dtype=np.float64)
	if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0.0) or np.any(grid > 1.0):
		raise ConfigurationError(f"Grille de pas invalide : {lambdas}")

	ensemble = make_lower_bound_ensemble(spec)
	gamma, num_agents = ensemble.discount, ensemble.num_agents
	kernels = np.stack([agent.kernel for agent in ensemble.agents])
	scale = grid[:, np.newaxis, np.newaxis, np.newaxis]
	maps = (1.0 - scale) * np.eye(2) + scale * gamma * kernels
	offsets = (grid[:, np.newaxis, np.newaxis] * ensemble.shared_reward[:, 0])[..., np.newaxis]

	# ℓ pas locaux depuis une table commune q : Q^k = (A^k)^ℓ q + c^k_ℓ
	powers = np.empty((grid.size, num_agents, period, 2, 2))
	shifts = np.empty((grid.size, num_agents, period, 2, 1))
	power, shift = np.broadcast_to(np.eye(2), maps.shape), np.zeros(maps.shape[:-1] + (1,))
	for step in range(period):
		power, shift = maps @ power, maps @ shift + offsets
		powers[:, :, step], shifts[:, :, step] = power, shift
	mean_powers, mean_shifts = powers.mean(axis=1), shifts.mean(axis=1)

	horizon = rounds * period
	means = np.zeros((horizon + 1, grid.size, 2))
	current = np.zeros((grid.size, 1, 2, 1))
	for r in range(rounds):
		block = mean_powers @ current + mean_shifts
		means[r * period + 1:(r + 1) * period + 1] = block[..., 0].transpose(1, 0, 2)
		current = block[:, -1:]
	q_star = ensemble.q_star
	errors = np.abs(q_star[:, 0] - means).max(axis=2)

	synced = np.zeros(horizon + 1, dtype=bool)
	synced[period::period] = True
	stepsizes = np.full(horizon + 1, np.nan)
	traces = {}
	for index, lam in enumerate(grid.tolist()):
		stepsizes[:horizon] = lam
		traces[lam] = RunTrace(
			run_id=f"lower-bound γ={gamma:g} E={period} λ={lam:.6g}",
			seed=0,
			period=period,
			discount=gamma,
			errors=np.ascontiguousarray(errors[:, index]),
			stepsizes=stepsizes.copy(),
			synced=synced.copy(),
			q_init=np.zeros((2, 1)),
			q_final=means[-1, index][:, np.newaxis].copy(),
			q_star=q_star,
			metadata={'time_invariant': True, 'num_agents': num_agents},
		)
	return traces


def oracle_checks(spec: LowerBoundSpec, periods, rounds: int, lambdas=None) -> tuple[list, dict]:
	"""Écart simulation / forme fermée aux rondes de synchronisation, et traces simulées par (E, λ)"""
	checks, traces = [], {}
	gamma = spec.discount
	checkpoints = sync_checkpoints(rounds)
	for period in periods:
		grid = lambdas or lower_bound_lambdas(gamma, rounds, period)
		simulated = simulate_lower_bound(spec, grid, period, rounds)
		for lam, trace in simulated.items():
			traces[(period, lam)] = trace
			deviation = 0.0
			for r in checkpoints:
				_, norm = closed_form_delta(r, period, lam, gamma, spec.reward)
				deviation = max(deviation, abs(trace.errors[r * period] - norm))
			delta, _ = closed_form_delta(rounds, period, lam, gamma, spec.reward)
			deviation = max(deviation, float(np.max(np.abs((trace.q_star - trace.q_final)[:, 0] - delta))))
			checks.append(CheckResult(
				"oracle_equivalence",
				{'gamma': gamma, 'E': period, 'lambda': lam, 'rounds': rounds},
				deviation,
				ORACLE_TOLERANCE,
				deviation <= ORACLE_TOLERANCE,
			))
	return checks, traces


def floor_checks(spec: LowerBoundSpec, periods, rounds_list, lambdas=None) -> list:
	"""Erreur simulée ‖Δ_T‖∞ face au plancher E/T et aux planchers par régime"""
	checks = []
	gamma = spec.discount
	for period in periods:
		for rounds in rounds_list:
			horizon = rounds * period
			floor = lower_bound_floor(horizon, period, gamma, spec.reward)
			simulated = simulate_lower_bound(spec, lambdas or lower_bound_lambdas(gamma, rounds, period), period, rounds)
			for lam, trace in simulated.items():
				params = {'gamma': gamma, 'E': period, 'T': horizon, 'lambda': lam}
				measured = float(trace.errors[-1])
				if floor.applicable:
					checks.append(CheckResult("lower_bound_floor", params, measured, floor.value, measured >= floor.value))
				else:
					checks.append(CheckResult("lower_bound_floor", params, measured, None, True, note=floor.reason))
				regimes = regime_floor(rounds, period, lam, gamma, spec.reward)
				checks.append(CheckResult(
					"coefficient_floor", {**params, 'regime': regimes.regime},
					measured, regimes.exact, measured >= regimes.exact * (1.0 - FLOOR_SLACK),
				))
				if regimes.guaranteed is not None:
					checks.append(CheckResult(
						"regime_floor", {**params, 'regime': regimes.regime},
						measured, regimes.guaranteed, measured >= regimes.guaranteed,
					))
	return checks
