"""
Q-learning fédéré synchrone : mises à jour locales, moyenne tous les E pas,
suivi de l'erreur ‖Q* − Q̄_t‖∞ et vérifications à l'exécution.

Q̄_t est la moyenne (virtuelle hors synchronisation) des tables locales à
chaque itération. E = 0 signifie qu'aucune moyenne n'est jamais faite.
"""
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from loguru import logger

from config.settings import SMOOTHING_WINDOW, SYNC_NEVER, TRACE_COLUMNS
from core.errors import ConfigurationError, InvariantViolationError, UnsupportedIdentityError
from core.mdp import Ensemble, QTable, greedy_value, linf_error
from core.reports import BoundViolation, CoarseBoundsReport
from core.sampler import RngStream, SampleDraw, apply_empirical, sample_draw
from core.schedules import StepsizeSchedule, is_time_invariant, stepsize
from utils.data import config_hash
from utils.lib import log

IDENTITY_TOLERANCE = 1e-9
BOUND_SLACK = 1e-9
MAX_DIAGNOSTICS = 100


@dataclass(frozen=True, eq=False)
class RunConfig:
	ensemble: Ensemble
	period: int
	horizon: int
	schedule: StepsizeSchedule
	seed: int
	q_init: np.ndarray | None = None
	record_locals: bool = False
	verify_identities: bool = False
	threads: int = 1
	run_id: str = "run"

	def __post_init__(self):
		if self.period < 0:
			raise ConfigurationError(f"Période E={self.period} négative (0 = jamais de synchronisation)")
		if self.horizon < 0:
			raise ConfigurationError(f"Horizon T={self.horizon} négatif")
		if self.threads < 1:
			raise ConfigurationError(f"threads={self.threads} doit être ≥ 1")
		RngStream(self.seed)

		shape = (self.ensemble.num_states, self.ensemble.num_actions)
		q_init = np.zeros(shape) if self.q_init is None else np.array(self.q_init, dtype=np.float64)
		if q_init.shape != shape:
			raise ConfigurationError(f"q_init de forme {q_init.shape}, attendu {shape}")
		bound = 1.0 / (1.0 - self.ensemble.discount)
		if np.any(q_init < 0.0) or np.any(q_init > bound):
			raise ConfigurationError(f"q_init doit être dans [0, 1/(1−γ)] = [0, {bound:g}]")
		q_init.flags.writeable = False
		object.__setattr__(self, 'q_init', q_init)

	def synchronizes(self, t: int) -> bool:
		"""Vrai si la moyenne est appliquée à la fin de l'itération t"""
		return self.period != SYNC_NEVER and (t + 1) % self.period == 0

	def describe(self) -> dict:
		return {
			'period': self.period,
			'horizon': self.horizon,
			'schedule': self.schedule.to_dict(),
			'seed': self.seed,
			'num_agents': self.ensemble.num_agents,
			'num_states': self.ensemble.num_states,
			'num_actions': self.ensemble.num_actions,
			'gamma': self.ensemble.discount,
			'kappa_inf': self.ensemble.kappa_inf,
			'q_init': self.q_init,
		}


@dataclass(eq=False)
class RunTrace:
	run_id: str
	seed: int
	period: int
	discount: float
	errors: np.ndarray
	stepsizes: np.ndarray
	synced: np.ndarray
	q_init: QTable
	q_final: QTable
	q_star: QTable
	local_errors: np.ndarray | None = None
	local_tables: np.ndarray | None = None
	successors: np.ndarray | None = None
	identity_residuals: np.ndarray | None = None
	bound_violations: list = field(default_factory=list)
	metadata: dict = field(default_factory=dict)

	@property
	def horizon(self) -> int:
		return len(self.errors) - 1

	@property
	def value_bound(self) -> float:
		return 1.0 / (1.0 - self.discount)

	@property
	def time_invariant(self) -> bool:
		return bool(self.metadata.get('time_invariant', False))

	def to_frame(self) -> pd.DataFrame:
		"""Une ligne par itération ; lambda est le pas appliqué à l'itération t (vide à t = T)"""
		frame = pd.DataFrame({
			't': np.arange(self.horizon + 1),
			'linf_error': self.errors,
			'lambda': self.stepsizes,
			'synced': self.synced.astype(int),
			'run_id': self.run_id,
			'seed': str(self.seed),
		})
		return frame[TRACE_COLUMNS]


def local_step(q_k: QTable, draw: SampleDraw, lam: float, reward: np.ndarray, gamma: float) -> QTable:
	"""Q ← (1−λ)Q + λ(R + γ max_a' Q(s'(s,a), a'))"""
	if not 0.0 < lam <= 1.0:
		raise ConfigurationError(f"Pas λ={lam} hors de (0, 1]")
	q_k = np.asarray(q_k, dtype=np.float64)
	if q_k.shape != draw.successors.shape or np.shape(reward) != q_k.shape:
		raise ConfigurationError(f"Formes incompatibles : table {q_k.shape}, tirage {draw.successors.shape}")
	target = reward + gamma * apply_empirical(draw, greedy_value(q_k))
	return (1.0 - lam) * q_k + lam * target


def sync_average(tables) -> QTable:
	"""Moyenne entrée par entrée des K tables locales"""
	stacked = np.stack([np.asarray(table, dtype=np.float64) for table in tables])
	if stacked.shape[0] < 1:
		raise ConfigurationError("Aucune table à moyenner")
	return stacked.mean(axis=0)


def _expected_global(ensemble: Ensemble, v_star: np.ndarray) -> np.ndarray:
	"""P̄V* sur les couples (s, a)"""
	return (ensemble.global_mdp.kernel @ v_star).reshape(ensemble.num_states, ensemble.num_actions)


def _error_increment(p_bar_v: np.ndarray, v_star: np.ndarray, draws, local_values: np.ndarray) -> np.ndarray:
	"""(1/K)Σ_k [(P̄ − P̃^k)V* + P̃^k(V* − V^k)]"""
	terms = []
	for draw, values in zip(draws, local_values):
		sampled_v_star = apply_empirical(draw, v_star)
		terms.append((p_bar_v - sampled_v_star) + (sampled_v_star - apply_empirical(draw, values)))
	return np.mean(terms, axis=0)


def _bound_violations(tables: np.ndarray, t: int, bound: float) -> list:
	slack = BOUND_SLACK * bound
	low = np.argwhere(tables < -slack)
	high = np.argwhere(tables > bound + slack)
	violations = [BoundViolation(t, int(k), int(s), int(a), float(tables[k, s, a]), "lower") for k, s, a in low]
	violations += [BoundViolation(t, int(k), int(s), int(a), float(tables[k, s, a]), "upper") for k, s, a in high]
	return violations


def run(config: RunConfig) -> RunTrace:
	"""Exécute T itérations de l'algorithme synchrone et renvoie la trace complète"""
	started = time.perf_counter()
	ensemble = config.ensemble
	num_agents, num_states, num_actions = ensemble.num_agents, ensemble.num_states, ensemble.num_actions
	gamma, reward = ensemble.discount, ensemble.shared_reward
	horizon = config.horizon
	rng = RngStream(config.seed)
	q_star = ensemble.q_star
	v_star = greedy_value(q_star)
	p_bar_v = _expected_global(ensemble, v_star)
	bound = 1.0 / (1.0 - gamma)

	time_invariant = is_time_invariant(config.schedule, horizon)
	check_identity = config.verify_identities and time_invariant
	if config.verify_identities and not time_invariant:
		logger.warning("{} : pas variable dans le temps, identité d'erreur non vérifiée", config.run_id)

	tables = np.repeat(config.q_init[np.newaxis], num_agents, axis=0)
	errors = np.empty(horizon + 1)
	stepsizes = np.full(horizon + 1, np.nan)
	synced = np.zeros(horizon + 1, dtype=bool)
	local_errors = np.empty((horizon + 1, num_agents)) if config.record_locals else None
	local_tables = np.empty((horizon + 1, num_agents, num_states, num_actions)) if config.record_locals else None
	successors = np.empty((horizon, num_agents, num_states, num_actions), dtype=np.int64) if config.record_locals else None
	residuals = np.empty(horizon) if check_identity else None
	violations = []
	unrolled = q_star - config.q_init

	def record(t: int):
		errors[t] = linf_error(tables.mean(axis=0), q_star)
		if config.record_locals:
			local_tables[t] = tables
			local_errors[t] = np.abs(q_star[np.newaxis] - tables).max(axis=(1, 2))
		if len(violations) < MAX_DIAGNOSTICS:
			violations.extend(_bound_violations(tables, t, bound)[:MAX_DIAGNOSTICS - len(violations)])

	record(0)
	pool = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else None
	try:
		for t in range(horizon):
			lam = stepsize(config.schedule, t, horizon, num_agents, gamma)
			stepsizes[t] = lam

			def agent_step(k: int, t=t, lam=lam):
				draw = sample_draw(ensemble, k, t, rng)
				return draw, local_step(tables[k], draw, lam, reward, gamma)

			outcomes = list(pool.map(agent_step, range(num_agents)) if pool else map(agent_step, range(num_agents)))
			draws = [draw for draw, _ in outcomes]
			updated = np.stack([table for _, table in outcomes])
			if config.record_locals:
				successors[t] = np.stack([draw.successors for draw in draws])
			if check_identity:
				increment = _error_increment(p_bar_v, v_star, draws, tables.max(axis=2))
				unrolled = (1.0 - lam) * unrolled + gamma * lam * increment

			if config.synchronizes(t):
				tables = np.repeat(sync_average(updated)[np.newaxis], num_agents, axis=0)
				synced[t + 1] = True
				logger.debug("{} : synchronisation après l'itération {}", config.run_id, t)
			else:
				tables = updated
			record(t + 1)
			if check_identity:
				residuals[t] = linf_error(q_star - tables.mean(axis=0), unrolled)
	finally:
		if pool is not None:
			pool.shutdown()

	description = config.describe()
	trace = RunTrace(
		run_id=config.run_id,
		seed=config.seed,
		period=config.period,
		discount=gamma,
		errors=errors,
		stepsizes=stepsizes,
		synced=synced,
		q_init=config.q_init,
		q_final=tables.mean(axis=0),
		q_star=q_star,
		local_errors=local_errors,
		local_tables=local_tables,
		successors=successors,
		identity_residuals=residuals,
		bound_violations=violations,
		metadata={
			**description,
			'config_hash': config_hash(description),
			'time_invariant': time_invariant,
			'wall_time': time.perf_counter() - started,
		},
	)
	log("RUN", config.run_id, f"T={horizon}, E={config.period}, erreur finale={errors[-1]:.6g}")

	diagnostics = list(violations)
	if check_identity and horizon > 0:
		worst = float(residuals.max())
		if worst > IDENTITY_TOLERANCE * bound:
			worst_t = int(residuals.argmax())
			diagnostics.append(f"identité d'erreur : résidu {worst:.3e} à t={worst_t}")
	if diagnostics:
		log("VERIFY", config.run_id, f"{len(diagnostics)} violation(s)", success=False)
		if config.verify_identities:
			raise InvariantViolationError(
				f"{config.run_id} : {len(diagnostics)} violation(s) d'invariants", diagnostics, trace=trace
			)
	return trace


def verify_error_iteration(trace: RunTrace, ensemble: Ensemble, t: int) -> float:
	"""
	Résidu ‖lhs − rhs‖∞ de la décomposition déroulée de Δ_{t+1} :
	(1−λ)^{t+1}Δ₀ + γλ Σ_{i≤t} (1−λ)^{t−i} (1/K)Σ_k [(P̄ − P̃_i^k)V* + P̃_i^k(V* − V_i^k)].
	"""
	if trace.local_tables is None or trace.successors is None:
		raise ConfigurationError("La vérification de l'identité exige record_locals")
	if not 0 <= t < trace.horizon:
		raise ConfigurationError(f"Itération {t} hors de [0, {trace.horizon})")
	applied = trace.stepsizes[:trace.horizon]
	if not trace.time_invariant or np.any(applied != applied[0]):
		raise UnsupportedIdentityError("L'identité déroulée suppose un pas constant dans le temps")

	lam, gamma = float(applied[0]), trace.discount
	v_star = greedy_value(trace.q_star)
	p_bar_v = _expected_global(ensemble, v_star)
	rhs = (1.0 - lam) ** (t + 1) * (trace.q_star - trace.q_init)
	for i in range(t + 1):
		draws = [
			SampleDraw(i, k, trace.successors[i, k], ensemble.num_states)
			for k in range(ensemble.num_agents)
		]
		increment = _error_increment(p_bar_v, v_star, draws, trace.local_tables[i].max(axis=2))
		rhs = rhs + gamma * lam * (1.0 - lam) ** (t - i) * increment
	lhs = trace.q_star - trace.local_tables[t + 1].mean(axis=0)
	return linf_error(lhs, rhs)


def verify_coarse_bounds(trace: RunTrace) -> CoarseBoundsReport:
	"""0 ≤ Q_t^k ≤ 1/(1−γ), ‖Δ_t^k‖∞ ≤ 1/(1−γ) et ‖V* − V_t^k‖∞ ≤ 1/(1−γ) pour tout t, k enregistré"""
	bound = trace.value_bound
	if trace.local_tables is None:
		return CoarseBoundsReport(
			passed=not trace.bound_violations,
			checked=trace.horizon + 1,
			bound=bound,
			violations=list(trace.bound_violations),
		)

	slack = BOUND_SLACK * bound
	violations = []
	for t, tables in enumerate(trace.local_tables):
		violations.extend(_bound_violations(tables, t, bound))
		gaps = np.abs(trace.q_star[np.newaxis] - tables)
		value_gaps = np.abs(greedy_value(trace.q_star)[np.newaxis] - tables.max(axis=2))
		for k in range(tables.shape[0]):
			if gaps[k].max() > bound + slack:
				s, a = np.unravel_index(gaps[k].argmax(), gaps[k].shape)
				violations.append(BoundViolation(t, k, int(s), int(a), float(gaps[k].max()), "local_error"))
			if value_gaps[k].max() > bound + slack:
				s = int(value_gaps[k].argmax())
				violations.append(BoundViolation(t, k, s, -1, float(value_gaps[k].max()), "value_gap"))
	return CoarseBoundsReport(
		passed=not violations,
		checked=int(trace.local_tables.shape[0] * trace.local_tables.shape[1]),
		bound=bound,
		violations=violations,
	)


def smoothed_errors(trace, window: int = SMOOTHING_WINDOW) -> np.ndarray:
	"""Moyenne mobile centrée (fenêtre w, bords tronqués) de la série d'erreurs"""
	errors = np.asarray(trace.errors if isinstance(trace, RunTrace) else trace, dtype=np.float64)
	if window < 1:
		raise ConfigurationError(f"Fenêtre {window} doit être ≥ 1")
	if errors.size < window:
		raise ConfigurationError(f"Trace de longueur {errors.size} plus courte que la fenêtre {window}")
	return pd.Series(errors).rolling(window, center=True, min_periods=1).mean().to_numpy()


def detect_phase_transition(trace, window: int = SMOOTHING_WINDOW) -> int:
	"""
	t₀ = argmin de la moyenne mobile centrée (fenêtre w) de l'erreur ; T si la
	série brute ne remonte jamais.
	"""
	errors = np.asarray(trace.errors if isinstance(trace, RunTrace) else trace, dtype=np.float64)
	smoothed = smoothed_errors(errors, window)
	if np.all(np.diff(errors) <= 0.0):
		return errors.size - 1
	return int(np.argmin(smoothed))
