"""
Machinerie exacte de l'instance à deux états : coefficients propres, κ_E,
erreur fermée Δ_rE, seuil d'horizon par Lambert W₋₁ et planchers de l'erreur.

Sur cette instance P̄ = ½·𝟙𝟙ᵀ ; P̄ et I − P̄ sont les projecteurs orthogonaux
sur les directions (1, 1) et (1, −1).
"""
import math
from dataclasses import dataclass

import numpy as np

from core.envs import LowerBoundSpec, make_lower_bound_ensemble
from core.errors import ConfigurationError, DomainError, NumericalError, SelfTestError
from core.mdp import Ensemble, TabularMDP, optimal_q
from core.reports import CheckResult
from storage.base import Record

KAPPA_SELF_TEST_TOLERANCE = 1e-12
LAMBERT_TOLERANCE = 1e-12
MAX_ROUNDS = 10 ** 7
FSUM_ROUNDS = 10 ** 5
HORIZON_OVERFLOW = 2.0 ** 53

GLOBAL_TWO_STATE_KERNEL = np.full((2, 2), 0.5)
INV_E = math.exp(-1.0)


@dataclass(frozen=True)
class LBCoefficients:
	lam: float
	gamma: float
	period: int
	nu1: float
	nu2: float
	alpha: float
	beta: float
	kappa: float
	one_minus_alpha: float
	rounds: int | None = None
	lambda0: float | None = None

	@property
	def kappa_ratio(self) -> float:
		"""κ_E/(1 − α_E)"""
		return self.kappa / self.one_minus_alpha


def _one_minus_power(rate: float, exponent: int) -> float:
	"""1 − (1 − rate)^n sans annulation"""
	if rate >= 1.0:
		return 1.0
	return -math.expm1(exponent * math.log1p(-rate))


def lambda0(rounds: int, gamma: float, period: int) -> float:
	"""Pas pivot log r/((1−γ)rE) séparant les deux régimes"""
	if rounds < 1:
		raise DomainError(f"Nombre de rondes r={rounds} doit être ≥ 1")
	return math.log(rounds) / ((1.0 - gamma) * rounds * period)


def coefficients(lam: float, gamma: float, period: int, rounds: int | None = None) -> LBCoefficients:
	"""ν₁, ν₂, α_E, β_E et κ_E, κ_E évalué par sa forme fermée puis recoupé par sa somme finie"""
	if not 0.0 <= gamma < 1.0:
		raise DomainError(f"γ={gamma} hors de [0, 1)")
	if period < 1:
		raise DomainError(f"E={period} doit être ≥ 1")
	upper = 1.0 / (1.0 + gamma)
	if not 0.0 < lam <= upper * (1.0 + 1e-15):
		raise DomainError(f"λ={lam} hors de (0, 1/(1+γ)] = (0, {upper:g}]")

	nu1 = max(1.0 - (1.0 + gamma) * lam, 0.0)
	nu2 = 1.0 - (1.0 - gamma) * lam
	one_minus_nu1 = _one_minus_power((1.0 + gamma) * lam, period)
	one_minus_nu2 = _one_minus_power((1.0 - gamma) * lam, period)

	closed = -0.5 * gamma * (one_minus_nu2 / (1.0 - gamma) - one_minus_nu1 / (1.0 + gamma))
	gaps, p1, p2 = [], 1.0, 1.0
	for _ in range(1, period):
		p1 *= nu1
		p2 *= nu2
		gaps.append(p2 - p1)
	summed = -0.5 * lam * gamma * math.fsum(gaps)
	if abs(closed - summed) > KAPPA_SELF_TEST_TOLERANCE * max(1.0, abs(summed)):
		raise SelfTestError(
			f"κ_E incohérent pour λ={lam}, γ={gamma}, E={period} : forme fermée {closed!r}, somme {summed!r}"
		)

	return LBCoefficients(
		lam=lam,
		gamma=gamma,
		period=period,
		nu1=nu1,
		nu2=nu2,
		alpha=0.5 * (nu1 ** period + nu2 ** period),
		beta=nu2 ** period,
		kappa=summed,
		one_minus_alpha=0.5 * (one_minus_nu1 + one_minus_nu2),
		rounds=rounds,
		lambda0=None if rounds is None else lambda0(rounds, gamma, period),
	)


def geometric_factor(alpha: float, one_minus_alpha: float, rounds: int) -> float:
	"""(1 − α^r)/(1 − α) = Σ_{ℓ<r} α^ℓ"""
	if rounds == 0:
		return 0.0
	if one_minus_alpha == 0.0:
		return float(rounds)
	if rounds <= FSUM_ROUNDS:
		powers = np.cumprod(np.full(rounds - 1, alpha))
		return math.fsum([1.0, *powers.tolist()])
	return -math.expm1(rounds * math.log1p(-one_minus_alpha)) / one_minus_alpha


def two_state_q_star(gamma: float, reward) -> np.ndarray:
	"""Q* du MDP global à deux états, une action"""
	mdp = TabularMDP(2, 1, GLOBAL_TWO_STATE_KERNEL, reward, gamma)
	return optimal_q(mdp)[:, 0]


def round_coefficient(coefs: LBCoefficients, rounds: int) -> float:
	"""α_E^r + (1 − α_E^r)κ_E/(1 − α_E), facteur de la composante (I − P̄)Q*"""
	return coefs.alpha ** rounds + geometric_factor(coefs.alpha, coefs.one_minus_alpha, rounds) * coefs.kappa


def closed_form_delta(rounds: int, period: int, lam: float, gamma: float, reward) -> tuple[np.ndarray, float]:
	"""Δ_rE = β_E^r P̄Q* + (α_E^r + (1−α_E^r)κ_E/(1−α_E))(I − P̄)Q* depuis Q₀ = 0, et sa norme ℓ∞"""
	if rounds < 0:
		raise DomainError(f"Nombre de rondes r={rounds} négatif")
	if rounds > MAX_ROUNDS:
		raise DomainError(f"r={rounds} au-delà du plafond {MAX_ROUNDS}")
	coefs = coefficients(lam, gamma, period)
	q_star = two_state_q_star(gamma, reward)
	along_mean = GLOBAL_TWO_STATE_KERNEL @ q_star
	along_gap = q_star - along_mean
	delta = coefs.beta ** rounds * along_mean + round_coefficient(coefs, rounds) * along_gap
	return delta, float(np.max(np.abs(delta)))


def lambert_w_minus1(x: float) -> float:
	"""Branche w ≤ −1 de w·e^w = x, x ∈ [−1/e, 0) : bissection sur un encadrement puis Newton"""
	if not -INV_E - 1e-15 <= x < 0.0:
		raise DomainError(f"x={x} hors de [−1/e, 0)")
	if x <= -INV_E * (1.0 - 1e-15):
		return -1.0

	def residual(w):
		return w * math.exp(w) - x

	# w·e^w décroît de 0⁻ vers −1/e sur (−∞, −1]
	low, high = -50.0, -1.0
	while residual(low) < 0.0:
		low *= 2.0
	for _ in range(200):
		middle = 0.5 * (low + high)
		if middle in (low, high):
			break
		if residual(middle) > 0.0:
			low = middle
		else:
			high = middle
	w = 0.5 * (low + high)

	for _ in range(50):
		slope = math.exp(w) * (1.0 + w)
		if slope == 0.0:
			break
		step = residual(w) / slope
		candidate = w - step
		if not low <= candidate <= high:
			break
		w = candidate
		if abs(step) <= 1e-16 * abs(w):
			break

	error = abs(residual(w))
	if error > LAMBERT_TOLERANCE * abs(x):
		raise NumericalError(f"W₋₁({x}) non résolu : résidu {error:.3e}", residual=error)
	return w


def horizon_argument(gamma: float) -> float:
	return -(1.0 - gamma) / (2.0 * (1.0 + gamma))


def horizon_factor(gamma: float) -> float:
	"""exp(−W₋₁(−(1−γ)/(2(1+γ))))"""
	if not 0.0 < gamma < 1.0:
		raise DomainError(f"γ={gamma} hors de (0, 1)")
	argument = horizon_argument(gamma)
	if argument < -INV_E:
		raise DomainError(
			f"γ={gamma} donne un argument {argument:.6f} < −1/e : seuil d'horizon non défini"
		)
	return math.exp(-lambert_w_minus1(argument))


def min_horizon(period: int, gamma: float) -> float:
	"""Plus petit multiple de E au-dessus du seuil ; math.inf quand le facteur déborde"""
	if period < 1:
		raise DomainError(f"E={period} doit être ≥ 1")
	factor = horizon_factor(gamma)
	if factor > HORIZON_OVERFLOW:
		return math.inf
	return period * math.ceil(factor)


def verify_kappa_properties(gamma: float, period: int, lambdas) -> list[CheckResult]:
	"""Négativité, décroissance, borne supérieure et borne inférieure de κ_E/(1 − α_E) sur une grille de λ"""
	grid = sorted(float(lam) for lam in lambdas)
	upper = 1.0 / (1.0 + gamma)
	for lam in grid:
		if not 0.0 < lam <= upper:
			raise DomainError(f"λ={lam} hors de (0, 1/(1+γ)]")

	checks = []
	ratios = []
	ceiling = gamma ** 2 / (1.0 - gamma ** 2)
	for lam in grid:
		coefs = coefficients(lam, gamma, period)
		ratio = coefs.kappa_ratio
		ratios.append(ratio)
		params = {'gamma': gamma, 'E': period, 'lambda': lam}
		if period >= 2:
			checks.append(CheckResult("kappa_negativity", params, coefs.kappa, 0.0, coefs.kappa < 0.0))
		checks.append(CheckResult("kappa_ratio_upper", params, abs(ratio), ceiling, abs(ratio) <= ceiling))
		if (1.0 + gamma) * lam <= 1.0 / (2.0 * period):
			floor = lam * gamma ** 2 * (period - 1) / 4.0
			checks.append(CheckResult("kappa_ratio_lower", params, abs(ratio), floor, abs(ratio) >= floor))
	for (lam, ratio), (next_lam, next_ratio) in zip(zip(grid, ratios), zip(grid[1:], ratios[1:])):
		checks.append(CheckResult(
			"kappa_ratio_monotone",
			{'gamma': gamma, 'E': period, 'lambda': lam, 'next_lambda': next_lam},
			next_ratio,
			ratio,
			next_ratio <= ratio,
		))
	return checks


def reward_constant(gamma: float, reward) -> float:
	"""c_R = min{‖(I − P̄)Q*‖₂, ‖P̄Q*‖₂}, refusé pour une récompense hors position générale"""
	q_star = two_state_q_star(gamma, reward)
	along_mean = GLOBAL_TWO_STATE_KERNEL @ q_star
	c_r = min(float(np.linalg.norm(q_star - along_mean)), float(np.linalg.norm(along_mean)))
	if c_r == 0.0:
		raise DomainError(f"Récompense {tuple(reward)} pas en position générale : plancher vide")
	return c_r


@dataclass
class LowerBoundFloor(Record):
	__artifact_name__ = "lower_bound_floor"

	horizon: int
	period: int
	gamma: float
	value: float | None
	c_r: float | None
	applicable: bool
	reason: str = ""
	min_horizon: float | None = None


def lower_bound_floor(T: int, period: int, gamma: float, reward) -> LowerBoundFloor:
	"""(c_R/√2)·E/((1−γ)T), ou la raison de son inapplicabilité"""
	def inapplicable(reason, threshold=None, c_r=None):
		return LowerBoundFloor(T, period, gamma, None, c_r, False, reason, threshold)

	if period < 1 or T < 1:
		return inapplicable(f"T={T} et E={period} doivent être ≥ 1")
	if T % period:
		return inapplicable(f"T={T} n'est pas un multiple de E={period}")
	try:
		c_r = reward_constant(gamma, reward)
		threshold = min_horizon(period, gamma)
	except DomainError as e:
		return inapplicable(str(e))
	if T < threshold:
		return inapplicable(f"T={T} sous le seuil d'horizon {threshold}", threshold, c_r)
	value = c_r / math.sqrt(2.0) * period / ((1.0 - gamma) * T)
	return LowerBoundFloor(T, period, gamma, value, c_r, True, "", threshold)


@dataclass
class RegimeFloor(Record):
	"""Planchers prouvés par régime de pas et plancher exact issu des coefficients"""
	__artifact_name__ = "regime_floor"

	rounds: int
	period: int
	lam: float
	gamma: float
	lambda0: float
	regime: str
	guaranteed: float | None
	exact: float
	c_r: float


def regime_floor(rounds: int, period: int, lam: float, gamma: float, reward) -> RegimeFloor:
	"""
	λ ≤ λ₀ : β_E^r ≥ 1/(e·r), d'où (c_R/√2)/(e·r).
	λ ≥ λ₀ avec (1+γ)λ₀ ≤ 1/(2E) : (c_R/√2)·(γ² log r (E−1) − 4E/(1+γ))/(4E(1−γ)r).
	exact = (c_R/√2)·max{|α_E^r + (1−α_E^r)κ_E/(1−α_E)|, β_E^r}, valable pour tout λ admissible.
	"""
	if rounds < 2:
		raise DomainError(f"r={rounds} : les régimes exigent r ≥ 2")
	c_r = reward_constant(gamma, reward)
	scale = c_r / math.sqrt(2.0)
	pivot = lambda0(rounds, gamma, period)
	coefs = coefficients(lam, gamma, period)
	exact = scale * max(abs(round_coefficient(coefs, rounds)), coefs.beta ** rounds)

	if lam <= pivot:
		regime, guaranteed = "small", scale / (math.e * rounds)
	else:
		regime = "large"
		guaranteed = None
		if (1.0 + gamma) * pivot <= 1.0 / (2.0 * period):
			numerator = gamma ** 2 * math.log(rounds) * (period - 1) - 4.0 * period / (1.0 + gamma)
			guaranteed = scale * numerator / (4.0 * period * (1.0 - gamma) * rounds)
	return RegimeFloor(rounds, period, lam, gamma, pivot, regime, guaranteed, exact, c_r)


def sync_round_operators(ensemble: Ensemble, lam: float, period: int) -> tuple[np.ndarray, np.ndarray]:
	"""
	Pour |A| = 1 : Δ_{(r+1)E} = Ā^{(E)}Δ_{rE} + M·Q*, avec A^k = (1−λ)I + λγP^k,
	Ā^{(ℓ)} = (1/K)Σ_k (A^k)^ℓ et M = (I − Ā^{(E)}) − (Σ_{ℓ<E} Ā^{(ℓ)})(I − Ā^{(1)}).
	"""
	if ensemble.num_actions != 1:
		raise ConfigurationError("La récurrence matricielle ne couvre que |A| = 1")
	if period < 1:
		raise ConfigurationError(f"E={period} doit être ≥ 1")
	if not 0.0 < lam <= 1.0:
		raise ConfigurationError(f"λ={lam} hors de (0, 1]")
	size = ensemble.num_states
	identity = np.eye(size)
	local_maps = [(1.0 - lam) * identity + lam * ensemble.discount * agent.kernel for agent in ensemble.agents]
	powers = [identity.copy() for _ in local_maps]
	averaged = []
	for _ in range(period + 1):
		averaged.append(np.mean(powers, axis=0))
		powers = [power @ local for power, local in zip(powers, local_maps)]
	partial = np.sum(averaged[:period], axis=0)
	residual = (identity - averaged[period]) - partial @ (identity - averaged[1])
	return averaged[period], residual


def propagate_sync_rounds(ensemble: Ensemble, lam: float, period: int, rounds: int, delta0=None) -> np.ndarray:
	"""Δ_{rE} pour r = 0..rounds (Δ₀ = Q* par défaut, soit Q₀ = 0)"""
	transition, residual = sync_round_operators(ensemble, lam, period)
	q_star = ensemble.q_star[:, 0]
	delta = q_star.copy() if delta0 is None else np.asarray(delta0, dtype=np.float64)
	offset = residual @ q_star
	deltas = [delta]
	for _ in range(rounds):
		delta = transition @ delta + offset
		deltas.append(delta)
	return np.array(deltas)


def lower_bound_ensemble(gamma: float, reward=(1.0, 0.0), num_agents: int = 2) -> Ensemble:
	return make_lower_bound_ensemble(LowerBoundSpec(num_agents=num_agents, reward=tuple(reward), discount=gamma))
