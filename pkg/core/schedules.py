"""
Pas d'apprentissage et évaluateurs des bornes supérieures.

Logarithmes naturels partout. Les évaluateurs sont des diagnostics : une
hypothèse non satisfaite est signalée, jamais corrigée en silence.
"""
import math
from dataclasses import dataclass
from typing import Literal

from core.errors import BoundPreconditionError, ConfigurationError

ScheduleKind = Literal["constant", "poly", "corollary", "two_phase"]
SCHEDULE_KINDS = ("constant", "poly", "corollary", "two_phase")

DEFAULT_PHASE2 = {"kind": "poly", "alpha": 0.5}


@dataclass(frozen=True)
class StepsizeSchedule:
	kind: ScheduleKind
	value: float | None = None
	alpha: float | None = None
	lambda1: float | None = None
	t0: int | None = None
	phase2: 'StepsizeSchedule | None' = None

	def __post_init__(self):
		if self.kind not in SCHEDULE_KINDS:
			raise ConfigurationError(f"Type de pas inconnu : {self.kind}")
		if self.kind == "constant" and not (self.value is not None and 0.0 < self.value <= 1.0):
			raise ConfigurationError(f"Pas constant {self.value} hors de (0, 1]")
		if self.kind == "poly" and not (self.alpha is not None and self.alpha >= 0.0):
			raise ConfigurationError(f"Exposant {self.alpha} invalide pour λ = 1/T^α")
		if self.kind == "two_phase":
			if not (self.lambda1 is not None and 0.0 < self.lambda1 <= 1.0):
				raise ConfigurationError(f"Pas de phase 1 {self.lambda1} hors de (0, 1]")
			if self.t0 is not None and self.t0 < 0:
				raise ConfigurationError(f"t0={self.t0} négatif")
			if self.phase2 is None or self.phase2.kind == "two_phase":
				raise ConfigurationError("La phase 2 doit être un pas constant, polynomial ou du corollaire")

	@classmethod
	def from_dict(cls, document: dict) -> 'StepsizeSchedule':
		if not isinstance(document, dict) or 'kind' not in document:
			raise ConfigurationError(f"Pas d'apprentissage sans type : {document!r}")
		kind = document['kind']
		allowed = {
			"constant": {"kind", "value"},
			"poly": {"kind", "alpha"},
			"corollary": {"kind"},
			"two_phase": {"kind", "lambda1", "t0", "phase2"},
		}.get(kind)
		if allowed is None:
			raise ConfigurationError(f"Type de pas inconnu : {kind}")
		unknown = set(document) - allowed
		if unknown:
			raise ConfigurationError(f"Champs inconnus pour le pas {kind} : {sorted(unknown)}")
		if kind == "two_phase":
			t0 = document.get('t0')
			return cls(
				kind=kind,
				lambda1=document.get('lambda1'),
				t0=None if t0 is None else int(t0),
				phase2=cls.from_dict(document.get('phase2') or DEFAULT_PHASE2),
			)
		return cls(kind=kind, value=document.get('value'), alpha=document.get('alpha'))

	def to_dict(self) -> dict:
		if self.kind == "constant":
			return {"kind": self.kind, "value": self.value}
		if self.kind == "poly":
			return {"kind": self.kind, "alpha": self.alpha}
		if self.kind == "corollary":
			return {"kind": self.kind}
		return {"kind": self.kind, "lambda1": self.lambda1, "t0": self.t0, "phase2": self.phase2.to_dict()}

	def with_t0(self, t0: int) -> 'StepsizeSchedule':
		return StepsizeSchedule(kind=self.kind, lambda1=self.lambda1, t0=int(t0), phase2=self.phase2)

	@property
	def label(self) -> str:
		if self.kind == "constant":
			return f"λ={self.value:g}"
		if self.kind == "poly":
			return f"λ=1/T^{self.alpha:g}"
		if self.kind == "corollary":
			return "λ=4log²(TK)/((1−γ)T)"
		return f"λ1={self.lambda1:g}, t0={self.t0}, puis {self.phase2.label}"


def corollary_stepsize(T: int, K: int, gamma: float) -> float:
	"""4·log²(TK)/((1−γ)T) ramené dans (0, 1]"""
	if T < 1 or K < 1:
		raise ConfigurationError(f"T={T} et K={K} doivent être ≥ 1")
	value = 4.0 * math.log(T * K) ** 2 / ((1.0 - gamma) * T)
	if value <= 0.0:
		raise ConfigurationError(f"Pas du corollaire nul pour T·K={T * K}")
	return min(value, 1.0)


def stepsize(schedule: StepsizeSchedule, t: int, T: int, K: int, gamma: float) -> float:
	"""λ_t pour l'itération t < T"""
	if not 0 <= t < T:
		raise ConfigurationError(f"Itération {t} hors de [0, {T})")
	if schedule.kind == "constant":
		value = schedule.value
	elif schedule.kind == "poly":
		value = T ** (-schedule.alpha)
	elif schedule.kind == "corollary":
		value = corollary_stepsize(T, K, gamma)
	else:
		if schedule.t0 is None:
			raise ConfigurationError("t0 doit être fixé (ou détecté) avant d'évaluer un pas à deux phases")
		value = schedule.lambda1 if t < schedule.t0 else stepsize(schedule.phase2, t, T, K, gamma)
	if not 0.0 < value <= 1.0:
		raise ConfigurationError(f"Pas λ_{t}={value} hors de (0, 1] pour {schedule.label}")
	return float(value)


def is_time_invariant(schedule: StepsizeSchedule, T: int) -> bool:
	if schedule.kind != "two_phase":
		return True
	return schedule.t0 is not None and (schedule.t0 <= 0 or schedule.t0 >= T)


def check_theorem1_stepsizes(schedule: StepsizeSchedule, E: int, T: int, K: int, gamma: float) -> list[str]:
	"""Hypothèses λ_t ≤ 1/E et (E−1) ≤ (1−γ)/(4γλ_t) non satisfaites (liste vide si conforme)"""
	if E < 1:
		return ["period: E = ∞ (aucune synchronisation) n'est pas couvert"]
	failures = []
	values = {stepsize(schedule, t, T, K, gamma) for t in _change_points(schedule, T)}
	for value in sorted(values):
		if value > 1.0 / E:
			failures.append(f"stepsize_period: λ={value:g} > 1/E={1.0 / E:g}")
		if gamma > 0.0 and E - 1 > (1.0 - gamma) / (4.0 * gamma * value):
			failures.append(f"period_drift: E−1={E - 1} > (1−γ)/(4γλ)={(1.0 - gamma) / (4.0 * gamma * value):g}")
	return failures


def _change_points(schedule: StepsizeSchedule, T: int) -> list[int]:
	if T < 1:
		return []
	if schedule.kind == "two_phase" and schedule.t0 is not None and 0 < schedule.t0 < T:
		return [0, schedule.t0]
	return [0]


@dataclass(frozen=True)
class BoundParams:
	gamma: float
	lam: float
	period: int
	num_agents: int
	horizon: int
	kappa: float
	delta: float
	num_states: int
	num_actions: int

	@property
	def log_term(self) -> float:
		"""log(|S||A|KT/δ)"""
		return math.log(self.num_states * self.num_actions * self.num_agents * self.horizon / self.delta)


def _check_common(p: BoundParams):
	if not 0.0 < p.gamma < 1.0:
		raise BoundPreconditionError("gamma", f"γ={p.gamma} hors de (0, 1)")
	if not 0.0 < p.delta < 1.0 / 3.0:
		raise BoundPreconditionError("delta", f"δ={p.delta} hors de (0, 1/3)")
	if p.period < 1:
		raise BoundPreconditionError("period", f"E={p.period} : la borne suppose des synchronisations (E ≥ 1)")
	if p.num_agents < 1 or p.horizon < 1:
		raise BoundPreconditionError("size", f"K={p.num_agents} et T={p.horizon} doivent être ≥ 1")
	if p.kappa < 0.0:
		raise BoundPreconditionError("kappa", f"κ={p.kappa} négatif")


def theorem1_terms(p: BoundParams) -> dict:
	"""Les quatre termes de la borne de convergence, dans l'ordre d'affichage"""
	_check_common(p)
	if not 0.0 < p.lam <= 1.0:
		raise BoundPreconditionError("stepsize", f"λ={p.lam} hors de (0, 1]")
	if p.lam > 1.0 / p.period:
		raise BoundPreconditionError("stepsize_period", f"λ={p.lam} > 1/E={1.0 / p.period}")
	drift_cap = (1.0 - p.gamma) / (4.0 * p.gamma * p.lam)
	if p.period - 1 > drift_cap:
		raise BoundPreconditionError("period_drift", f"E−1={p.period - 1} > (1−γ)/(4γλ)={drift_cap:g}")

	g, lam, e1 = p.gamma, p.lam, p.period - 1
	scale = 1.0 / (1.0 - g) ** 2
	return {
		'optimization': 4.0 * scale * math.exp(-0.5 * math.sqrt((1.0 - g) * lam * p.horizon)),
		'heterogeneity': 2.0 * g ** 2 * scale * (6.0 * lam ** 2 * e1 ** 2 + lam * e1) * p.kappa,
		'local_sampling': (
			(12.0 * g ** 2 * lam * scale * math.sqrt(e1) + 2.0 * g ** 2 * math.sqrt(lam) * scale)
			* math.sqrt(lam * e1 * p.log_term)
		),
		'global_sampling': 2.0 * g * scale * math.sqrt(lam * p.log_term / p.num_agents),
	}


def theorem1_bound(p: BoundParams) -> float:
	return math.fsum(theorem1_terms(p).values())


def corollary1_terms(p: BoundParams) -> dict:
	"""Les trois termes de la borne avec λ = 4log²(TK)/(T(1−γ)) ; p.lam est ignoré"""
	_check_common(p)
	g, T, K = p.gamma, p.horizon, p.num_agents
	if T < p.period:
		raise BoundPreconditionError("horizon", f"T={T} < E={p.period}")
	lam = 4.0 * math.log(T * K) ** 2 / (T * (1.0 - g))
	if lam <= 0.0:
		raise BoundPreconditionError("stepsize", f"λ nul pour T·K={T * K}")
	cap = min(g / (1.0 - g), 1.0 / K) / lam
	if p.period - 1 > cap:
		raise BoundPreconditionError("period_drift", f"E−1={p.period - 1} > min{{γ/(1−γ), 1/K}}/λ={cap:g}")

	tk = T * K
	return {
		'optimization': 4.0 / ((1.0 - g) ** 2 * tk),
		'sampling': 36.0 / (1.0 - g) ** 3 * math.log(tk) / math.sqrt(tk) * math.sqrt(p.log_term),
		'heterogeneity': 56.0 * math.log(tk) ** 2 / (1.0 - g) ** 3 * (p.period - 1) / T * p.kappa,
	}


def corollary1_bound(p: BoundParams) -> float:
	return math.fsum(corollary1_terms(p).values())
