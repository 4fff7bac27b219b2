"""Enregistrements des vérifications"""
from dataclasses import dataclass, field

from storage.base import Record


@dataclass
class CheckResult(Record):
	__artifact_name__ = "check"

	name: str
	params: dict
	measured: float | None
	bound: float | None
	passed: bool
	note: str = ""


@dataclass
class BoundViolation(Record):
	"""Position (t, k, s, a) d'une table locale sortie de [0, 1/(1−γ)]"""
	__artifact_name__ = "violation"

	t: int
	k: int
	s: int
	a: int
	value: float
	check: str

	def __str__(self):
		return f"{self.check} à (t={self.t}, k={self.k}, s={self.s}, a={self.a}) : {self.value:.6g}"


@dataclass
class CoarseBoundsReport(Record):
	__artifact_name__ = "coarse_bounds"

	passed: bool
	checked: int
	bound: float
	violations: list = field(default_factory=list)


@dataclass
class VerificationReport(Record):
	__artifact_name__ = "verification"

	version: str
	config_hash: str
	seed: int
	checks: list = field(default_factory=list)

	@property
	def passed(self) -> bool:
		return all(check.passed for check in self.checks)

	@property
	def failures(self) -> list:
		return [check for check in self.checks if not check.passed]

	def extend(self, checks):
		self.checks.extend(checks)

	def to_dict(self):
		document = super().to_dict()
		document['passed'] = self.passed
		document['num_checks'] = len(self.checks)
		document['num_failures'] = len(self.failures)
		return document
