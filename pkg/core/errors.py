"""Exceptions du laboratoire"""


class FedQError(Exception):
	"""Erreur de base du laboratoire"""

	def details(self) -> dict:
		return {}


class ConfigurationError(FedQError, ValueError):
	"""Paramètre, forme ou document de configuration invalide"""


class BoundPreconditionError(ConfigurationError):
	def __init__(self, hypothesis: str, message: str):
		super().__init__(message)
		self.hypothesis = hypothesis

	def details(self) -> dict:
		return {'hypothesis': self.hypothesis}


class DomainError(FedQError, ValueError):
	"""Argument hors du domaine d'une formule fermée"""


class NumericalError(FedQError, ArithmeticError):
	def __init__(self, message: str, residual: float):
		super().__init__(message)
		self.residual = residual

	def details(self) -> dict:
		return {'residual': self.residual}


class UnsupportedIdentityError(FedQError):
	"""Identité vérifiée hors de ses hypothèses (pas variable dans le temps)"""


class InvariantViolationError(FedQError):
	def __init__(self, message: str, diagnostics: list, trace=None):
		super().__init__(message)
		self.diagnostics = diagnostics
		self.trace = trace

	def details(self) -> dict:
		return {'diagnostics': [str(d) for d in self.diagnostics[:20]]}


class SelfTestError(FedQError, AssertionError):
	"""Deux évaluations indépendantes d'une même quantité divergent"""
