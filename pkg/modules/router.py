import importlib

from config.settings import EXPERIMENT_MODULES
from core.errors import ConfigurationError


class Router:
	experiments = None

	@classmethod
	def load_routes(cls):
		if cls.experiments is not None:
			return cls.experiments
		cls.experiments = {
			kind: importlib.import_module(f'experiments.{module}').Experiment
			for kind, module in EXPERIMENT_MODULES.items()
		}
		return cls.experiments

	@classmethod
	def resolve(cls, kind: str):
		experiment = cls.load_routes().get(kind)
		if experiment is None:
			raise ConfigurationError(f"Aucune expérience pour le type {kind}")
		return experiment

	@classmethod
	def run(cls, config) -> dict:
		return cls.resolve(config.kind).run(config)
