import os
from pathlib import Path

from core.errors import ConfigurationError


class Validator:
	"""Contrôles d'une configuration d'expérience avant toute exécution"""

	@classmethod
	def validate(cls, config):
		cls.validate_output_dir(config.out_dir)
		cls.validate_repeats(config.num_repeats)
		cls.validate_periods(config.periods)
		cls.validate_schedules(config)
		cls.validate_tolerances(config.tolerances)
		if config.window < 1:
			raise ConfigurationError(f"Fenêtre de lissage {config.window} doit être ≥ 1")
		if config.ensemble.kind == "lower_bound" and config.kind not in ("lower_bound_check", "verify_all"):
			if config.ensemble.lower_bound.num_agents % 2:
				raise ConfigurationError("L'instance à deux états exige un nombre pair d'agents")
		if config.kind in ("lower_bound_check", "verify_all"):
			cls.validate_lower_bound_check(config.lower_bound_check)
		if config.kind == "verify_all":
			cls.validate_verify(config.verify)
		if config.replay_dir is not None:
			cls.validate_replay_dir(config.replay_dir, config.num_repeats)
		return True

	@staticmethod
	def validate_replay_dir(replay_dir: str, num_repeats: int) -> bool:
		"""Les ensembles rejoués viennent d'un run précédent : ensembles/repeat_{i}.json pour chaque répétition"""
		missing = [
			repeat for repeat in range(num_repeats)
			if not (Path(replay_dir) / f"ensembles/repeat_{repeat}.json").is_file()
		]
		if missing:
			raise ConfigurationError(f"Ensembles à rejouer absents de {replay_dir} pour les répétitions {missing}")
		return True

	@staticmethod
	def validate_repeats(num_repeats: int) -> bool:
		if num_repeats < 1:
			raise ConfigurationError(f"num_repeats={num_repeats} doit être ≥ 1")
		return True

	@staticmethod
	def validate_output_dir(out_dir: str) -> bool:
		directory = Path(out_dir)
		while not directory.exists():
			if directory.parent == directory:
				break
			directory = directory.parent
		if not directory.is_dir() or not os.access(directory, os.W_OK):
			raise ConfigurationError(f"Dossier de sortie non accessible en écriture : {out_dir}")
		return True

	@staticmethod
	def validate_periods(periods) -> bool:
		for period in periods:
			if period < 0:
				raise ConfigurationError(f"Période E={period} invalide (0 = jamais de synchronisation)")
		return True

	@staticmethod
	def validate_schedules(config) -> bool:
		for schedule in config.schedules:
			if schedule.kind == "two_phase" and schedule.t0 is None and config.kind != "two_phase":
				raise ConfigurationError(f"{schedule.label} : t0 doit être fixé hors de l'expérience two_phase")
		if config.kind == "two_phase":
			if config.phase2 is None:
				raise ConfigurationError("L'expérience two_phase exige un pas de phase 2")
			if any(schedule.kind != "constant" for schedule in config.schedules):
				raise ConfigurationError("Les pas de phase 1 d'une expérience two_phase doivent être constants")
		return True

	@staticmethod
	def validate_tolerances(tolerances) -> bool:
		for level in tolerances:
			if not 0.0 < level < 1.0:
				raise ConfigurationError(f"Tolérance {level} hors de (0, 1)")
		return True

	@staticmethod
	def validate_lower_bound_check(settings: dict) -> bool:
		for gamma in [*settings['gammas'], settings['floor_gamma']]:
			if not 0.0 < gamma < 1.0:
				raise ConfigurationError(f"γ={gamma} hors de (0, 1) pour l'instance à deux états")
		if settings['rounds'] < 1:
			raise ConfigurationError(f"rounds={settings['rounds']} doit être ≥ 1")
		for period in [*settings['periods'], *settings['floor_periods']]:
			if period < 1:
				raise ConfigurationError(f"Période E={period} invalide pour l'instance à deux états (≥ 1)")
		for rounds in settings['floor_rounds']:
			if rounds < 2:
				raise ConfigurationError(f"floor_rounds contient r={rounds} : les planchers exigent r ≥ 2")
		return True

	@staticmethod
	def validate_verify(settings: dict) -> bool:
		if settings['num_runs'] < 0:
			raise ConfigurationError(f"num_runs={settings['num_runs']} négatif")
		if not settings['lambdas'] or any(not 0.0 < lam <= 1.0 for lam in settings['lambdas']):
			raise ConfigurationError(f"Pas de vérification invalides : {settings['lambdas']}")
		return True
