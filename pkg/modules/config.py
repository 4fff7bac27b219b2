import os
from pathlib import Path

from yaml import YAMLError, dump, load, SafeLoader

from config.settings import PROFILES
from core.errors import ConfigurationError
from core.harness import ExperimentConfig
from utils.data import deep_merge
from utils.lib import log


class Config:
	config_file = 'config.resolved.yaml'
	config = None

	@classmethod
	def read_document(cls, path) -> dict:
		"""Lit un document YAML ou JSON (le JSON est du YAML)"""
		path = Path(path)
		if not path.is_file():
			raise ConfigurationError(f"Fichier de configuration introuvable : {path}")
		try:
			with open(path, 'r', encoding='utf-8') as file:
				document = load(file, Loader=SafeLoader)
		except YAMLError as e:
			raise ConfigurationError(f"Configuration illisible ({path}) : {e}") from e
		if document is None:
			return {}
		if not isinstance(document, dict):
			raise ConfigurationError(f"La configuration doit être un objet, reçu {type(document).__name__}")
		log("LOAD", str(path), f"{len(document)} champ(s)")
		return document

	@classmethod
	def load_config(cls, path=None, fast: bool = False, overrides: dict | None = None) -> ExperimentConfig:
		"""Charge la configuration : profil < document < options de la ligne de commande"""
		document = cls.read_document(path) if path else {}
		profile_name = 'fast' if fast else os.getenv('FEDQ_PROFILE')
		if profile_name and profile_name not in PROFILES:
			raise ConfigurationError(f"Profil inconnu : {profile_name} (attendu {list(PROFILES)})")
		profile = PROFILES.get(profile_name) if profile_name else None
		overrides = {key: value for key, value in (overrides or {}).items() if value is not None}
		merged = deep_merge(profile, document, overrides)
		if 'out_dir' not in merged and os.getenv('FEDQ_OUT_DIR'):
			merged['out_dir'] = os.getenv('FEDQ_OUT_DIR')
		cls.config = ExperimentConfig.from_dict(merged)
		return cls.config

	@classmethod
	def save_config(cls, session, config: ExperimentConfig | None = None):
		"""Sauvegarde la configuration résolue à côté des artefacts"""
		config = config or cls.config
		if config is None:
			raise ConfigurationError("Aucune configuration chargée")
		with session.open(cls.config_file) as file:
			dump(config.source, file, default_flow_style=False, allow_unicode=True, sort_keys=True)
