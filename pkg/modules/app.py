import argparse
import json
import sys

from config.settings import APP_CONFIG, EXPERIMENT_ACTIONS
from core.errors import ConfigurationError, FedQError
from modules.config import Config
from modules.router import Router
from utils.data import to_jsonable
from utils.lib import set_logging


class UsageError(ConfigurationError):
	pass


class ArgumentParser(argparse.ArgumentParser):
	def error(self, message):
		raise UsageError(message)


class App:
	name = APP_CONFIG['name']
	version = APP_CONFIG['version']

	config = Config
	router = Router

	@classmethod
	def parser(cls) -> ArgumentParser:
		parser = ArgumentParser(prog=cls.name, description=APP_CONFIG['description'])
		parser.add_argument('--version', action='version', version=f"{cls.name} {cls.version}")
		actions = parser.add_subparsers(dest='action', required=True, parser_class=ArgumentParser)
		for action, kind in EXPERIMENT_ACTIONS.items():
			command = actions.add_parser(action, help=f"expérience {kind}")
			command.add_argument('--config', help="document YAML ou JSON de l'expérience")
			command.add_argument('--out', help="dossier de sortie")
			command.add_argument('--seed', type=int, help="graine maître (entier 64 bits)")
			command.add_argument('--fast', action='store_true', help="profil rapide (T=2000, 3 répétitions, γ=0.9)")
			command.add_argument('--threads', type=int, help="nombre de fils d'exécution")
			command.add_argument('--log-level', default='INFO', help="niveau de journalisation")
		return parser

	@staticmethod
	def report_error(error: Exception):
		details = error.details() if isinstance(error, FedQError) else {}
		document = {'error': type(error).__name__, 'message': str(error), 'details': to_jsonable(details)}
		sys.stderr.write(json.dumps(document, ensure_ascii=False) + '\n')

	@classmethod
	def run(cls, argv=None) -> int:
		"""Code de sortie : 0 succès, 1 échec d'exécution ou de vérification, 2 arguments invalides"""
		try:
			args = cls.parser().parse_args(argv)
		except UsageError as e:
			cls.report_error(e)
			return 2

		set_logging(args.log_level)
		try:
			config = cls.config.load_config(
				args.config,
				fast=args.fast,
				overrides={
					'kind': EXPERIMENT_ACTIONS[args.action],
					'out_dir': args.out,
					'seed': args.seed,
					'threads': args.threads,
				},
			)
			summary = cls.router.run(config)
		except (FedQError, OSError) as e:
			cls.report_error(e)
			return 1
		return 0 if summary.get('passed', True) else 1
