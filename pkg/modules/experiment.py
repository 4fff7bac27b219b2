"""
Base des expériences : une session d'artefacts, la configuration résolue,
le rendu propre à chaque type et le résumé JSON.
"""
import time
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Literal

import numpy as np
from loguru import logger

from config.settings import AGGREGATE_TOLERANCE, APP_CONFIG, BOUND_DELTA, SYNC_NEVER
from core.errors import BoundPreconditionError, ConfigurationError, InvariantViolationError
from core.harness import ExperimentConfig, aggregate, build_repeat_ensembles, run_repeats
from core.schedules import (
	BoundParams, StepsizeSchedule, check_theorem1_stepsizes, corollary1_bound, corollary1_terms, theorem1_bound,
	theorem1_terms,
)
from modules.config import Config
from modules.store import Store
from storage.models import ChartSeries, RunSummary
from storage.repositories import (
	AggregateRepository, ChartRepository, EnsembleRepository, SummaryRepository, TraceRepository, recompute_aggregate,
)
from utils.lib import get_pretty_name, log
from utils.validator import Validator


def period_label(period: int) -> str:
	return "E=∞" if period == SYNC_NEVER else f"E={period}"


def period_stem(period: int) -> str:
	return "E_inf" if period == SYNC_NEVER else f"E_{period}"


def schedule_stem(schedule: StepsizeSchedule) -> str:
	if schedule.kind == "constant":
		return f"lambda_{schedule.value:g}"
	if schedule.kind == "poly":
		return f"poly_{schedule.alpha:g}"
	if schedule.kind == "corollary":
		return "corollary"
	return f"two_phase_{schedule.lambda1:g}"


class Experiment(ABC):
	flashes = {}

	@classmethod
	@abstractmethod
	def render(cls, config: ExperimentConfig, session, summary: RunSummary):
		"""Exécute l'expérience et complète le résumé"""
		raise NotImplementedError

	@staticmethod
	def add_flash(message, __type: Literal['success', 'info', 'warning', 'error'] = 'info'):
		Experiment.flashes.setdefault(__type, []).append(message)

	@staticmethod
	def show_flashes() -> list:
		"""Journalise les notes accumulées et les renvoie pour le résumé"""
		notes = []
		for flash_type, flash_messages in Experiment.flashes.items():
			level = {'success': 'SUCCESS', 'info': 'INFO', 'warning': 'WARNING', 'error': 'ERROR'}[flash_type]
			for flash_message in flash_messages:
				logger.log(level, flash_message)
				notes.append(f"{flash_type}: {flash_message}")
		Experiment.flashes = {}
		return notes

	@classmethod
	def run(cls, config: ExperimentConfig) -> dict:
		"""Lance l'expérience ; les sorties partielles sont supprimées en cas d'échec"""
		Validator.validate(config)
		Experiment.flashes = {}
		started = time.perf_counter()
		summary = RunSummary(
			experiment=config.kind,
			version=APP_CONFIG['version'],
			config_hash=config.hash,
			seeds=config.seeds,
		)
		with Store.session(config.out_dir) as session:
			Config.save_config(session, config)
			cls.render(config, session, summary)
			summary.notes = cls.show_flashes()
			summary.wall_time = time.perf_counter() - started
			SummaryRepository.save(session, "summary.json", summary)
		log("RUN", get_pretty_name(config.kind), f"{config.out_dir} en {summary.wall_time:.2f} s", success=summary.passed)
		return summary.to_dict()

	@classmethod
	def run_curve(cls, config, session, period, schedule, label, stem, ensembles=None, horizon=None):
		"""Répétitions d'une courbe, CSV par répétition et CSV agrégé, relus pour contrôle"""
		traces = run_repeats(config, period, schedule, label, ensembles=ensembles, horizon=horizon)
		paths = [
			TraceRepository.save(session, f"traces/{stem}_r{repeat}.csv", trace) for repeat, trace in enumerate(traces)
		]
		series = aggregate(label, traces, config.window)
		AggregateRepository.save(session, f"aggregate_{stem}.csv", series)
		cls.check_aggregate(paths, series)
		return traces, series

	@staticmethod
	def check_aggregate(paths: list, series):
		"""Moyenne et écart-type recalculés depuis les CSV écrits, à AGGREGATE_TOLERANCE près"""
		mean, std = recompute_aggregate(paths)
		deviation = max(float(np.max(np.abs(mean - series.mean))), float(np.max(np.abs(std - series.std))))
		if deviation > AGGREGATE_TOLERANCE:
			raise InvariantViolationError(
				f"{series.label} : agrégat relu depuis {len(paths)} CSV différent de {deviation:.3e}",
				[path.name for path in paths],
			)

	@staticmethod
	def repeat_ensembles(config) -> list:
		"""Ensembles des répétitions : tirés depuis la graine, ou relus depuis replay_dir"""
		if config.replay_dir is None:
			return build_repeat_ensembles(config)
		root = Path(config.replay_dir)
		ensembles = [
			EnsembleRepository.load(root / f"ensembles/repeat_{repeat}.json") for repeat in range(config.num_repeats)
		]
		for repeat, ensemble in enumerate(ensembles):
			if ensemble.discount != config.gamma:
				raise ConfigurationError(f"Ensemble rejoué {repeat} : γ={ensemble.discount}, configuration γ={config.gamma}")
			if config.ensemble.kind != "lower_bound" and ensemble.num_agents != config.num_agents:
				raise ConfigurationError(
					f"Ensemble rejoué {repeat} : K={ensemble.num_agents}, configuration K={config.num_agents}"
				)
		log("LOAD", str(root), f"{len(ensembles)} ensemble(s) rejoué(s)")
		return ensembles

	@staticmethod
	def save_chart(session, name: str, aggregates: list, **styling):
		ChartRepository.save(session, name, [ChartSeries.from_aggregate(series) for series in aggregates], **styling)

	@staticmethod
	def kappas(ensembles: list) -> list:
		return [
			{'repeat': repeat, 'kappa_inf': ensemble.kappa_inf, 'kappa_l1': ensemble.kappa_l1}
			for repeat, ensemble in enumerate(ensembles)
		]

	@classmethod
	def bound_evaluation(cls, config, ensemble, schedule: StepsizeSchedule, period: int, label: str) -> dict:
		"""Borne de convergence pour une courbe, ou l'hypothèse qui ne tient pas"""
		params = BoundParams(
			gamma=ensemble.discount,
			lam=schedule.value if schedule.kind == "constant" else 0.0,
			period=period,
			num_agents=ensemble.num_agents,
			horizon=config.horizon,
			kappa=ensemble.kappa_inf,
			delta=BOUND_DELTA,
			num_states=ensemble.num_states,
			num_actions=ensemble.num_actions,
		)
		evaluation = {
			'label': label,
			'delta': BOUND_DELTA,
			'kappa': ensemble.kappa_inf,
			'stepsize_failures': check_theorem1_stepsizes(
				schedule, period, config.horizon, ensemble.num_agents, ensemble.discount,
			),
		}
		if schedule.kind not in ("constant", "corollary"):
			return {**evaluation, 'applicable': False, 'hypothesis': "stepsize", 'message': "pas variable dans le temps"}
		if schedule.kind == "constant":
			terms, bound = theorem1_terms, theorem1_bound
		else:
			terms, bound = corollary1_terms, corollary1_bound
		try:
			return {**evaluation, 'applicable': True, 'terms': terms(params), 'bound': bound(params)}
		except BoundPreconditionError as e:
			cls.add_flash(f"{label} : borne non applicable ({e.hypothesis})", 'warning')
			return {**evaluation, 'applicable': False, 'hypothesis': e.hypothesis, 'message': str(e)}

	@classmethod
	def sweep(cls, config, session, summary: RunSummary, ensembles=None) -> tuple[list, list]:
		"""Une courbe par couple (E, pas) ; l'ensemble de chaque répétition est partagé entre les courbes"""
		ensembles = ensembles or cls.repeat_ensembles(config)
		summary.kappas = cls.kappas(ensembles)
		aggregates, traces = [], []
		for period in config.periods:
			for schedule in config.schedules:
				label = f"{schedule.label}, {period_label(period)}"
				curve_traces, series = cls.run_curve(
					config, session, period, schedule, label, f"{schedule_stem(schedule)}_{period_stem(period)}",
					ensembles=ensembles,
				)
				aggregates.append(series)
				traces.append(curve_traces)
				summary.curves.append({
					**series.summary(), 'period': period, 'schedule': schedule.to_dict(), 'schedule_label': schedule.label,
				})
				summary.bounds.append(cls.bound_evaluation(config, ensembles[0], schedule, period, label))
		return aggregates, traces
