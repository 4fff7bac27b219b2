import pandas as pd

from core.engine import detect_phase_transition
from core.harness import iterations_to_tolerance, run_repeats
from core.schedules import StepsizeSchedule
from modules.experiment import Experiment as BaseExperiment, period_label, period_stem, schedule_stem
from storage.repositories import TableRepository, TraceRepository

TOLERANCE_COLUMNS = ["curve", "repeat", "level", "iteration"]


class Experiment(BaseExperiment):
	"""
	Pas constant λ1 jusqu'à t₀ puis pas de phase 2. t₀ est détecté par
	répétition sur une exécution pilote à λ1 constant, sauf s'il est fixé
	dans la configuration.
	"""

	@classmethod
	def render(cls, config, session, summary):
		ensembles = cls.repeat_ensembles(config)
		summary.kappas = cls.kappas(ensembles)
		period = config.periods[0]
		rows, aggregates, hits = [], [], {}

		baseline_label = f"{config.phase2.label} (référence), {period_label(period)}"
		baseline, series = cls.run_curve(
			config, session, period, config.phase2, baseline_label, f"baseline_{schedule_stem(config.phase2)}",
			ensembles=ensembles,
		)
		aggregates.append(series)
		hits['baseline'] = cls.tolerance_rows(config, 'baseline', baseline, rows)
		summary.curves.append({**series.summary(), 'period': period, 'schedule': config.phase2.to_dict()})

		for phase1 in config.schedules:
			t0s = cls.switch_times(config, session, period, phase1, ensembles)
			schedules = [
				StepsizeSchedule(kind="two_phase", lambda1=phase1.value, t0=t0, phase2=config.phase2)
				for t0 in t0s
			]
			curve = f"lambda1_{phase1.value:g}"
			label = f"λ1={phase1.value:g} puis {config.phase2.label}, {period_label(period)}"
			traces, series = cls.run_curve(
				config, session, period, schedules, label, f"{schedule_stem(schedules[0])}_{period_stem(period)}",
				ensembles=ensembles,
			)
			aggregates.append(series)
			hits[curve] = cls.tolerance_rows(config, curve, traces, rows)
			summary.curves.append({
				**series.summary(), 'period': period, 'lambda1': phase1.value, 'switch_times': t0s,
				'phase2': config.phase2.to_dict(),
			})

		TableRepository.save(session, "tolerance_summary.csv", pd.DataFrame(rows, columns=TOLERANCE_COLUMNS))
		summary.extra['tolerances'] = config.tolerances
		summary.extra['faster_than_baseline'] = cls.compare_to_baseline(config, hits)
		cls.save_chart(session, "two_phase.svg", aggregates, title=f"Deux phases, {period_label(period)}", log_scale=True)

	@classmethod
	def switch_times(cls, config, session, period, phase1, ensembles) -> list:
		if config.t0 is not None:
			return [config.t0] * config.num_repeats
		pilots = run_repeats(config, period, phase1, f"pilote λ={phase1.value:g}", ensembles=ensembles)
		for repeat, trace in enumerate(pilots):
			TraceRepository.save(session, f"traces/pilot_{schedule_stem(phase1)}_r{repeat}.csv", trace)
		return [detect_phase_transition(trace, min(config.window, trace.horizon + 1)) for trace in pilots]

	@staticmethod
	def tolerance_rows(config, curve, traces, rows) -> dict:
		"""Itération d'atteinte de chaque tolérance ; None si jamais atteinte"""
		found = {}
		for repeat, trace in enumerate(traces):
			for level in config.tolerances:
				iteration = iterations_to_tolerance(trace.errors, level)
				found[(repeat, level)] = iteration
				rows.append({'curve': curve, 'repeat': repeat, 'level': level, 'iteration': iteration})
		return found

	@classmethod
	def compare_to_baseline(cls, config, hits) -> dict:
		"""Nombre de répétitions où la première tolérance est atteinte avant la référence"""
		level = max(config.tolerances) if config.tolerances else None
		if level is None:
			return {}
		counts = {}
		for curve, found in hits.items():
			if curve == 'baseline':
				continue
			faster = 0
			for repeat in range(config.num_repeats):
				mine, reference = found[(repeat, level)], hits['baseline'][(repeat, level)]
				if mine is not None and (reference is None or mine < reference):
					faster += 1
			counts[curve] = {'level': level, 'repeats': faster, 'of': config.num_repeats}
			if faster * 2 <= config.num_repeats:
				cls.add_flash(f"{curve} : pas plus rapide que la référence au seuil {level:.0%}", 'warning')
		return counts
