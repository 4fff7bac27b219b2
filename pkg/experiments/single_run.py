from core.engine import verify_coarse_bounds
from modules.experiment import Experiment as BaseExperiment
from storage.repositories import EnsembleRepository


class Experiment(BaseExperiment):
	"""Une courbe par couple (E, pas), par défaut E = 10 et λ = 0.1"""

	@classmethod
	def render(cls, config, session, summary):
		ensembles = cls.repeat_ensembles(config)
		for repeat, ensemble in enumerate(ensembles):
			EnsembleRepository.save(session, f"ensembles/repeat_{repeat}.json", ensemble)

		aggregates, traces = cls.sweep(config, session, summary, ensembles)
		title = f"{config.ensemble.kind}, K={config.num_agents}, γ={config.gamma:g}"
		cls.save_chart(session, "error.svg", aggregates, title=title)

		if config.record_locals:
			cls.check_coarse_bounds(summary, [trace for curve in traces for trace in curve])

	@classmethod
	def check_coarse_bounds(cls, summary, traces):
		"""Bornes grossières relues sur les tables locales enregistrées"""
		reports = [verify_coarse_bounds(trace) for trace in traces]
		summary.extra['coarse_bounds'] = [
			{'run_id': trace.run_id, 'passed': report.passed, 'checked': report.checked,
			 'violations': [str(violation) for violation in report.violations[:10]]}
			for trace, report in zip(traces, reports)
		]
		if not all(report.passed for report in reports):
			summary.passed = False
			cls.add_flash("Tables locales hors de [0, 1/(1−γ)]", 'error')
