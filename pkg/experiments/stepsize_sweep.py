from modules.experiment import Experiment as BaseExperiment, period_label


class Experiment(BaseExperiment):
	"""Balayage des pas constants à E fixé"""

	@classmethod
	def render(cls, config, session, summary):
		ensembles = cls.repeat_ensembles(config)
		aggregates, _ = cls.sweep(config, session, summary, ensembles)
		periods = ", ".join(period_label(period) for period in config.periods)
		cls.save_chart(session, "stepsize_sweep.svg", aggregates, title=f"{config.ensemble.kind}, {periods}")

		for curve in summary.curves:
			if curve['mean_plateau'] > min(curve['minimum_errors']) * 2.0:
				cls.add_flash(f"{curve['label']} : rebond après le minimum", 'info')
