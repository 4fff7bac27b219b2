import numpy as np
import pandas as pd

from modules.experiment import Experiment as BaseExperiment, period_label
from storage.repositories import TableRepository

PLATEAU_COLUMNS = ["E", "mean", "std", "schedule"]


class Experiment(BaseExperiment):
	"""Balayage de la période de synchronisation ; E = 0 encode E = ∞"""

	@classmethod
	def render(cls, config, session, summary):
		ensembles = cls.repeat_ensembles(config)
		aggregates, _ = cls.sweep(config, session, summary, ensembles)

		rows = [
			{
				'E': curve['period'],
				'mean': curve['mean_plateau'],
				'std': curve['std_plateau'],
				'schedule': curve['schedule_label'],
			}
			for curve in summary.curves
		]
		table = pd.DataFrame(rows, columns=PLATEAU_COLUMNS)
		TableRepository.save(session, "plateau_summary.csv", table)
		summary.extra['plateaus'] = rows
		summary.extra['plateau_trend'] = cls.plateau_trend(table)

		cls.save_chart(
			session, "E_sweep.svg", aggregates,
			title=", ".join(period_label(period) for period in config.periods),
		)

	@classmethod
	def plateau_trend(cls, table: pd.DataFrame) -> dict:
		"""Plateau croissant en E (à un écart-type près), E = ∞ rangé en dernier"""
		trend = {}
		for schedule, group in table.groupby('schedule', sort=False):
			order = np.where(group['E'] == 0, np.inf, group['E'])
			group = group.iloc[np.argsort(order, kind='stable')]
			means, stds = group['mean'].to_numpy(), group['std'].to_numpy()
			steps = means[1:] + stds[1:] >= means[:-1] - stds[:-1]
			trend[schedule] = bool(np.all(steps))
			if not trend[schedule]:
				cls.add_flash(f"{schedule} : plateau non croissant en E", 'warning')
		return trend
