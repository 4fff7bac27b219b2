from dataclasses import dataclass, field

import numpy as np

from storage.base import Record


@dataclass
class RunSummary(Record):
	"""Résumé JSON d'une expérience"""
	__artifact_name__ = "summary"

	experiment: str
	version: str
	config_hash: str
	seeds: list
	curves: list = field(default_factory=list)
	kappas: list = field(default_factory=list)
	bounds: list = field(default_factory=list)
	extra: dict = field(default_factory=dict)
	notes: list = field(default_factory=list)
	wall_time: float = 0.0
	passed: bool = True


@dataclass(eq=False)
class ChartSeries(Record):
	"""Une courbe : moyenne et bande ±1 écart-type"""
	__artifact_name__ = "series"

	label: str
	t: np.ndarray
	mean: np.ndarray
	std: np.ndarray

	@classmethod
	def from_aggregate(cls, aggregate) -> 'ChartSeries':
		return cls(aggregate.label, np.arange(aggregate.horizon + 1), aggregate.mean, aggregate.std)

	@classmethod
	def from_points(cls, label: str, t, values) -> 'ChartSeries':
		values = np.asarray(values, dtype=np.float64)
		return cls(label, np.asarray(t), values, np.zeros_like(values))
