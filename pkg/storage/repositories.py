import json
from pathlib import Path

import numpy as np
import pandas as pd

from config.settings import AGGREGATE_COLUMNS, CSV_FLOAT_FORMAT, TRACE_COLUMNS
from core.engine import RunTrace
from core.harness import AggregateSeries
from core.mdp import Ensemble, dump_ensemble, load_ensemble
from core.reports import VerificationReport
from storage.models import ChartSeries, RunSummary
from utils.chart import emit_svg
from utils.data import to_dict, to_jsonable


class Repository:
	model = None

	def __init_subclass__(cls, **kwargs):
		if cls.model is None:
			raise ValueError("Model must be defined")

	@classmethod
	def _check_item(cls, item):
		if not isinstance(item, cls.model) and not isinstance(item, dict):
			raise ValueError(
				f"Invalid data type. Expected {cls.model.__name__} or a dictionary, but received: {type(item)}"
			)

	@classmethod
	def save(cls, session, name: str, item) -> Path:
		cls._check_item(item)
		with session.open(name) as file:
			cls._write(file, item)
		return session.root / name

	@classmethod
	def _write(cls, file, item):
		raise NotImplementedError

	@classmethod
	def load(cls, path):
		raise NotImplementedError


class CsvRepository(Repository):
	model = object
	columns = None

	@classmethod
	def _write(cls, file, item):
		frame = item.to_frame() if hasattr(item, 'to_frame') else pd.DataFrame(item)
		frame[cls.columns or list(frame.columns)].to_csv(
			file, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n'
		)

	@classmethod
	def load(cls, path) -> pd.DataFrame:
		return pd.read_csv(path, dtype={'run_id': str, 'seed': str}, keep_default_na=True)


class TraceRepository(CsvRepository):
	model = RunTrace
	columns = TRACE_COLUMNS


class AggregateRepository(CsvRepository):
	model = AggregateSeries
	columns = AGGREGATE_COLUMNS


class TableRepository(CsvRepository):
	"""Tableaux récapitulatifs (plateaux, tolérances)"""
	model = pd.DataFrame

	@classmethod
	def _check_item(cls, item):
		if not isinstance(item, (pd.DataFrame, dict, list)):
			raise ValueError(f"Invalid data type. Expected a table, but received: {type(item)}")

	@classmethod
	def _write(cls, file, item):
		frame = item if isinstance(item, pd.DataFrame) else pd.DataFrame(item)
		frame.to_csv(file, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')


class JsonRepository(Repository):
	model = object

	@classmethod
	def _write(cls, file, item):
		json.dump(to_jsonable(to_dict(item)), file, indent=2, sort_keys=True, ensure_ascii=False)
		file.write('\n')

	@classmethod
	def load(cls, path) -> dict:
		with open(path, 'r', encoding='utf-8') as file:
			return json.load(file)


class SummaryRepository(JsonRepository):
	model = RunSummary


class ReportRepository(JsonRepository):
	model = VerificationReport


class EnsembleRepository(JsonRepository):
	model = Ensemble

	@classmethod
	def _write(cls, file, item):
		super()._write(file, dump_ensemble(item) if isinstance(item, Ensemble) else item)

	@classmethod
	def load(cls, path) -> Ensemble:
		return load_ensemble(super().load(path))


class ChartRepository(Repository):
	model = ChartSeries

	@classmethod
	def _check_item(cls, item):
		if not item or not all(isinstance(series, ChartSeries) for series in item):
			raise ValueError("Invalid data type. Expected a non-empty list of ChartSeries")

	@classmethod
	def save(cls, session, name: str, item, **styling) -> Path:
		cls._check_item(item)
		document = emit_svg(item, **styling)
		with session.open(name) as file:
			file.write(document)
		return session.root / name

	@classmethod
	def load(cls, path) -> str:
		with open(path, 'r', encoding='utf-8') as file:
			return file.read()


def recompute_aggregate(paths) -> tuple[np.ndarray, np.ndarray]:
	"""Moyenne et écart-type relus depuis les CSV par répétition"""
	stacked = np.stack([TraceRepository.load(path)['linf_error'].to_numpy() for path in paths])
	return stacked.mean(axis=0), stacked.std(axis=0)
