import json

import numpy as np
import pytest

from core.harness import ExperimentConfig, aggregate, run_repeats
from core.reports import CheckResult, VerificationReport
from core.schedules import StepsizeSchedule
from modules.store import Store
from storage.models import ChartSeries, RunSummary
from storage.repositories import (
	AggregateRepository, ChartRepository, EnsembleRepository, ReportRepository, SummaryRepository, TraceRepository,
	recompute_aggregate,
)


def test_session_rolls_back_partial_outputs(tmp_path):
	root = tmp_path / "out"
	with pytest.raises(RuntimeError):
		with Store.session(root) as session:
			with session.open("traces/a.csv") as file:
				file.write("t\n0\n")
			raise RuntimeError("échec simulé")
	assert not root.exists()


def test_session_keeps_existing_directory(tmp_path):
	(tmp_path / "keep.txt").write_text("x")
	with pytest.raises(RuntimeError):
		with Store.session(tmp_path) as session:
			with session.open("new.csv") as file:
				file.write("x")
			raise RuntimeError
	assert (tmp_path / "keep.txt").exists()
	assert not (tmp_path / "new.csv").exists()


def test_traces_round_trip_into_aggregate(tmp_path, fast_document):
	config = ExperimentConfig.from_dict(fast_document)
	traces = run_repeats(config, 3, StepsizeSchedule(kind="constant", value=0.3), "csv")
	series = aggregate("csv", traces, window=5)
	with Store.session(tmp_path) as session:
		for repeat, trace in enumerate(traces):
			TraceRepository.save(session, f"traces/csv_r{repeat}.csv", trace)
		AggregateRepository.save(session, "aggregate_csv.csv", series)

	paths = sorted((tmp_path / "traces").glob("*.csv"))
	assert len(paths) == 2
	mean, std = recompute_aggregate(paths)
	emitted = AggregateRepository.load(tmp_path / "aggregate_csv.csv")
	assert np.max(np.abs(mean - emitted['mean'].to_numpy())) <= 1e-12
	assert np.max(np.abs(std - emitted['std'].to_numpy())) <= 1e-12

	frame = TraceRepository.load(paths[0])
	assert list(frame.columns) == ["t", "linf_error", "lambda", "synced", "run_id", "seed"]
	assert np.isnan(frame['lambda'].iloc[-1])
	assert frame['seed'].iloc[0] == str(traces[0].seed)
	assert np.array_equal(frame['linf_error'].to_numpy(), traces[0].errors)


def test_ensemble_repository_round_trip(tmp_path, maze_ensemble):
	with Store.session(tmp_path) as session:
		EnsembleRepository.save(session, "ensembles/e.json", maze_ensemble)
	loaded = EnsembleRepository.load(tmp_path / "ensembles" / "e.json")
	assert np.array_equal(loaded.agents[2].kernel, maze_ensemble.agents[2].kernel)


def test_json_artifacts(tmp_path):
	summary = RunSummary("single_run", "1.0", "abc", [{'repeat': 0}], extra={'horizon': float('inf')})
	report = VerificationReport("1.0", "abc", 0, [CheckResult("x", {}, 1.0, 2.0, True)])
	with Store.session(tmp_path) as session:
		SummaryRepository.save(session, "summary.json", summary)
		ReportRepository.save(session, "verification.json", report)
	assert SummaryRepository.load(tmp_path / "summary.json")['extra'] == {'horizon': None}
	document = json.loads((tmp_path / "verification.json").read_text(encoding='utf-8'))
	assert document['passed'] is True
	assert document['num_checks'] == 1


def test_repositories_check_types(tmp_path):
	with Store.session(tmp_path) as session:
		with pytest.raises(ValueError):
			TraceRepository.save(session, "bad.csv", 3)
		with pytest.raises(ValueError):
			ChartRepository.save(session, "bad.svg", [])


def test_chart_repository_writes_svg(tmp_path):
	series = [ChartSeries.from_points("constante", np.arange(5), np.ones(5))]
	with Store.session(tmp_path) as session:
		ChartRepository.save(session, "chart.svg", series, title="test")
	assert ChartRepository.load(tmp_path / "chart.svg").lstrip().startswith("<?xml")
