import json

import pytest
import yaml

from config.settings import BOUND_DELTA
from core.errors import InvariantViolationError
from core.harness import ExperimentConfig, aggregate, build_repeat_ensembles, run_repeats
from core.schedules import BoundParams, StepsizeSchedule, theorem1_bound, theorem1_terms
from modules.app import App
from modules.config import Config
from modules.experiment import Experiment
from modules.store import Store
from storage.repositories import SummaryRepository, TraceRepository

TINY_LOWER_BOUND = {
	'gammas': [0.5],
	'rounds': 40,
	'periods': [1, 2],
	'floor_periods': [2],
	'floor_rounds': [32],
}


@pytest.fixture
def config_file(tmp_path, fast_document):
	def write(**changes):
		path = tmp_path / "experiment.yaml"
		path.write_text(yaml.safe_dump({**fast_document, **changes}), encoding='utf-8')
		return str(path)
	return write


def run_cli(*argv) -> int:
	return App.run([*argv, '--log-level', 'WARNING'])


def stderr_document(capsys) -> dict:
	return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_run_writes_artifacts(tmp_path, config_file):
	out = tmp_path / "run"
	assert run_cli('run', '--config', config_file(), '--out', str(out)) == 0
	summary = SummaryRepository.load(out / "summary.json")
	assert summary['experiment'] == "single_run"
	assert summary['passed'] is True
	assert len(summary['seeds']) == 2
	assert (out / "config.resolved.yaml").is_file()
	assert (out / "error.svg").is_file()
	assert len(list((out / "traces").glob("*.csv"))) == 2
	assert len(list(out.glob("aggregate_*.csv"))) == 1


def test_resolved_config_reproduces_hash(tmp_path, config_file):
	out = tmp_path / "run"
	assert run_cli('run', '--config', config_file(), '--out', str(out)) == 0
	summary = SummaryRepository.load(out / "summary.json")
	assert Config.load_config(out / "config.resolved.yaml").hash == summary['config_hash']


def test_unknown_option_is_a_usage_error(capsys):
	assert App.run(['run', '--bogus']) == 2
	assert stderr_document(capsys)['error'] == "UsageError"


def test_non_integer_seed_is_a_usage_error(capsys):
	assert App.run(['run', '--seed', 'abc']) == 2
	assert "seed" in stderr_document(capsys)['message']


def test_missing_config_file(tmp_path, capsys):
	assert run_cli('run', '--config', str(tmp_path / "absent.yaml"), '--out', str(tmp_path / "out")) == 1
	assert stderr_document(capsys)['error'] == "ConfigurationError"
	assert not (tmp_path / "out").exists()


def test_out_of_range_seed(tmp_path, config_file, capsys):
	assert run_cli('run', '--config', config_file(), '--seed', '-1', '--out', str(tmp_path / "out")) == 1
	assert stderr_document(capsys)['error'] == "ConfigurationError"


def test_unknown_field_is_rejected(tmp_path, config_file, capsys):
	assert run_cli('run', '--config', config_file(learning_rate=0.1), '--out', str(tmp_path / "out")) == 1
	assert "learning_rate" in stderr_document(capsys)['message']


def test_e_sweep_writes_plateau_table(tmp_path, config_file):
	out = tmp_path / "sweep"
	assert run_cli('sweep-e', '--config', config_file(periods=[1, 5, 0]), '--out', str(out)) == 0
	assert (out / "plateau_summary.csv").is_file()
	assert (out / "E_sweep.svg").is_file()
	assert (out / "aggregate_lambda_0.1_E_inf.csv").is_file()


def test_stepsize_sweep(tmp_path, config_file):
	out = tmp_path / "steps"
	schedules = [{'kind': 'constant', 'value': 0.5}, {'kind': 'poly', 'alpha': 0.5}]
	assert run_cli('sweep-stepsize', '--config', config_file(schedules=schedules), '--out', str(out)) == 0
	summary = SummaryRepository.load(out / "summary.json")
	assert [curve['schedule']['kind'] for curve in summary['curves']] == ["constant", "poly"]
	assert summary['bounds'][1]['applicable'] is False


def test_two_phase_writes_tolerance_table(tmp_path, config_file):
	out = tmp_path / "two_phase"
	document = config_file(schedules=[{'kind': 'constant', 'value': 0.2}], periods=[5])
	assert run_cli('two-phase', '--config', document, '--out', str(out)) == 0
	assert (out / "tolerance_summary.csv").is_file()
	assert (out / "two_phase.svg").is_file()


@pytest.mark.parametrize("action", ["lower-bound", "verify"])
def test_verification_commands_pass(tmp_path, config_file, action):
	out = tmp_path / action
	document = config_file(lower_bound_check=TINY_LOWER_BOUND, verify={'num_runs': 2, 'lambdas': [0.1, 0.5]})
	assert run_cli(action, '--config', document, '--out', str(out)) == 0
	report = json.loads((out / "verification.json").read_text(encoding='utf-8'))
	assert report['passed'] is True
	assert report['num_failures'] == 0


def test_threads_do_not_change_outputs(tmp_path, config_file):
	outputs = {}
	for threads in (1, 2):
		out = tmp_path / f"threads_{threads}"
		assert run_cli('run', '--config', config_file(), '--out', str(out), '--threads', str(threads)) == 0
		outputs[threads] = {
			path.relative_to(out): path.read_bytes() for path in sorted(out.rglob("*.csv"))
		}
	assert outputs[1] == outputs[2]


def test_replayed_ensembles_reproduce_traces(tmp_path, config_file):
	first, second = tmp_path / "first", tmp_path / "second"
	assert run_cli('run', '--config', config_file(), '--out', str(first)) == 0
	assert run_cli('run', '--config', config_file(replay_dir=str(first)), '--out', str(second)) == 0
	traces = sorted((first / "traces").glob("*.csv"))
	assert traces
	for path in traces:
		assert (second / "traces" / path.name).read_bytes() == path.read_bytes()


def test_missing_replay_directory(tmp_path, config_file, capsys):
	document = config_file(replay_dir=str(tmp_path / "nowhere"))
	assert run_cli('run', '--config', document, '--out', str(tmp_path / "out")) == 1
	assert stderr_document(capsys)['error'] == "ConfigurationError"
	assert not (tmp_path / "out").exists()


def test_replayed_ensemble_must_share_discount(tmp_path, config_file, capsys):
	first = tmp_path / "first"
	assert run_cli('run', '--config', config_file(), '--out', str(first)) == 0
	document = config_file(replay_dir=str(first), gamma=0.5)
	assert run_cli('run', '--config', document, '--out', str(tmp_path / "second")) == 1
	assert "γ" in stderr_document(capsys)['message']


def test_wrongly_typed_section_is_a_configuration_error(tmp_path, config_file, capsys):
	document = config_file(lower_bound_check={'gammas': 0.5})
	assert run_cli('lower-bound', '--config', document, '--out', str(tmp_path / "out")) == 1
	assert stderr_document(capsys)['error'] == "ConfigurationError"


def test_bound_evaluation_uses_bound_functions(fast_document):
	config = ExperimentConfig.from_dict(fast_document)
	ensemble = build_repeat_ensembles(config)[0]
	evaluation = Experiment.bound_evaluation(config, ensemble, StepsizeSchedule(kind="constant", value=0.01), 1, "λ=0.01")
	params = BoundParams(
		gamma=ensemble.discount, lam=0.01, period=1, num_agents=ensemble.num_agents, horizon=config.horizon,
		kappa=ensemble.kappa_inf, delta=BOUND_DELTA, num_states=ensemble.num_states, num_actions=ensemble.num_actions,
	)
	assert evaluation['applicable'] is True
	assert evaluation['bound'] == theorem1_bound(params)
	assert evaluation['terms'] == theorem1_terms(params)
	assert evaluation['stepsize_failures'] == []


def test_bound_evaluation_reports_stepsize_failures(fast_document):
	config = ExperimentConfig.from_dict(fast_document)
	ensemble = build_repeat_ensembles(config)[0]
	evaluation = Experiment.bound_evaluation(config, ensemble, StepsizeSchedule(kind="constant", value=0.5), 4, "λ=0.5")
	assert evaluation['applicable'] is False
	assert any(failure.startswith("stepsize_period") for failure in evaluation['stepsize_failures'])


def test_aggregate_check_rejects_diverging_series(tmp_path, fast_document):
	config = ExperimentConfig.from_dict(fast_document)
	traces = run_repeats(config, 5, StepsizeSchedule(kind="constant", value=0.2), "agg")
	series = aggregate("agg", traces, window=5)
	with Store.session(tmp_path) as session:
		paths = [TraceRepository.save(session, f"traces/agg_r{repeat}.csv", trace) for repeat, trace in enumerate(traces)]
	Experiment.check_aggregate(paths, series)
	series.mean = series.mean + 1e-9
	with pytest.raises(InvariantViolationError):
		Experiment.check_aggregate(paths, series)
