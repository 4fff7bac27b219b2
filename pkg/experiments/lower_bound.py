import numpy as np

from config.settings import APP_CONFIG
from core.envs import LowerBoundSpec
from core.harness import floor_checks, lower_bound_lambdas, oracle_checks
from core.oracle import min_horizon, verify_kappa_properties
from core.reports import VerificationReport
from modules.experiment import Experiment as BaseExperiment
from storage.models import ChartSeries
from storage.repositories import ChartRepository, ReportRepository


def admissible_lambdas(lambdas, gamma: float, rounds: int, period: int) -> list:
	"""Pas configurés restreints à (0, 1/(1+γ)], sinon la grille des deux régimes"""
	if not lambdas:
		return lower_bound_lambdas(gamma, rounds, period)
	return [float(lam) for lam in lambdas if 0.0 < lam <= 1.0 / (1.0 + gamma)]


def lower_bound_checks(config) -> tuple[list, dict]:
	"""Équivalence simulation / forme fermée, propriétés de κ_E et planchers"""
	settings = config.lower_bound_check
	base = config.ensemble.lower_bound
	rounds, periods = int(settings['rounds']), [int(period) for period in settings['periods']]
	checks, traces = [], {}
	for gamma in settings['gammas']:
		spec = LowerBoundSpec(num_agents=base.num_agents, reward=base.reward, discount=gamma)
		for period in periods:
			lambdas = admissible_lambdas(settings.get('lambdas'), gamma, rounds, period)
			found, simulated = oracle_checks(spec, [period], rounds, lambdas)
			checks.extend(found)
			traces.update({(gamma, *key): trace for key, trace in simulated.items()})
			checks.extend(verify_kappa_properties(gamma, period, lambdas))

	floor_gamma = float(settings['floor_gamma'])
	floor_spec = LowerBoundSpec(num_agents=base.num_agents, reward=base.reward, discount=floor_gamma)
	floor_lambdas = settings.get('lambdas')
	if floor_lambdas:
		floor_lambdas = [lam for lam in floor_lambdas if 0.0 < lam <= 1.0 / (1.0 + floor_gamma)]
	checks.extend(floor_checks(floor_spec, settings['floor_periods'], settings['floor_rounds'], floor_lambdas))
	return checks, traces


def save_report(experiment, config, session, summary, checks) -> VerificationReport:
	report = VerificationReport(APP_CONFIG['version'], config.hash, config.seed, checks)
	ReportRepository.save(session, "verification.json", report)
	summary.passed = summary.passed and report.passed
	summary.extra['num_checks'] = len(report.checks)
	summary.extra['num_failures'] = len(report.failures)
	summary.extra['checks_by_name'] = {
		name: sum(1 for check in report.checks if check.name == name)
		for name in sorted({check.name for check in report.checks})
	}
	for failure in report.failures[:20]:
		experiment.add_flash(f"{failure.name} {failure.params} : mesuré {failure.measured}, borne {failure.bound}", 'error')
	if report.passed:
		experiment.add_flash(f"{len(report.checks)} vérification(s) réussie(s)", 'success')
	return report


class Experiment(BaseExperiment):
	"""Instance à deux états : simulation contre forme fermée et plancher Ω(E/T)"""

	@classmethod
	def render(cls, config, session, summary):
		checks, traces = lower_bound_checks(config)
		save_report(cls, config, session, summary, checks)

		oracle = [check.measured for check in checks if check.name == "oracle_equivalence"]
		summary.extra['max_oracle_deviation'] = max(oracle) if oracle else None
		floor_gamma = float(config.lower_bound_check['floor_gamma'])
		summary.extra['min_horizon'] = {
			period: min_horizon(period, floor_gamma) for period in config.lower_bound_check['floor_periods']
		}

		if traces:
			gamma, period = next(iter(traces))[:2]
			series = [
				ChartSeries.from_points(f"λ={lam:.4g}", np.arange(trace.horizon + 1), trace.errors)
				for (g, e, lam), trace in traces.items() if g == gamma and e == period
			]
			ChartRepository.save(
				session, "lower_bound.svg", series, title=f"Instance à deux états, γ={gamma:g}, E={period}",
				log_scale=True,
			)
