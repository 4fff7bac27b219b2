"""Toutes les vérifications de cohérence, écrites dans verification.json"""
import numpy as np

from core.engine import (
	IDENTITY_TOLERANCE, RunConfig, RunTrace, run, verify_coarse_bounds, verify_error_iteration,
)
from core.errors import InvariantViolationError
from core.harness import (
	ORACLE_TOLERANCE, build_ensemble, environment_seed, lower_bound_lambdas, repeat_seed, sync_checkpoints,
)
from core.oracle import (
	INV_E, LAMBERT_TOLERANCE, closed_form_delta, lambert_w_minus1, lower_bound_ensemble, min_horizon,
	propagate_sync_rounds, verify_kappa_properties,
)
from core.reports import CheckResult
from core.schedules import StepsizeSchedule
from experiments.lower_bound import lower_bound_checks, save_report
from modules.experiment import Experiment as BaseExperiment

KAPPA_GAMMAS = [0.1, 0.3, 0.5, 0.7, 0.9]
KAPPA_PERIODS = [1, 2, 4, 8]
KAPPA_STEPS = 5
LAMBERT_POINTS = 100
HORIZON_GAMMA = 0.5
HORIZON_RATIO = (16.9, 17.1)
RECORDED_HORIZON = 50


def run_verified(config, ensemble, lam: float, index: int, horizon: int, record_locals: bool = False) -> RunTrace:
	"""Exécution avec identité et bornes vérifiées ; la trace est gardée même en cas de violation"""
	try:
		return run(RunConfig(
			ensemble=ensemble,
			period=config.periods[0],
			horizon=horizon,
			schedule=StepsizeSchedule(kind="constant", value=lam),
			seed=repeat_seed(config.seed, index),
			record_locals=record_locals,
			verify_identities=True,
			threads=config.threads,
			run_id=f"verify#{index} λ={lam:g}",
		))
	except InvariantViolationError as e:
		return e.trace


def identity_checks(config) -> list:
	checks = []
	lambdas = config.verify['lambdas']
	for index in range(int(config.verify['num_runs'])):
		lam = float(lambdas[index % len(lambdas)])
		ensemble = build_ensemble(config.ensemble, config.num_agents, environment_seed(config.seed, index))
		trace = run_verified(config, ensemble, lam, index, config.horizon)
		params = {'run': index, 'lambda': lam, 'E': config.periods[0], 'T': config.horizon}
		residual = float(trace.identity_residuals.max()) if trace.horizon else 0.0
		tolerance = IDENTITY_TOLERANCE * trace.value_bound
		checks.append(CheckResult("error_identity", params, residual, tolerance, residual <= tolerance))
		violations = len(trace.bound_violations)
		checks.append(CheckResult("coarse_bounds", params, violations, 0, violations == 0))

	# Recalcul direct de la somme déroulée sur une exécution courte dont les tables locales sont gardées
	horizon = min(config.horizon, RECORDED_HORIZON)
	if horizon:
		lam = float(lambdas[0])
		ensemble = build_ensemble(config.ensemble, config.num_agents, environment_seed(config.seed, 0))
		trace = run_verified(config, ensemble, lam, 0, horizon, record_locals=True)
		params = {'run': 0, 'lambda': lam, 'E': config.periods[0], 'T': horizon}
		residual = verify_error_iteration(trace, ensemble, horizon - 1)
		tolerance = IDENTITY_TOLERANCE * trace.value_bound
		checks.append(CheckResult("error_identity_unrolled", params, residual, tolerance, residual <= tolerance))
		report = verify_coarse_bounds(trace)
		checks.append(CheckResult("coarse_bounds_local", params, len(report.violations), 0, report.passed))
	return checks


def kappa_checks() -> list:
	checks = []
	for gamma in KAPPA_GAMMAS:
		upper = 1.0 / (1.0 + gamma)
		lambdas = np.linspace(upper / KAPPA_STEPS, upper, KAPPA_STEPS)
		for period in KAPPA_PERIODS:
			checks.extend(verify_kappa_properties(gamma, period, lambdas))
	return checks


def lambert_checks() -> list:
	checks = []
	for x in -np.geomspace(1e-6, INV_E * (1.0 - 1e-6), LAMBERT_POINTS):
		w = lambert_w_minus1(float(x))
		residual = abs(w * np.exp(w) - x) / abs(x)
		checks.append(CheckResult(
			"lambert_w_minus1", {'x': float(x), 'w': w}, float(residual), LAMBERT_TOLERANCE,
			residual <= LAMBERT_TOLERANCE and w <= -1.0,
		))
	return checks


def horizon_checks(periods) -> list:
	low, high = HORIZON_RATIO
	checks = []
	for period in periods:
		ratio = min_horizon(period, HORIZON_GAMMA) / period
		checks.append(CheckResult(
			"min_horizon", {'gamma': HORIZON_GAMMA, 'E': period}, ratio, high, low <= ratio <= high,
		))
	return checks


def recursion_checks(config) -> list:
	"""Récurrence matricielle par ronde de synchronisation contre la forme fermée"""
	settings = config.lower_bound_check
	base = config.ensemble.lower_bound
	rounds = settings['rounds']
	checkpoints = sync_checkpoints(rounds)
	checks = []
	for gamma in settings['gammas']:
		ensemble = lower_bound_ensemble(gamma, base.reward, base.num_agents)
		for period in settings['periods']:
			for lam in lower_bound_lambdas(gamma, rounds, period):
				deltas = propagate_sync_rounds(ensemble, lam, period, rounds)
				deviation = max(
					float(np.max(np.abs(deltas[r] - closed_form_delta(r, period, lam, gamma, base.reward)[0])))
					for r in checkpoints
				)
				checks.append(CheckResult(
					"sync_round_recursion", {'gamma': gamma, 'E': period, 'lambda': lam, 'rounds': rounds},
					deviation, ORACLE_TOLERANCE, deviation <= ORACLE_TOLERANCE,
				))
	return checks


class Experiment(BaseExperiment):

	@classmethod
	def render(cls, config, session, summary):
		checks = identity_checks(config)
		checks += kappa_checks()
		checks += lambert_checks()
		checks += horizon_checks(config.lower_bound_check['periods'])
		oracle, _ = lower_bound_checks(config)
		checks += oracle
		checks += recursion_checks(config)
		save_report(cls, config, session, summary, checks)
