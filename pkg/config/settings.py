"""Configuration générale de l'application"""

APP_CONFIG = {
	"name": "fedq-lab",
	"version": "1.0",
	"description": "Laboratoire de Q-learning fédéré synchrone sur MDP tabulaires hétérogènes",
}

# Sous-commandes disponibles et type d'expérience associé
EXPERIMENT_ACTIONS = {
	'run': 'single_run',
	'sweep-stepsize': 'stepsize_sweep',
	'sweep-e': 'E_sweep',
	'two-phase': 'two_phase',
	'lower-bound': 'lower_bound_check',
	'verify': 'verify_all',
}

EXPERIMENT_KINDS = list(EXPERIMENT_ACTIONS.values())

# Module du paquet experiments qui implémente chaque type
EXPERIMENT_MODULES = {
	'single_run': 'single_run',
	'stepsize_sweep': 'stepsize_sweep',
	'E_sweep': 'e_sweep',
	'two_phase': 'two_phase',
	'lower_bound_check': 'lower_bound',
	'verify_all': 'verify',
}

ENSEMBLE_KINDS = ["maze", "homogeneous", "lower_bound"]

# Synchronisation jamais effectuée (E = ∞)
SYNC_NEVER = 0

# Pas constants balayés par défaut
DEFAULT_STEPSIZES = [0.9, 0.5, 0.2, 0.1, 0.05]

# Périodes de synchronisation balayées
DEFAULT_PERIODS = [1, 10, 20, 40, SYNC_NEVER]

# Tolérances relatives à ‖Δ₀‖∞
TOLERANCE_LEVELS = [0.10, 0.05, 0.03, 0.01]

SMOOTHING_WINDOW = 50
PLATEAU_FRACTION = 0.05
BOUND_DELTA = 0.1
AGGREGATE_TOLERANCE = 1e-12

VALUE_ITERATION_TOLERANCE = 1e-10
VALUE_ITERATION_MAX_ITERS = 1_000_000

# Profil de référence à l'échelle du poste de travail
DESK_PROFILE = {
	"num_agents": 5,
	"gamma": 0.99,
	"horizon": 20000,
	"num_repeats": 5,
	"ensemble": {
		"kind": "maze",
		"maze": {"grid_side": 5, "drift": 0.1, "wall_density": 0.2, "reward_p": 0.05},
	},
}

# Profil rapide pour l'intégration continue
FAST_PROFILE = {
	"horizon": 2000,
	"num_repeats": 3,
	"gamma": 0.9,
}

PROFILES = {
	"desk": DESK_PROFILE,
	"fast": FAST_PROFILE,
}

DEFAULT_EXPERIMENT = {
	"kind": "single_run",
	"periods": [10],
	"schedules": [{"kind": "constant", "value": 0.1}],
	"seed": 0,
	"out_dir": "out",
	"threads": 1,
	"window": SMOOTHING_WINDOW,
	"t0": None,
	"phase2": {"kind": "poly", "alpha": 0.5},
	"tolerances": TOLERANCE_LEVELS,
	"record_locals": False,
	"verify_identities": False,
	"lower_bound_check": {
		"gammas": [0.3, 0.5, 0.9],
		"rounds": 10_000,
		"lambdas": None,
		"periods": [1, 2, 4, 8],
		"floor_gamma": 0.5,
		"floor_periods": [2, 4],
		"floor_rounds": [32, 64, 128],
	},
	"verify": {"num_runs": 20, "lambdas": [0.1, 0.5]},
}

# Schémas des fichiers CSV
TRACE_COLUMNS = ["t", "linf_error", "lambda", "synced", "run_id", "seed"]
AGGREGATE_COLUMNS = ["t", "mean", "std"]
CSV_FLOAT_FORMAT = "%.17g"

# Styles des courbes SVG
CHART_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"]
CHART_LINESTYLES = ["-", "--", "-.", ":"]

# Valeurs propres à chaque type d'expérience, appliquées sous le document
KIND_DEFAULTS = {
	"stepsize_sweep": {"schedules": [{"kind": "constant", "value": value} for value in DEFAULT_STEPSIZES]},
	"E_sweep": {"periods": DEFAULT_PERIODS},
	"two_phase": {"schedules": [{"kind": "constant", "value": value} for value in (0.2, 0.1, 0.05)]},
	"lower_bound_check": {"ensemble": {"kind": "lower_bound"}},
}
