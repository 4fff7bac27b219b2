import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from config.settings import APP_CONFIG, CHART_COLORS, CHART_LINESTYLES
from core.errors import ConfigurationError

MAX_POINTS = 2000

SVG_PARAMS = {
	'svg.fonttype': 'none',
	'svg.hashsalt': APP_CONFIG['name'],
}


def _thin(values: np.ndarray, stride: int) -> np.ndarray:
	if stride == 1:
		return values
	thinned = values[::stride]
	return thinned if (len(values) - 1) % stride == 0 else np.append(thinned, values[-1])


def emit_svg(
		series: list,
		title: str = "",
		xlabel: str = "itération t",
		ylabel: str = "‖Δ_t‖∞",
		log_scale: bool = False,
) -> str:
	"""Courbes moyennes avec bandes ±1 écart-type, en SVG autonome et déterministe"""
	if not series:
		raise ConfigurationError("Aucune courbe à tracer")

	with plt.rc_context(SVG_PARAMS):
		figure, axis = plt.subplots(figsize=(8, 5))
		for index, item in enumerate(series):
			color = CHART_COLORS[index % len(CHART_COLORS)]
			linestyle = CHART_LINESTYLES[(index // len(CHART_COLORS) + index) % len(CHART_LINESTYLES)]
			stride = max(1, len(item.t) // MAX_POINTS)
			t, mean, std = (_thin(np.asarray(values), stride) for values in (item.t, item.mean, item.std))
			axis.fill_between(t, mean - std, mean + std, color=color, alpha=0.2, linewidth=0, gid=f"band-{index}")
			axis.plot(t, mean, color=color, linestyle=linestyle, linewidth=1.5, label=item.label, gid=f"series-{index}")

		if log_scale:
			axis.set_yscale('log')
		axis.set_xlabel(xlabel)
		axis.set_ylabel(ylabel)
		if title:
			axis.set_title(title)
		axis.grid(True, alpha=0.3)
		axis.legend(loc='best')
		figure.tight_layout()

		buffer = io.StringIO()
		figure.savefig(buffer, format='svg', metadata={'Date': None})
		plt.close(figure)
	return buffer.getvalue()
