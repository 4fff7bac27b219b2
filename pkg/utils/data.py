import hashlib
import json
import math
from dataclasses import fields, is_dataclass
from enum import Enum

import numpy as np


def get_attr(obj, attr, default=None):
	if isinstance(obj, dict):
		return obj.get(attr, default)
	return getattr(obj, attr, default)


def to_jsonable(value):
	"""Convertit récursivement une valeur en types JSON natifs"""
	if value is None or isinstance(value, (bool, str, int)):
		return value
	if isinstance(value, Enum):
		return value.value
	if isinstance(value, float):
		# Les non-finis (horizon infini, tolérance non atteinte) deviennent null
		return value if math.isfinite(value) else None
	if isinstance(value, np.bool_):
		return bool(value)
	if isinstance(value, np.integer):
		return int(value)
	if isinstance(value, np.floating):
		return to_jsonable(float(value))
	if isinstance(value, np.ndarray):
		return [to_jsonable(v) for v in value.tolist()]
	if isinstance(value, dict):
		return {str(k): to_jsonable(v) for k, v in value.items()}
	if isinstance(value, (list, tuple)):
		return [to_jsonable(v) for v in value]
	if hasattr(value, 'to_dict'):
		return value.to_dict()
	if is_dataclass(value):
		return {f.name: to_jsonable(getattr(value, f.name)) for f in fields(value)}
	return str(value)


def to_dict(obj):
	if obj is None:
		return None
	if isinstance(obj, dict):
		return obj
	if hasattr(obj, 'to_dict'):
		return obj.to_dict()
	if is_dataclass(obj):
		return to_jsonable(obj)
	return obj.__dict__.copy()


def config_hash(document: dict) -> str:
	"""Empreinte SHA-256 du document canonique (clés triées)"""
	canonical = json.dumps(to_jsonable(document), sort_keys=True, separators=(',', ':'))
	return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def deep_merge(*documents) -> dict:
	"""Fusionne les dictionnaires de gauche à droite, récursivement sur les sous-dictionnaires"""
	merged = {}
	for document in documents:
		for key, value in (document or {}).items():
			if isinstance(value, dict) and isinstance(merged.get(key), dict):
				merged[key] = deep_merge(merged[key], value)
			elif isinstance(value, dict):
				merged[key] = deep_merge(value)
			else:
				merged[key] = value
	return merged
