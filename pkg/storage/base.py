from dataclasses import fields, is_dataclass

from utils.data import to_jsonable


class Record:
	"""Mixin des enregistrements exportables (dataclasses)"""
	__artifact_name__: str = None

	def to_dict(self):
		if not is_dataclass(self):
			raise TypeError(f"{type(self).__name__} n'est pas une dataclass")
		return {
			f.name: to_jsonable(getattr(self, f.name))
			for f in fields(self)
		}

	def __str__(self):
		name = self.__artifact_name__ or type(self).__name__
		return f"{name}({', '.join(f'{f.name}={getattr(self, f.name)!r}' for f in fields(self)[:3])})"
