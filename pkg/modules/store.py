import os
import shutil
import threading
from contextlib import contextmanager
from pathlib import Path

from utils.lib import log


class StoreSession:
	"""Fichiers et dossiers créés pendant une session, supprimés en cas d'échec"""

	def __init__(self, root: Path):
		self.root = root
		self.lock = threading.Lock()
		self.files = []
		self.directories = []

	def path(self, name: str) -> Path:
		path = self.root / name
		self.makedirs(path.parent)
		return path

	def makedirs(self, directory: Path):
		missing = []
		while not directory.exists():
			missing.append(directory)
			directory = directory.parent
		for directory in reversed(missing):
			directory.mkdir()
			self.directories.append(directory)

	@contextmanager
	def open(self, name: str, mode: str = 'w'):
		"""Écriture sérialisée d'un artefact"""
		with self.lock:
			path = self.path(name)
			self.files.append(path)
			with open(path, mode, encoding=None if 'b' in mode else 'utf-8', newline='' if 'b' not in mode else None) as file:
				yield file
			log("WRITE", name, path)

	def rollback(self):
		for path in reversed(self.files):
			if path.exists():
				path.unlink()
		for directory in reversed(self.directories):
			if directory.exists():
				shutil.rmtree(directory, ignore_errors=True)
		log("ROLLBACK", str(self.root), f"{len(self.files)} fichier(s) supprimé(s)", success=False)
		self.files, self.directories = [], []


class Store:
	@classmethod
	@contextmanager
	def session(cls, out_dir):
		root = Path(out_dir)
		session = StoreSession(root)
		session.makedirs(root)
		if not os.access(root, os.W_OK):
			session.rollback()
			raise PermissionError(f"Dossier de sortie non accessible en écriture : {root}")
		try:
			yield session
		except BaseException:
			session.rollback()
			raise
