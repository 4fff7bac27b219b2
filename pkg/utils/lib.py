import sys
from functools import lru_cache
from typing import Literal

from loguru import logger

Action = Literal["RUN", "VERIFY", "WRITE", "ROLLBACK", "LOAD"]


def log(
	action: Action,
	subject: str,
	detail,
	success: bool = True,
):
	message = "| Action={} | Subject={} | Detail={}"
	if success:
		logger.info(message, action, subject, str(detail))
	else:
		logger.error(message, action, subject, str(detail))


def set_logging(level: str = "INFO", disable_log: bool = False):
	logger.remove()
	if disable_log:
		logger.disable("")
		return

	logger.enable("")
	logger.add(sys.stderr, level=level)


@lru_cache(maxsize=256)
def get_pretty_name(name: str):
	pretty_name = " ".join(name.replace("-", "_").split("_")).title()
	return pretty_name
