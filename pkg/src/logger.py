import logging
import os
import sys

__all__ = ["logger", "set_verbosity"]

_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
_DATEFMT = "%Y-%m-%d %H:%M:%S"

logger = logging.getLogger("dsm_vocoder")
if not logger.handlers:
    logger.setLevel(os.getenv("DSM_LOG_LEVEL", "WARNING").upper())
    _sh = logging.StreamHandler(sys.stderr)
    _sh.setFormatter(logging.Formatter(fmt=_FORMAT, datefmt=_DATEFMT))
    logger.addHandler(_sh)
    _log_file = os.getenv("DSM_LOG_FILE")
    if _log_file:
        _fh = logging.FileHandler(_log_file, encoding="utf-8")
        _fh.setFormatter(logging.Formatter(fmt=_FORMAT, datefmt=_DATEFMT))
        logger.addHandler(_fh)


def set_verbosity(verbose: int) -> None:
    """CLI の -v 回数からログレベルを決める."""
    if verbose >= 2:  # noqa: PLR2004
        logger.setLevel(logging.DEBUG)
    elif verbose == 1:
        logger.setLevel(logging.INFO)
