"""
Logging setup for tukeysim.

Console output goes through logging (``%(message)s`` on stdout), so the
command line never prints directly.  Numerical warnings raised during long
sweeps are redirected into the ``tukeysim.log.warnings`` logger, and repeats
of the same warning are demoted to DEBUG.
"""
from __future__ import annotations

import dataclasses
import functools
import logging
import logging.config
import typing
import warnings
from pathlib import Path

import yaml

LOGGING_CONFIG = Path(__file__).resolve().parent / "logging.yml"

warnings_logger = logging.getLogger(f"{__name__}.warnings")


def validate_log_level(level: str | int) -> int:
    """
    Return a logging level integer for level comparison.

    Parameters
    ----------
    level : str or int
        The logging level string or integer value.

    Returns
    -------
    log_level : int
        The integral log level.

    Raises
    ------
    TypeError
        If level is neither a string nor an integer.
    ValueError
        If the logging level name is invalid.
    """
    if isinstance(level, bool):
        raise TypeError("Logging level may not be a bool")
    if isinstance(level, int):
        return level
    if isinstance(level, str):
        levelno = logging.getLevelName(level.upper())
    else:
        raise TypeError(
            f"Invalid type {type(level)} of argument level. "
            "Must be of type int or str."
        )

    if not isinstance(levelno, int):
        raise ValueError(
            f"Invalid logging level {level!r} (use e.g., DEBUG or 10)"
        )
    return levelno


def load_logging_config(path: Path = LOGGING_CONFIG) -> dict:
    """Read a dictConfig-style logging configuration from yaml."""
    with open(path) as fp:
        return yaml.safe_load(fp)


def configure_logging(
    level: str | int = "INFO",
    log_file: str | Path | None = None,
    config_path: Path = LOGGING_CONFIG,
) -> dict:
    """
    Configure the ``tukeysim`` logger from the packaged yaml file.

    Parameters
    ----------
    level : str or int, optional
        Console level for tukeysim messages.
    log_file : str or Path, optional
        If given, DEBUG-and-above records are also written to this file
        through a rotating file handler.
    config_path : Path, optional
        Alternate logging yaml.

    Returns
    -------
    config : dict
        The dictionary handed to ``logging.config.dictConfig``.
    """
    levelno = validate_log_level(level)
    config = load_logging_config(config_path)
    template = config.pop("file_handler_template", None)

    config["handlers"]["console"]["level"] = levelno
    package_logger = config["loggers"]["tukeysim"]
    package_logger["level"] = levelno

    if log_file is not None:
        if template is None:
            raise ValueError(f"{config_path} has no file_handler_template")
        config["handlers"]["file"] = dict(template, filename=str(log_file))
        package_logger["handlers"] = list(package_logger["handlers"]) + ["file"]
        package_logger["level"] = min(levelno, logging.DEBUG)

    logging.config.dictConfig(config)
    return config


def log_warning_handler(
    message: Warning,
    category: type[Warning],
    filename: str,
    lineno: int,
    file: typing.TextIO | None = None,
    line: str | None = None,
    logger: logging.Logger = warnings_logger,
) -> None:
    """
    Warning handler that redirects warnings to a logger.

    Drop-in replacement for ``warnings.showwarning``.  The log message is
    ``category: message``; the handler arguments are attached to the record
    as ``warning_<name>`` extras so filters need not parse the text.
    """
    logger.warning(
        "%s: %s",
        category.__name__,
        message,
        extra={
            "warning_message": message,
            "warning_category": category,
            "warning_filename": filename,
            "warning_lineno": lineno,
        },
    )


def install_log_warning_handler(
    logger: logging.Logger = warnings_logger,
) -> None:
    """Replace ``warnings.showwarning`` with :func:`log_warning_handler`."""
    warnings.showwarning = functools.partial(
        log_warning_handler,
        logger=logger,
    )


def uninstall_log_warning_handler() -> None:
    """Restore the default behavior of the warnings module."""
    warnings.showwarning = warnings._showwarning_orig


@dataclasses.dataclass(eq=True, frozen=True)
class WarningRecordInfo:
    """Hashable identity of a redirected warning."""
    message: str
    category: type[Warning]
    filename: str
    lineno: int

    @classmethod
    def from_record(cls, record: logging.LogRecord) -> WarningRecordInfo:
        try:
            return cls(
                message=str(record.warning_message),
                category=record.warning_category,
                filename=record.warning_filename,
                lineno=record.warning_lineno,
            )
        except AttributeError as exc:
            raise ValueError(
                "Received invalid record, must be from the log_warning_handler"
            ) from exc


class DuplicateWarningFilter(logging.Filter):
    """
    Demote repeats of the same warning.

    The first occurrence of a warning passes at WARNING; later occurrences
    are demoted to ``level`` and vetoed when the logger does not accept
    that level.  ``counter`` tracks how many records were demoted.

    A sweep raising the same overflow warning in every batch thus logs it
    once at the default console level.
    """

    def __init__(self, level: str | int = logging.DEBUG):
        super().__init__()
        self.levelno = validate_log_level(level)
        self.levelname = logging.getLevelName(self.levelno)
        self.cache: set[WarningRecordInfo] = set()
        self.counter = 0
        self._logger: logging.Logger | None = None

    @classmethod
    def install(
        cls,
        level: str | int = logging.DEBUG,
        logger: logging.Logger = warnings_logger,
    ) -> DuplicateWarningFilter:
        filt = cls(level=level)
        logger.addFilter(filt)
        filt._logger = logger
        return filt

    def uninstall(self) -> None:
        if self._logger is not None:
            self._logger.removeFilter(self)
            self._logger = None

    def filter(self, record: logging.LogRecord) -> bool:
        try:
            info = WarningRecordInfo.from_record(record)
        except ValueError:
            return True
        if info not in self.cache:
            self.cache.add(info)
            return True
        if record.levelno > self.levelno:
            record.levelno = self.levelno
            record.levelname = self.levelname
            self.counter += 1
        owner = self._logger or logging.getLogger(record.name)
        return owner.isEnabledFor(self.levelno)


def standard_warnings_config() -> DuplicateWarningFilter:
    """
    Redirect warnings to logging and demote repeats to DEBUG.

    Returns
    -------
    filt : DuplicateWarningFilter
        The filter installed on the warnings logger.
    """
    install_log_warning_handler()
    return DuplicateWarningFilter.install(level=logging.DEBUG)
