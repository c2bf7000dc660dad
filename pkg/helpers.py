# -*- coding: utf-8 -*-

import logging


class LogLevel:
    DEBUG = 0
    INFO = 1
    WARN = 2
    ERROR = 3

    @classmethod
    def name(cls, level: int) -> str:
        assert cls.DEBUG <= level <= cls.ERROR, "Invalid Log level {}".format(level)
        return ("DEBUG", "INFO", "WARNING", "ERROR")[level]

    @classmethod
    def to_logging(cls, level: int) -> int:
        return (logging.DEBUG, logging.INFO, logging.WARNING, logging.ERROR)[level]


LOG_LEVEL = LogLevel.INFO

_logger = logging.getLogger('latentmap')
if not _logger.handlers:
    _handler = logging.StreamHandler()
    _handler.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))
    _logger.addHandler(_handler)
    _logger.propagate = False
_logger.setLevel(LogLevel.to_logging(LOG_LEVEL))


def set_log_level(level: int) -> None:
    global LOG_LEVEL

    LogLevel.name(level)
    LOG_LEVEL = level
    _logger.setLevel(LogLevel.to_logging(level))


def log(msg: str, severity: int = LogLevel.INFO) -> None:
    """ Simple system logger.
    """
    _logger.log(LogLevel.to_logging(severity), msg)
