# -*- coding: utf-8 -*-

__doc__ = """ Exception hierarchy. Every error carries the CLI exit code it maps to """


class LatentMapError(Exception):
    """ Base class of every error raised by this package.
    """
    exit_code = 1


# --- Configuration (exit code 2) ---

class ConfigError(LatentMapError, ValueError):
    exit_code = 2


class DomainError(ConfigError):
    """ Argument outside the domain of an operation (e.g. iteration t > T).
    """


class PartitionError(ConfigError):
    pass


class TooFewPointsError(ConfigError):
    pass


class DimensionError(LatentMapError, ValueError):
    """ Shapes are not compatible.
    """
    exit_code = 2


class BatchTooSmallError(DimensionError):
    pass


class ImageSizeError(DimensionError):
    pass


class ArrayFormatError(LatentMapError, ValueError):
    """ Malformed array container file.
    """
    exit_code = 2


class HeaderError(ArrayFormatError):
    pass


class UnsupportedOrderError(ArrayFormatError):
    pass


class UnsupportedDtypeError(ArrayFormatError):
    def __init__(self, descr: str):
        super().__init__("Unsupported dtype '{}'".format(descr))
        self.descr = descr


class PayloadSizeError(ArrayFormatError):
    pass


class InputFileError(LatentMapError):
    """ A file could not be opened, read or written.
    """
    exit_code = 2

    def __init__(self, cause: OSError):
        super().__init__('{}: {}'.format(cause.strerror or type(cause).__name__, cause.filename or cause))
        self.cause = cause


# --- Pipeline (exit code 3) ---

class StageDependencyError(LatentMapError, RuntimeError):
    exit_code = 3

    def __init__(self, stage: str, missing: str):
        super().__init__("Stage '{}' needs '{}', which was not found. Run the upstream stage first".format(stage, missing))
        self.stage = stage
        self.missing = missing


# --- Numeric failures (exit code 4) ---

class StateError(LatentMapError, RuntimeError):
    exit_code = 4


class NumericError(LatentMapError, ArithmeticError):
    exit_code = 4


class NonFiniteError(NumericError):
    pass


class CalibrationError(NumericError):
    def __init__(self, msg: str, row: int = None):
        super().__init__(msg if row is None else 'row {}: {}'.format(row, msg))
        self.row = row


class DegenerateRowError(NumericError):
    pass


class DivergenceError(NumericError):
    def __init__(self, iteration: int, checkpoint=None):
        super().__init__('Loss became non-finite at iteration {} (last checkpoint: {})'.format(iteration, checkpoint))
        self.iteration = iteration
        self.checkpoint = checkpoint
