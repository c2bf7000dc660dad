# -*- coding: utf-8 -*-

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List

import numpy as np

import config as cfg
import core
from errors import ConfigError, StateError, NonFiniteError
from helpers import log, LogLevel

from .network import Network


@dataclass
class GradientReport:
    """ Result of comparing analytic gradients with central finite differences.
    """
    tolerance: float
    names: List[str] = field(default_factory=list)
    errors: List[float] = field(default_factory=list)

    @property
    def max_relative_error(self) -> float:
        return max(self.errors) if self.errors else 0.0

    @property
    def passed(self) -> bool:
        return self.max_relative_error <= self.tolerance

    def add(self, name: str, error: float) -> None:
        self.names.append(name)
        self.errors.append(float(error))

    def __str__(self):
        worst = self.names[int(np.argmax(self.errors))] if self.errors else '-'
        return 'GradientReport<max={:.3e} at {} tol={:g} {}>'.format(
            self.max_relative_error, worst, self.tolerance, 'PASS' if self.passed else 'FAIL')


def finite_difference_noise(loss_value: float, step: float = cfg.GRADCHECK_STEP) -> float:
    """ Rounding error of a central difference of a loss of this magnitude.
    """
    return cfg.GRADCHECK_NOISE * np.finfo(np.float64).eps * max(abs(loss_value), 1.0) / step


def error_floor(gradients: Iterable[np.ndarray], noise: float, tolerance: float) -> float:
    """ Denominator floor shared by every tensor of one check: 1e-3 of the
    largest gradient entry, and at least noise / tolerance so that entries
    whose difference is at rounding level pass.
    """
    scale = max((float(np.max(np.abs(g), initial=0.0)) for g in gradients), default=0.0)
    return max(1e-3 * scale, noise / tolerance if tolerance > 0 else 0.0, 1e-300)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = None) -> float:
    """ Largest entrywise |a - n| / max(|a| + |n|, floor). Without a floor,
    entries are measured against 1e-3 of the tensor's own scale.
    """
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if floor is None:
        scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(n), initial=0.0))
        floor = max(1e-3 * scale, 1e-300)
    return float(np.max(np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), floor), initial=0.0))


def compare_gradients(report: GradientReport, analytic: Dict[str, np.ndarray], numeric: Dict[str, np.ndarray],
                      loss_value: float, step: float) -> GradientReport:
    """ Fills the report with one relative error per tensor, all against the
    same floor.
    """
    floor = error_floor(list(analytic.values()) + list(numeric.values()),
                        finite_difference_noise(loss_value, step), report.tolerance)
    for name in analytic:
        report.add(name, relative_error(analytic[name], numeric[name], floor))
    return report


def numeric_gradient(f: Callable[[], float], array: np.ndarray, step: float = cfg.GRADCHECK_STEP) -> np.ndarray:
    """ Central finite differences of f() with respect to every entry of
    array, which is perturbed in place and restored.
    """
    grad = np.zeros_like(array)
    it = np.nditer(array, flags=['multi_index'])
    while not it.finished:
        index = it.multi_index
        old = array[index]
        array[index] = old + step
        f_plus = f()
        array[index] = old - step
        f_minus = f()
        array[index] = old
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NonFiniteError('Gradient check aborted: non-finite loss at index {}'.format(index))
        grad[index] = (f_plus - f_minus) / (2 * step)
        it.iternext()
    return grad


def require_verification_mode(n_params: int, max_params: int) -> None:
    if not core.is_verification_mode():
        raise StateError('Gradient checks need 64-bit mode (current precision {})'.format(core.PRECISION))
    if n_params > max_params:
        raise ConfigError('Gradient check over {} parameters exceeds the cap of {}'.format(n_params, max_params))


def gradient_check(network: Network, x: np.ndarray, tolerance: float = 1e-4, seed: int = 0,
                   step: float = cfg.GRADCHECK_STEP, max_params: int = cfg.GRADCHECK_MAX_PARAMS,
                   training: bool = True) -> GradientReport:
    """ Compares the analytic gradients of L = sum(network(x) * R), R a seeded
    random projection, against central finite differences for every
    parameter tensor and for the input.
    """
    require_verification_mode(network.parameter_count(), max_params)
    x = np.array(x, dtype=np.float64)
    out = network.forward(x, training)
    projection = np.random.default_rng(seed).standard_normal(out.shape)

    def loss() -> float:
        return float(np.sum(network.forward(x, training) * projection))

    value = loss()
    if not np.isfinite(value):
        raise NonFiniteError('Gradient check aborted: non-finite loss')

    network.forward(x, training)
    dx = network.backward(projection)
    analytic = {name: grad.copy() for name, grad in network.gradients()}
    analytic['input'] = dx

    numeric = {name: numeric_gradient(loss, param, step) for name, param in network.parameters()}
    numeric['input'] = numeric_gradient(loss, x, step)
    report = compare_gradients(GradientReport(tolerance), analytic, numeric, value, step)

    log('{}: {}'.format(network.name, report), LogLevel.DEBUG if report.passed else LogLevel.WARN)
    return report
