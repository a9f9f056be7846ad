"""Teacher output channels and trained-loss proximal maps.

The teacher channel supplies the label partition function Z0(y; omega, v)
and its omega-derivative; the loss model supplies the proximal map
eta(y; omega, v) = argmin_x [(x-omega)^2/(2v) + loss(y, x)] and its
omega-derivative.  These scalars are the only ingredients of the
state-evolution integrands.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import erf

from . import _kernels
from .errors import DomainError, UsageError
from .quadrature import gauss_hermite_raw

DEFAULT_LABEL_NODES = 51

# exp(t^2) in the detached label weights overflows past ~180 nodes
_MAX_LABEL_NODES = 150


@dataclass(frozen=True)
class LinearGaussian:
    """Noisy linear teacher: y = nu + sqrt(delta) * noise."""

    delta: float = 0.0

    def __post_init__(self):
        if self.delta < 0.0:
            raise DomainError("noise variance delta must be nonnegative")


@dataclass(frozen=True)
class Sign:
    """Deterministic sign teacher: y = sign(nu), labels in {-1, +1}."""


TeacherChannel = Union[LinearGaussian, Sign]

SQUARE = "square"
LOGISTIC = "logistic"
REGRESSION = "regression"
CLASSIFICATION = "classification"

_LOSS_KIND = {SQUARE: 0, LOGISTIC: 1}


@dataclass(frozen=True)
class LossModel:
    """Trained loss plus task tag fixing the error normalisation and readout.

    Regression: k = 0, identity readout.  Classification: k = 1, sign
    readout (the 1/4 makes the squared error count misclassifications).
    """

    loss: str
    task: str

    def __post_init__(self):
        if self.loss not in (SQUARE, LOGISTIC):
            raise UsageError(f"unknown loss {self.loss!r}")
        if self.task not in (REGRESSION, CLASSIFICATION):
            raise UsageError(f"unknown task {self.task!r}")
        if self.loss == LOGISTIC and self.task == REGRESSION:
            raise UsageError("logistic loss is a classification loss")

    @property
    def k(self) -> int:
        return 0 if self.task == REGRESSION else 1

    @property
    def loss_kind(self) -> int:
        return _LOSS_KIND[self.loss]

    def readout(self, x):
        if self.task == CLASSIFICATION:
            return np.where(np.asarray(x) >= 0.0, 1.0, -1.0)
        return x

    def value(self, y, x):
        if self.loss == SQUARE:
            return 0.5 * (np.asarray(y, dtype=float) - x) ** 2
        return np.logaddexp(0.0, -np.asarray(y, dtype=float) * x)


RIDGE_REGRESSION = LossModel(SQUARE, REGRESSION)
SQUARE_CLASSIFICATION = LossModel(SQUARE, CLASSIFICATION)
LOGISTIC_CLASSIFICATION = LossModel(LOGISTIC, CLASSIFICATION)


def _check_v(v: float) -> float:
    v = float(v)
    if not v > 0.0:
        raise DomainError("variance parameter v must be positive")
    return v


def _check_sign_labels(y) -> None:
    if not np.all(np.isin(np.asarray(y), (-1.0, 1.0))):
        raise DomainError("sign channel labels must be exactly -1 or +1")


def teacher_partition(channel: TeacherChannel, y, omega, v):
    """Z0(y; omega, v): Gaussian smoothing of the label likelihood.

    LinearGaussian: density of y under N(omega, v + delta).  Sign: the
    probability (1 + y erf(omega / sqrt(2 v))) / 2 of drawing label y.
    """
    v = _check_v(v)
    y = np.asarray(y, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if isinstance(channel, LinearGaussian):
        s2 = v + channel.delta
        return np.exp(-((y - omega) ** 2) / (2.0 * s2)) / np.sqrt(2.0 * np.pi * s2)
    _check_sign_labels(y)
    return 0.5 * (1.0 + y * erf(omega / np.sqrt(2.0 * v)))


def teacher_partition_domega(channel: TeacherChannel, y, omega, v):
    """Analytic d/d(omega) of teacher_partition."""
    v = _check_v(v)
    y = np.asarray(y, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if isinstance(channel, LinearGaussian):
        s2 = v + channel.delta
        return teacher_partition(channel, y, omega, v) * (y - omega) / s2
    _check_sign_labels(y)
    return y * np.exp(-(omega**2) / (2.0 * v)) / np.sqrt(2.0 * np.pi * v)


def label_measure(channel: TeacherChannel, omega: float, v: float,
                  n_nodes: int = DEFAULT_LABEL_NODES):
    """Integration scheme (nodes, weights) realising "integral over dy".

    The scheme integrates plain functions of y concentrated where the
    channel puts mass: sum(w * f(nodes)) ~ integral f(y) dy.  Sign uses
    the exact two-point sum with unit weights (the channel density is
    carried by Z0 itself); LinearGaussian uses Gauss-Hermite recentred
    at the conditional mean with the Gaussian weight divided back out.
    """
    if isinstance(channel, Sign):
        return np.array([-1.0, 1.0]), np.array([1.0, 1.0])
    v = _check_v(v)
    if n_nodes > _MAX_LABEL_NODES:
        raise UsageError(
            f"label schemes above {_MAX_LABEL_NODES} nodes overflow the detached weights")
    t, w = gauss_hermite_raw(n_nodes)
    scale = np.sqrt(2.0 * (v + channel.delta))
    nodes = omega + scale * t
    weights = w * np.exp(t**2) * scale
    return nodes, weights


def fused_label_weights(channel: TeacherChannel, omega0, v0: float,
                        n_nodes: int = DEFAULT_LABEL_NODES):
    """Label grid with the channel factors pre-multiplied, per omega0 node.

    Returns (y, wz, wdz), each shaped (len(omega0), n_labels), with
    wz = scheme_weight * Z0(y) and wdz = scheme_weight * dZ0/domega,
    assembled in the analytically cancelled form (no exp(t^2) factors),
    which is what the saddle-point integrands actually consume.
    """
    omega0 = np.atleast_1d(np.asarray(omega0, dtype=float))
    v0 = _check_v(v0)
    if isinstance(channel, Sign):
        y = np.broadcast_to(np.array([-1.0, 1.0]), (omega0.size, 2))
        wz = teacher_partition(channel, y, omega0[:, None], v0)
        wdz = teacher_partition_domega(channel, y, omega0[:, None], v0)
        return y, wz, wdz
    t, w = gauss_hermite_raw(n_nodes)
    s2 = v0 + channel.delta
    y = omega0[:, None] + np.sqrt(2.0 * s2) * t[None, :]
    wz = np.broadcast_to(w / np.sqrt(np.pi), y.shape)
    wdz = wz * (y - omega0[:, None]) / s2
    return y, np.ascontiguousarray(wz), wdz


def proximal(loss: LossModel, y, omega, v):
    """eta(y; omega, v), the regularised one-dimensional loss minimiser."""
    v = _check_v(v)
    y = np.asarray(y, dtype=float)
    omega = np.asarray(omega, dtype=float)
    shape = np.broadcast(y, omega).shape
    if loss.loss == SQUARE:
        shift = v * (y - omega) / (1.0 + v)
    else:
        _check_sign_labels(y)
        shift = _kernels.logistic_prox_shift(np.broadcast_to(y, shape),
                                             np.broadcast_to(omega, shape), v)
    out = np.asarray(omega + shift)
    return out.reshape(shape) if shape else float(out.ravel()[0])


def proximal_domega(loss: LossModel, y, omega, v):
    """d(eta)/d(omega) = 1 / (1 + v * loss''(y, eta)), in (0, 1]."""
    v = _check_v(v)
    shape = np.broadcast(np.asarray(y), np.asarray(omega)).shape
    if loss.loss == SQUARE:
        out = np.full(shape, 1.0 / (1.0 + v))
        return out if shape else 1.0 / (1.0 + v)
    y = np.asarray(y, dtype=float)
    eta = proximal(loss, y, omega, v)
    # s(1-s) with the sign-split sigmoid keeps loss'' finite past |y eta| > 30
    u = -y * np.asarray(eta)
    s = np.where(u >= 0, 1.0 / (1.0 + np.exp(-np.clip(u, 0.0, None))),
                 np.exp(np.clip(u, None, 0.0)) / (1.0 + np.exp(np.clip(u, None, 0.0))))
    out = np.asarray(1.0 / (1.0 + v * s * (1.0 - s)))
    return out.reshape(shape) if shape else float(out.ravel()[0])
