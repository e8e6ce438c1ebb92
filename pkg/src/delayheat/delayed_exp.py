"""The delayed exponential function and its closed-form integral.

``exp_tau(b, t)`` is the fundamental solution of ``y'(t) = b*y(t - tau)`` with
unit history on ``[-tau, 0]``.  It vanishes before ``-tau``, equals one on
``[-tau, 0)`` and on ``[(k-1)*tau, k*tau)`` it is the degree-``k`` polynomial

    sum_{j=0..k} b**j * (t - (j-1)*tau)**j / j!
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BEFORE_HISTORY = -1
"""Sentinel returned by :func:`segment_index` for ``t < -tau``."""

_RATE_THRESHOLD = 1e-12


def segment_index(tau: float, t):
    """Index ``k`` with ``(k-1)*tau <= t < k*tau``.

    ``k = 0`` is the history segment ``[-tau, 0)``; ``t < -tau`` gives
    :data:`BEFORE_HISTORY`.  Works elementwise on arrays.
    """
    if tau <= 0:
        raise ValueError("delay must be positive")
    t_arr = np.asarray(t, dtype=float)
    k = np.floor(t_arr / tau).astype(int) + 1
    k = np.where(t_arr < -tau, BEFORE_HISTORY, np.maximum(k, 0))
    return int(k) if k.ndim == 0 else k


def _term(rate: float, x: np.ndarray, j: int) -> np.ndarray:
    """``(rate*x)**j / j!`` without intermediate overflow for large ``j``."""
    r = rate * x
    if j <= 170:
        return r**j / float(math.factorial(j))
    mag = np.exp(j * np.log(np.abs(r)) - math.lgamma(j + 1))
    return np.where(r < 0, (-1.0) ** j, 1.0) * mag


def _eval(rate: float, tau: float, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    k = np.asarray(segment_index(tau, t))
    out = np.where(k >= 0, 1.0, 0.0)
    kmax = int(k.max()) if k.size else 0
    if rate == 0.0 or kmax < 1:
        return out
    with np.errstate(all="ignore"):
        for j in range(1, kmax + 1):
            active = k >= j
            term = _term(rate, np.where(active, t - (j - 1) * tau, 0.0), j)
            out = out + np.where(active, term, 0.0)
    return out


def _integral(rate: float, tau: float, T) -> np.ndarray:
    # (exp_tau(rate, T) - 1) / rate, summed term by term after dividing by
    # rate so nothing cancels when rate is small
    T = np.asarray(T, dtype=float)
    if np.any(T < 0):
        raise ValueError("integration horizon must be non-negative")
    if abs(rate) < _RATE_THRESHOLD / tau:
        return T.copy()
    k = np.asarray(segment_index(tau, T))
    out = np.zeros_like(T)
    kmax = int(k.max()) if k.size else 0
    with np.errstate(all="ignore"):
        for j in range(1, kmax + 1):
            active = k >= j
            x = np.where(active, T - (j - 1) * tau, 0.0)
            term = _term(rate, x, j) / rate
            out = out + np.where(active, term, 0.0)
    return out


@dataclass(frozen=True)
class DelayedExp:
    """``t -> exp_tau(rate, t)`` for fixed ``rate`` and ``delay``."""

    rate: float
    delay: float

    def __post_init__(self):
        if not self.delay > 0:
            raise ValueError(f"delay must be positive, got {self.delay}")

    def __call__(self, t):
        out = _eval(float(self.rate), float(self.delay), t)
        return float(out) if out.ndim == 0 else out

    def integral(self, T):
        """``int_{-delay}^{T-delay} exp_tau(rate, s) ds`` in closed form.

        Equal to ``(exp_tau(rate, T) - 1) / rate``; the ``rate -> 0`` limit is
        ``T``.  Overflow yields ``inf`` rather than an exception.
        """
        out = _integral(float(self.rate), float(self.delay), T)
        return float(out) if out.ndim == 0 else out

    def knots(self, t_max: float) -> list[float]:
        """Break points ``k*delay`` (``k >= -1``) up to ``t_max``."""
        kmax = int(math.floor(t_max / self.delay))
        return [k * self.delay for k in range(-1, kmax + 1)]


def delayed_exp(rate: float, delay: float, t):
    """Functional shorthand for ``DelayedExp(rate, delay)(t)``."""
    return DelayedExp(rate, delay)(t)


def delayed_exp_integral(rate: float, delay: float, T):
    return DelayedExp(rate, delay).integral(T)
