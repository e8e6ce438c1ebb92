"""Fourier sine machinery and the per-mode delay equation.

Writing ``u = w + lift`` with the affine boundary lift
``lift(x, t) = mu1(t) + (mu2(t) - mu1(t)) * x / l`` turns the canonical problem
into one with homogeneous Dirichlet data.  Expanding ``w`` in
``sin(pi*n*x/l)`` decouples it into scalar delay equations

    y_n'(t) = L_n*y_n(t) + raw_n*y_n(t - tau) + F_n(t),   y_n = Phi_n on [-tau, 0]

with ``L_n = c1 - a1sq*(pi*n/l)**2`` and ``raw_n = c2 - a2sq*(pi*n/l)**2``.
:func:`mode_solve` evaluates the delayed-exponential representation of
``y_n``; :func:`mode_solve_steps` integrates the same equation directly and
serves as its independent check.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .delayed_exp import DelayedExp
from .errors import ModeOverflow
from .quadrature import integrate
from .reduction import ProblemData, ReducedProblem

QUAD_ATOL = 1e-11
QUAD_MAX_DEPTH = 30
_LOG_MAX = math.log(np.finfo(float).max)


class ModeConstants(NamedTuple):
    big_l: float
    big_d: float
    raw_delay: float


def mode_constants(p: ReducedProblem, n: int) -> ModeConstants:
    if n < 1:
        raise ValueError("mode index starts at 1")
    k2 = (math.pi * n / p.length) ** 2
    big_l = p.c1 - p.a1sq * k2
    raw = p.c2 - p.a2sq * k2
    if raw == 0.0:
        return ModeConstants(big_l, 0.0, 0.0)
    growth = -big_l * p.tau
    if growth > _LOG_MAX:
        raise ModeOverflow(f"exp(-L_{n}*tau) overflows (L_{n}*tau = {-growth:.4g})", mode=n)
    return ModeConstants(big_l, raw * math.exp(growth), raw)


def broadcast_eval(fn: Callable, *args) -> np.ndarray:
    arrays = [np.asarray(a, dtype=float) for a in args]
    shape = np.broadcast_shapes(*(a.shape for a in arrays))
    return np.broadcast_to(np.asarray(fn(*arrays), dtype=float), shape)


def sine_coeffs(g: Callable, length: float, ns, ts=None) -> np.ndarray:
    """Batched ``(2/l) int_0^l g(xi[, t]) sin(pi n xi / l) dxi``.

    With ``ts`` given, ``g`` takes ``(xi, t)`` and the result has shape
    ``(len(ts), len(ns))``; otherwise ``g`` takes ``xi`` and the result has
    shape ``(len(ns),)``.  All components share one adaptive partition.
    """
    ns = np.atleast_1d(np.asarray(ns, dtype=float))
    freq = math.pi * ns / length
    nmax = int(ns.max())
    breaks = [length * k / nmax for k in range(1, nmax)]

    if ts is None:
        def integrand(xi):
            vals = broadcast_eval(g, xi)
            return vals[None, :] * np.sin(freq[:, None] * xi[None, :])
    else:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))

        def integrand(xi):
            vals = broadcast_eval(g, xi[None, :], ts[:, None])
            return vals[:, None, :] * np.sin(freq[None, :, None] * xi[None, None, :])

    out = integrate(integrand, 0.0, length, points=breaks,
                    atol=QUAD_ATOL * length / 2, max_depth=QUAD_MAX_DEPTH)
    return (2.0 / length) * np.asarray(out)


def sine_coeff(g: Callable, length: float, n: int) -> float:
    """``(2/l) int_0^l g(xi) sin(pi n xi / l) dxi`` by adaptive quadrature."""
    return float(sine_coeffs(g, length, [n])[0])


def lift_coeff(mu1_val, mu2_val, n):
    """Sine coefficient of the affine lift between ``mu1_val`` and ``mu2_val``.

    Closed form ``2/(pi n) * (mu1 - (-1)**n * mu2)``; ``n`` may be an array.
    """
    n = np.asarray(n)
    sign = np.where(n % 2 == 1, -1.0, 1.0)
    out = (2.0 / (math.pi * n)) * (np.asarray(mu1_val, float) - sign * np.asarray(mu2_val, float))
    return float(out) if np.ndim(out) == 0 else out


def _lift_coeff_at(data: ProblemData, n: int, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return lift_coeff(broadcast_eval(data.bnd_left, t), broadcast_eval(data.bnd_right, t), n)


def _scalar_or_array(out, t):
    return float(out) if np.ndim(t) == 0 else np.asarray(out)


def source_coeff(data: ProblemData, p: ReducedProblem, n: int, t):
    """Source produced by homogenising the boundary lift.

    ``c1*m_n(t) + c2*m_n(t - tau) - m_n'(t)`` with the derivative taken by a
    central difference of step ``1e-6*max(1, |t|)``.
    """
    t = np.asarray(t, dtype=float)
    h = 1e-6 * np.maximum(1.0, np.abs(t))
    m_now = _lift_coeff_at(data, n, t)
    m_del = _lift_coeff_at(data, n, t - p.tau) if p.c2 != 0 else 0.0
    slope = (_lift_coeff_at(data, n, t + h) - _lift_coeff_at(data, n, t - h)) / (2 * h)
    return _scalar_or_array(p.c1 * m_now + p.c2 * m_del - slope, t)


def history_coeff(data: ProblemData, p: ReducedProblem, n: int, s):
    """Homogenised history coefficient ``phi_n(s) - m_n(s)``."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    phi = sine_coeffs(data.history, p.length, [n], s_arr)[:, 0]
    out = phi - _lift_coeff_at(data, n, s_arr)
    return _scalar_or_array(out.reshape(np.shape(s)), s)


def forcing_coeff(data: ProblemData, p: ReducedProblem, n: int, t):
    """Sine coefficient of the forcing plus the homogenisation source."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    f_n = sine_coeffs(data.forcing, p.length, [n], t_arr)[:, 0]
    out = f_n + np.atleast_1d(source_coeff(data, p, n, t_arr))
    return _scalar_or_array(out.reshape(np.shape(t)), t)


@dataclass(frozen=True)
class ModeState:
    """Constants and coefficient functions of one sine mode.

    ``history_coeff`` and ``forcing_coeff`` take a time (scalar or array).
    """

    index: int
    big_l: float
    big_d: float
    raw_delay: float
    history_coeff: Callable
    forcing_coeff: Callable | None = None


def build_mode(data: ProblemData, p: ReducedProblem, n: int) -> ModeState:
    big_l, big_d, raw = mode_constants(p, n)
    return ModeState(
        index=n,
        big_l=big_l,
        big_d=big_d,
        raw_delay=raw,
        history_coeff=lambda s: history_coeff(data, p, n, s),
        forcing_coeff=lambda t: forcing_coeff(data, p, n, t),
    )


def _finite(values, ms: ModeState, what: str):
    if not np.all(np.isfinite(values)):
        raise ModeOverflow(f"{what} of mode {ms.index} left the floating range", mode=ms.index)
    return values


def _knots(t: float, tau: float, offset: int, lo: float, hi: float) -> list[float]:
    # s-values where t - offset*tau - s hits a multiple of tau
    out = []
    j = 0
    while True:
        s = t - (offset + j) * tau
        if s <= lo:
            break
        if s < hi:
            out.append(s)
        j += 1
    return out


def history_response(ms: ModeState, tau: float, t: float) -> float:
    """Free response to the history:

    ``e^{L t} exp_tau(D, t - tau) Phi(0)
    + D int_{-tau}^0 e^{L(t-s)} exp_tau(D, t - 2tau - s) Phi(s) ds``.
    """
    E = DelayedExp(ms.big_d, tau)
    L = ms.big_l
    with np.errstate(over="ignore", invalid="ignore"):
        lead = _finite(math.exp(L * t) * E(t - tau) if L * t < _LOG_MAX else math.inf,
                       ms, "history response")
    phi0 = float(np.asarray(ms.history_coeff(0.0)))
    out = lead * phi0 if phi0 != 0.0 else 0.0
    hi = min(0.0, t - tau)
    if ms.big_d == 0.0 or hi <= -tau:
        return _finite(out, ms, "history response")

    def integrand(s):
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.exp(L * (t - s)) * E(t - 2 * tau - s) * ms.history_coeff(s)
        return _finite(v, ms, "history integrand")

    out += ms.big_d * integrate(integrand, -tau, hi, points=_knots(t, tau, 2, -tau, hi),
                                atol=QUAD_ATOL, max_depth=QUAD_MAX_DEPTH)
    return _finite(out, ms, "history response")


def forced_response(ms: ModeState, tau: float, t: float, source: Callable | None = None) -> float:
    """``int_0^t e^{L(t-s)} exp_tau(D, t - tau - s) F(s) ds``."""
    source = ms.forcing_coeff if source is None else source
    if source is None or t <= 0:
        return 0.0
    E = DelayedExp(ms.big_d, tau)
    L = ms.big_l

    def integrand(s):
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.exp(L * (t - s)) * E(t - tau - s) * source(s)
        return _finite(v, ms, "forcing integrand")

    return integrate(integrand, 0.0, t, points=_knots(t, tau, 0, 0.0, t),
                     atol=QUAD_ATOL, max_depth=QUAD_MAX_DEPTH)


def mode_solve(ms: ModeState, tau: float, t: float) -> float:
    """``y_n(t)`` from the delayed-exponential representation."""
    if t < 0:
        raise ValueError("mode_solve is defined for t >= 0")
    return history_response(ms, tau, t) + forced_response(ms, tau, t)


def mode_solve_steps(ms: ModeState, tau: float, t: float, dt: float) -> float:
    """``y_n(t)`` by the method of steps with classical RK4.

    The step is shrunk so that it divides ``tau``; delayed values come from the
    history function or from cubic Hermite interpolation of stored steps.
    History and forcing coefficients are evaluated once, in batch, at every
    stage time.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    L = ms.big_l
    B = ms.raw_delay
    phi = ms.history_coeff
    F = ms.forcing_coeff

    if t <= 0:
        return float(np.asarray(phi(t)))

    per = max(1, math.ceil(tau / dt - 1e-9))
    h = tau / per
    nfull = int(math.floor(t / h + 1e-9))
    steps = [h] * nfull
    rem = t - nfull * h
    if rem > 1e-12 * max(1.0, t):
        steps.append(rem)

    starts = np.empty(len(steps) + 1)
    starts[0] = 0.0
    for i, step in enumerate(steps):
        starts[i + 1] = starts[i] + step
    widths = np.asarray(steps)
    mids = starts[:-1] + widths / 2

    def batch(fn, times):
        return np.broadcast_to(np.asarray(fn(times), dtype=float), times.shape)

    zeros = np.zeros(starts.size)
    f_at = batch(F, starts) if F is not None else zeros
    f_mid = batch(F, mids) if F is not None else zeros[:-1]
    if B != 0.0:
        # history is only needed where the delayed argument is <= 0
        h_at = batch(phi, np.minimum(starts - tau, 0.0))
        h_mid = batch(phi, np.minimum(mids - tau, 0.0))
    y0 = float(np.asarray(phi(0.0)))

    ys = [y0]
    dys = []

    def delayed(u, known):
        i = min(max(int(np.searchsorted(starts[:known], u)) - 1, 0), known - 2)
        t0, t1 = starts[i], starts[i + 1]
        w = t1 - t0
        th = (u - t0) / w
        h00 = (1 + 2 * th) * (1 - th) ** 2
        h10 = th * (1 - th) ** 2
        h01 = th * th * (3 - 2 * th)
        h11 = th * th * (th - 1)
        return h00 * ys[i] + h10 * w * dys[i] + h01 * ys[i + 1] + h11 * w * dys[i + 1]

    def lagged(u, hist_val, known):
        if B == 0.0:
            return 0.0
        return B * (hist_val if u <= 0.0 else delayed(u, known))

    dys.append(L * y0 + lagged(-tau, h_at[0] if B else 0.0, 1) + f_at[0])
    y = y0
    for i, step in enumerate(steps):
        k1 = dys[-1]
        d_mid = lagged(mids[i] - tau, h_mid[i] if B else 0.0, i + 1)
        k2 = L * (y + step / 2 * k1) + d_mid + f_mid[i]
        k3 = L * (y + step / 2 * k2) + d_mid + f_mid[i]
        d_end = lagged(starts[i + 1] - tau, h_at[i + 1] if B else 0.0, i + 1)
        k4 = L * (y + step * k3) + d_end + f_at[i + 1]
        y = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys.append(y)
        dys.append(L * y + d_end + f_at[i + 1])
    return y
