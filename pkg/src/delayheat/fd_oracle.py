"""Finite-difference reference solver for the canonical delay heat equation.

Method of steps on a uniform grid: the delayed terms ``a2sq*u_xx(t - tau)``
and ``c2*u(t - tau)`` are read from stored slices (or from the history when
``t - tau <= 0``) and treated as known data; the current-time diffusion and
reaction are implicit Euler or Crank-Nicolson.  The delay is snapped to a
whole number of steps.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import InputError, UnstableRun
from .field import Field
from .reduction import ProblemData, ReducedProblem
from .spectral import broadcast_eval

log = logging.getLogger(__name__)

SCHEMES = {"implicit-euler": 1.0, "crank-nicolson": 0.5}
BLOWUP_FACTOR = 1e12


@dataclass(frozen=True)
class FdConfig:
    nx: int = 200
    dt: float = 1e-3
    scheme: str = "crank-nicolson"

    def __post_init__(self):
        if self.nx < 8:
            raise InputError("fd grid needs nx >= 8")
        if not self.dt > 0:
            raise InputError("fd time step must be positive")
        if self.scheme not in SCHEMES:
            raise InputError(f"unknown scheme {self.scheme!r}; choose from {sorted(SCHEMES)}")


def _second_diff(u: np.ndarray, h: float) -> np.ndarray:
    return (u[:-2] - 2.0 * u[1:-1] + u[2:]) / (h * h)


def solve_fd(p: ReducedProblem, data: ProblemData, source: Callable | None,
             cfg: FdConfig, T: float) -> Field:
    """March the canonical problem to ``T`` and return every time slice.

    ``source(x, t)`` replaces the forcing (pass ``data.forcing`` or a control);
    ``None`` means no source.
    """
    if not T > 0:
        raise InputError("horizon must be positive")
    l = p.length
    nx = cfg.nx
    xs = np.linspace(0.0, l, nx + 1)
    xi = xs[1:-1]
    h = l / nx
    nsteps = max(1, math.ceil(T / cfg.dt - 1e-9))
    dt = T / nsteps
    K = max(1, round(p.tau / dt))
    snap = abs(p.tau - K * dt)
    theta = SCHEMES[cfg.scheme]
    ts = np.arange(nsteps + 1) * dt
    ts[-1] = T

    # CFL-like bound for the explicit delayed diffusion; informative only
    log.info("fd: nx=%d dt=%.3e steps=%d delay_steps=%d snap_error=%.3e "
             "explicit-delay ratio a2sq*dt/h^2=%.3g",
             nx, dt, nsteps, K, snap, p.a2sq * dt / h**2)

    hist = np.stack([broadcast_eval(data.history, xs, (j - K) * dt) for j in range(K + 1)])
    U = np.empty((nsteps + 1, nx + 1))
    U[0] = hist[K]

    def delayed(k: int) -> np.ndarray:
        return U[k] if k >= 0 else hist[k + K]

    def left(t):
        return float(broadcast_eval(data.bnd_left, t))

    def right(t):
        return float(broadcast_eval(data.bnd_right, t))

    U[0, 0] = left(0.0)
    U[0, -1] = right(0.0)

    def src(t):
        if source is None:
            return np.zeros(xi.size)
        return broadcast_eval(source, xi, t)

    def explicit_part(k: int, t: float, s: np.ndarray) -> np.ndarray:
        d = delayed(k - K)
        return p.a2sq * _second_diff(d, h) + p.c2 * d[1:-1] + s

    # (I - theta*dt*(a1sq*Lap + c1)) on interior nodes, banded storage
    m = nx - 1
    ab = np.zeros((3, m))
    ab[0, 1:] = -theta * dt * p.a1sq / h**2
    ab[1, :] = 1.0 + theta * dt * (2.0 * p.a1sq / h**2 - p.c1)
    ab[2, :-1] = -theta * dt * p.a1sq / h**2

    norm = max(float(np.abs(hist).max()), abs(left(0.0)), abs(right(0.0)))
    s_prev = src(0.0)
    g_prev = explicit_part(0, 0.0, s_prev)
    for k in range(nsteps):
        t1 = ts[k + 1]
        s_next = src(t1)
        norm = max(norm, float(np.abs(s_next).max()) * max(T, 1.0))
        g_next = explicit_part(k + 1, t1, s_next)
        u = U[k]
        rhs = u[1:-1] + dt * (theta * g_next + (1 - theta) * g_prev)
        if theta < 1.0:
            rhs += (1 - theta) * dt * (p.a1sq * _second_diff(u, h) + p.c1 * u[1:-1])
        b0, b1 = left(t1), right(t1)
        rhs[0] += theta * dt * p.a1sq * b0 / h**2
        rhs[-1] += theta * dt * p.a1sq * b1 / h**2
        U[k + 1, 1:-1] = solve_banded((1, 1), ab, rhs)
        U[k + 1, 0] = b0
        U[k + 1, -1] = b1
        norm = max(norm, abs(b0), abs(b1))
        peak = float(np.abs(U[k + 1]).max())
        if not math.isfinite(peak) or peak > BLOWUP_FACTOR * max(norm, 1e-300) and peak > 0:
            raise UnstableRun(f"fd solution reached {peak:.3g} at t={t1:.6g} "
                              f"(data scale {norm:.3g})")
        g_prev = g_next

    meta = {"dt": dt, "delay_steps": K, "delay_snap_error": snap, "scheme": cfg.scheme}
    return Field(xs, ts, U, meta)


def residual_fd(field: Field, p: ReducedProblem, data: ProblemData,
                source: Callable | None = None) -> float:
    """Largest centred-difference residual of the PDE over interior nodes.

    Requires a uniform grid starting at ``t = 0``; delayed values come from
    the field itself or, before ``t = 0``, from the history.
    """
    xs, ts, U = field.xs, field.ts, field.values
    if ts[0] != 0.0:
        raise ValueError("field must start at t = 0")
    dt = field.dt
    h = field.dx
    K = max(1, round(p.tau / dt))
    worst = 0.0
    for k in range(1, ts.size - 1):
        ut = (U[k + 1, 1:-1] - U[k - 1, 1:-1]) / (2 * dt)
        j = k - K
        d = U[j] if j >= 0 else broadcast_eval(data.history, xs, ts[k] - K * dt)
        f = 0.0 if source is None else broadcast_eval(source, xs[1:-1], ts[k])
        r = (ut - p.a1sq * _second_diff(U[k], h) - p.a2sq * _second_diff(d, h)
             - p.c1 * U[k, 1:-1] - p.c2 * d[1:-1] - f)
        worst = max(worst, float(np.abs(r).max()))
    return worst
