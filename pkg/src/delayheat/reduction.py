"""Reduction of the drifted delay heat equation to canonical form.

The original equation for ``v`` carries drift terms ``b1*v_x(t)`` and
``b2*v_x(t - tau)``.  With proportional drift coefficients the substitution
``v = exp(mu*x) * u``, ``mu = -b1 / (2*a1**2)``, removes both and leaves

    u_t = a1sq*u_xx + a2sq*u_xx(t - tau) + c1*u + c2*u(t - tau) + f.

Data are black-box callables vectorised over numpy arrays:
``history(x, s)``, ``bnd_left(t)``, ``bnd_right(t)``, ``forcing(x, t)`` and
``target(x)``.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, replace

import numpy as np

from .errors import CompatibilityViolation, InputError, ProportionalityViolation

COMPAT_SAMPLES = 64
COMPAT_TOL = 1e-8


@dataclass(frozen=True)
class OriginalProblem:
    a1: float
    a2: float
    b1: float
    b2: float
    d1: float
    d2: float
    tau: float
    length: float

    def __post_init__(self):
        if not self.a1 > 0:
            raise InputError("a1 must be positive")
        if self.a2 < 0:
            raise InputError("a2 must be non-negative")
        if not self.tau > 0:
            raise InputError("tau must be positive")
        if not self.length > 0:
            raise InputError("length must be positive")


@dataclass(frozen=True)
class ReducedProblem:
    a1sq: float
    a2sq: float
    c1: float
    c2: float
    tau: float
    length: float
    mu: float = 0.0

    def __post_init__(self):
        if not self.a1sq > 0:
            raise InputError("a1sq must be positive")
        if self.a2sq < 0:
            raise InputError("a2sq must be non-negative")
        if not self.tau > 0:
            raise InputError("tau must be positive")
        if not self.length > 0:
            raise InputError("length must be positive")


def _zero_space(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _zero_space_time(x, t):
    return np.zeros(np.broadcast(np.asarray(x, float), np.asarray(t, float)).shape)


@dataclass(frozen=True)
class ProblemData:
    history: Callable
    bnd_left: Callable
    bnd_right: Callable
    forcing: Callable = _zero_space_time
    target: Callable | None = None

    def with_forcing(self, forcing: Callable) -> "ProblemData":
        return replace(self, forcing=forcing)

    def check(self, length: float, tau: float, T: float | None = None,
              samples: int = COMPAT_SAMPLES, tol: float = COMPAT_TOL) -> None:
        """Sampled corner compatibility; raises :class:`CompatibilityViolation`."""
        check_compatibility(self.history, self.bnd_left, self.bnd_right,
                            length, tau, samples=samples, tol=tol)
        if self.target is not None and T is not None:
            for x, bnd in ((0.0, self.bnd_left), (length, self.bnd_right)):
                want = float(np.asarray(bnd(np.float64(T)), dtype=float))
                got = float(np.asarray(self.target(np.float64(x)), dtype=float))
                if abs(got - want) > tol * (1 + abs(want)):
                    raise CompatibilityViolation(
                        f"target({x:g}) = {got:.10g} but boundary at T={T:g} is {want:.10g}",
                        where=(x, T),
                    )


def zero_data() -> ProblemData:
    return ProblemData(_zero_space_time, _zero_space, _zero_space)


def check_compatibility(history, left, right, length, tau,
                        samples=COMPAT_SAMPLES, tol=COMPAT_TOL) -> None:
    s = np.linspace(-tau, 0.0, samples)
    for x, bnd, name in ((0.0, left, "left"), (length, right, "right")):
        h = np.broadcast_to(np.asarray(history(np.full_like(s, x), s), dtype=float), s.shape)
        b = np.broadcast_to(np.asarray(bnd(s), dtype=float), s.shape)
        bad = np.abs(h - b) > tol * (1 + np.abs(b))
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise CompatibilityViolation(
                f"history and {name} boundary differ at x={x:g}, s={s[i]:.6g}: "
                f"{h[i]:.10g} vs {b[i]:.10g}",
                where=(x, float(s[i])),
            )


_TINY = float(np.finfo(float).tiny)


def reduce(orig: OriginalProblem, rtol: float = 1e-12) -> ReducedProblem:
    a1sq = orig.a1**2
    a2sq = orig.a2**2
    lhs = orig.b1 * a2sq
    rhs = orig.b2 * a1sq
    # subnormal coefficients carry too few bits for a relative test
    if abs(lhs - rhs) > rtol * max(abs(lhs), abs(rhs)) + _TINY:
        raise ProportionalityViolation(
            f"b1*a2^2 = {lhs:.12g} differs from b2*a1^2 = {rhs:.12g}"
        )
    mu = -orig.b1 / (2 * a1sq)
    c1 = orig.d1 - orig.b1**2 / (4 * a1sq)
    c2 = orig.d2 - orig.b2**2 / (4 * a2sq) if a2sq > 0 else orig.d2
    return ReducedProblem(a1sq, a2sq, c1, c2, orig.tau, orig.length, mu)


def map_data(orig: OriginalProblem, psi, theta1, theta2, g=None, target=None,
             samples: int = COMPAT_SAMPLES) -> ProblemData:
    """Transform original-variable data to the canonical problem.

    ``phi = exp(-mu x) psi``, ``mu1 = theta1``, ``mu2 = exp(-mu l) theta2``,
    ``f = exp(-mu x) g`` and, when given, ``Psi = exp(-mu x) target``.
    """
    check_compatibility(psi, theta1, theta2, orig.length, orig.tau, samples=samples)
    mu = -orig.b1 / (2 * orig.a1**2)
    scale_right = np.exp(-mu * orig.length)

    def history(x, s):
        return np.exp(-mu * np.asarray(x, float)) * psi(x, s)

    def bnd_right(t):
        return scale_right * np.asarray(theta2(t), dtype=float)

    forcing = _zero_space_time
    if g is not None:
        def forcing(x, t):
            return np.exp(-mu * np.asarray(x, float)) * g(x, t)

    mapped_target = None
    if target is not None:
        def mapped_target(x):
            return np.exp(-mu * np.asarray(x, float)) * target(x)

    return ProblemData(history, theta1, bnd_right, forcing, mapped_target)


def lift_solution(mu: float, u: Callable) -> Callable:
    """``v(x, t) = exp(mu*x) * u(x, t)``."""
    if mu == 0.0:
        return u

    def v(x, t):
        return np.exp(mu * np.asarray(x, float)) * u(x, t)

    return v
