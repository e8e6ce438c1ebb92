"""Explicit distributed control steering the system to a terminal state.

For each sine mode the terminal condition becomes the moment equation

    int_0^T e^{L(T-s)} exp_tau(D, T - tau - s) U_n(s) ds = R_n(T),

with ``R_n = Psi_n - s1n(T) - s2n(T) - m_n(T)``.  The ansatz
``U_n(t) = e^{-L(T-t)} A_n`` collapses the kernel to the delayed exponential,
whose integral is known in closed form, giving
``A_n = R_n / int_{-tau}^{T-tau} exp_tau(D, s) ds``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .delayed_exp import DelayedExp
from .errors import ControlBlowup, MissingTarget, ModeOverflow, SingularMode
from .fd_oracle import FdConfig, solve_fd
from .field import Field, fmt
from .quadrature import integrate
from .reduction import ProblemData, ReducedProblem
from .solution import build_solution, evaluate
from .spectral import (
    QUAD_ATOL,
    build_mode,
    forced_response,
    history_response,
    lift_coeff,
    mode_constants,
    sine_coeff,
    source_coeff,
)

_LOG_MAX = math.log(np.finfo(float).max)
SINGULAR_RTOL = 1e-12
# below this |D|*T the delay coupling is invisible in double precision and the
# singularity test would only measure round-off
_NEGLIGIBLE_COUPLING = 1e-9


@dataclass(frozen=True)
class ControlSeries:
    truncation: int
    horizon: float
    amplitudes: np.ndarray
    big_l: np.ndarray
    big_d: np.ndarray
    residuals: np.ndarray
    length: float
    tau: float

    def coeff(self, n: int, t):
        """``U_n(t) = exp(-L_n (T - t)) A_n``."""
        i = n - 1
        a = self.amplitudes[i]
        if a == 0.0:
            return 0.0 if np.ndim(t) == 0 else np.zeros(np.shape(t))
        out = np.exp(-self.big_l[i] * (self.horizon - np.asarray(t, float))) * a
        return float(out) if np.ndim(out) == 0 else out

    def __call__(self, x, t):
        """Assembled control ``U(x, t) = sum_n U_n(t) sin(pi n x / l)``."""
        x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        out = np.zeros(x.shape)
        for n in range(1, self.truncation + 1):
            if self.amplitudes[n - 1] != 0.0:
                out = out + self.coeff(n, t) * np.sin(math.pi * n * x / self.length)
        return out

    def sample(self, nx: int, nt: int) -> Field:
        xs = np.linspace(0.0, self.length, nx)
        ts = np.linspace(0.0, self.horizon, nt)
        return Field(xs, ts, self(xs[None, :], ts[:, None]))

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "L_n", "D_n", "R_n", "A_n"])
            for i in range(self.truncation):
                w.writerow([i + 1, fmt(self.big_l[i]), fmt(self.big_d[i]),
                            fmt(self.residuals[i]), fmt(self.amplitudes[i])])
        return path


def s1n(data: ProblemData, p: ReducedProblem, n: int, t: float) -> float:
    """Contribution of the (homogenised) history to mode ``n`` at time ``t``."""
    return history_response(build_mode(data, p, n), p.tau, t)


def s2n(data: ProblemData, p: ReducedProblem, n: int, t: float) -> float:
    """Contribution of the boundary-homogenisation source to mode ``n``."""
    ms = build_mode(data, p, n)
    return forced_response(ms, p.tau, t, source=lambda s: source_coeff(data, p, n, s))


def target_coeff(data: ProblemData, p: ReducedProblem, n: int) -> float:
    if data.target is None:
        raise MissingTarget("control synthesis needs a target state")
    return sine_coeff(data.target, p.length, n)


def residual(data: ProblemData, p: ReducedProblem, n: int, T: float) -> float:
    """``R_n(T) = Psi_n - s1n(T) - s2n(T) - m_n(T)``."""
    psi_n = target_coeff(data, p, n)
    if not T > 0:
        raise ValueError("horizon must be positive")
    m_T = lift_coeff(float(np.asarray(data.bnd_left(np.float64(T)))),
                     float(np.asarray(data.bnd_right(np.float64(T)))), n)
    return psi_n - s1n(data, p, n, T) - s2n(data, p, n, T) - m_T


def synthesize(data: ProblemData, p: ReducedProblem, N: int, T: float) -> ControlSeries:
    if not T > 0:
        raise ValueError("horizon must be positive")
    if N < 1:
        raise ValueError("need at least one mode")
    if data.target is None:
        raise MissingTarget("control synthesis needs a target state")
    amps = np.zeros(N)
    ls = np.zeros(N)
    ds = np.zeros(N)
    rs = np.zeros(N)
    for n in range(1, N + 1):
        try:
            big_l, big_d, _ = mode_constants(p, n)
        except ModeOverflow as exc:
            raise ControlBlowup(f"mode {n}: {exc}", mode=n) from exc
        if -big_l * T > _LOG_MAX:
            raise ControlBlowup(
                f"mode {n}: exp(-L_n T) = exp({-big_l * T:.4g}) overflows; "
                "lower the mode count or lengthen the horizon", mode=n)
        kernel = DelayedExp(big_d, p.tau)
        weight = kernel.integral(T)
        e_T = 1.0 + big_d * weight
        if (abs(big_d) * T >= _NEGLIGIBLE_COUPLING
                and abs(e_T - 1.0) < SINGULAR_RTOL * (1.0 + abs(e_T))):
            raise SingularMode(
                f"mode {n}: exp_tau(D_n, T) = 1 to working precision "
                f"(D_n = {big_d:.6g}, T = {T:.6g})", mode=n)
        if not math.isfinite(weight):
            raise ControlBlowup(f"mode {n}: kernel integral overflows", mode=n)
        try:
            r = residual(data, p, n, T)
        except ModeOverflow as exc:
            raise ControlBlowup(f"mode {n}: {exc}", mode=n) from exc
        a = r / weight
        if not math.isfinite(a) or not math.isfinite(math.exp(-big_l * T) * a):
            raise ControlBlowup(f"mode {n}: |U_n(0)| overflows", mode=n)
        amps[n - 1] = a
        ls[n - 1] = big_l
        ds[n - 1] = big_d
        rs[n - 1] = r
    return ControlSeries(N, float(T), amps, ls, ds, rs, p.length, p.tau)


def moment_integral(cs: ControlSeries, n: int) -> float:
    """Left side of the moment equation after ``t = T - tau - s``:

    ``int_{-tau}^{T-tau} e^{L(tau+t)} exp_tau(D, t) U_n(T - tau - t) dt``.
    """
    i = n - 1
    L = cs.big_l[i]
    E = DelayedExp(cs.big_d[i], cs.tau)
    T, tau = cs.horizon, cs.tau

    def integrand(t):
        return np.exp(L * (tau + t)) * E(t) * cs.coeff(n, T - tau - t)

    return integrate(integrand, -tau, T - tau, points=E.knots(T - tau), atol=QUAD_ATOL)


def verify_moment(cs: ControlSeries, p: ReducedProblem, n: int) -> float:
    """Relative defect ``|LHS - R_n| / (1 + |R_n|)`` of the moment equation."""
    if not 1 <= n <= cs.truncation:
        raise ValueError(f"mode {n} not in 1..{cs.truncation}")
    r = cs.residuals[n - 1]
    return abs(moment_integral(cs, n) - r) / (1.0 + abs(r))


@dataclass
class SteeringReport:
    series_error: float
    oracle_error: float
    moment_defects: list[float]

    def to_text(self) -> str:
        lines = [
            f"series_terminal_error {self.series_error:.6e}",
            f"oracle_terminal_error {self.oracle_error:.6e}",
        ]
        lines += [f"moment_defect n={i + 1} {d:.6e}" for i, d in enumerate(self.moment_defects)]
        return "\n".join(lines) + "\n"


def verify_steering(cs: ControlSeries, data: ProblemData, p: ReducedProblem,
                    grid: FdConfig, samples: int = 101) -> SteeringReport:
    """Terminal mismatch ``max_x |u(x, T) - Psi(x)|`` with the control as source.

    Both the series representation and the finite-difference oracle are run.
    """
    if data.target is None:
        raise MissingTarget("steering check needs a target state")
    T = cs.horizon
    controlled = data.with_forcing(cs)
    sol = build_solution(p, controlled, T, truncation=cs.truncation)
    xs = np.linspace(0.0, p.length, samples)
    series = evaluate(sol, xs, T)
    want = np.broadcast_to(np.asarray(data.target(xs), float), xs.shape)
    series_err = float(np.abs(series - want).max())

    fd = solve_fd(p, data, cs, grid, T)
    want_fd = np.broadcast_to(np.asarray(data.target(fd.xs), float), fd.xs.shape)
    oracle_err = float(np.abs(fd.values[-1] - want_fd).max())
    defects = [verify_moment(cs, p, n) for n in range(1, cs.truncation + 1)]
    return SteeringReport(series_err, oracle_err, defects)
