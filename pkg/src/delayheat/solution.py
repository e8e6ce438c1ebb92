"""Truncated series solution of the canonical delay heat equation.

``u(x, t) = sum_{n<=N} y_n(t) sin(pi n x / l) + mu1(t) + (mu2(t) - mu1(t)) x / l``

where ``y_n`` are the homogenised mode amplitudes of :mod:`.spectral`.  The
history, boundary and forcing contributions of the three-operator split are
all carried inside ``y_n`` through the homogenised coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModeOverflow
from .field import Field
from .reduction import ProblemData, ReducedProblem
from .spectral import (
    ModeState,
    broadcast_eval,
    build_mode,
    lift_coeff,
    mode_solve,
    sine_coeffs,
    source_coeff,
)

DEFAULT_MODES = 16


@dataclass
class SeriesSolution:
    problem: ReducedProblem
    data: ProblemData
    truncation: int
    horizon: float
    modes: list[ModeState]
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.truncation < 1:
            raise ValueError("truncation must be at least 1")

    def amplitudes(self, t: float) -> np.ndarray:
        """``[y_1(t), ..., y_N(t)]``, memoised per time."""
        t = float(t)
        hit = self._cache.get(t)
        if hit is not None:
            return hit
        out = np.empty(self.truncation)
        for i, ms in enumerate(self.modes):
            try:
                out[i] = mode_solve(ms, self.problem.tau, t)
            except ModeOverflow as exc:
                raise ModeOverflow(f"mode {ms.index} at t={t:g}: {exc}", mode=ms.index) from exc
        self._cache[t] = out
        return out

    def basis(self, x) -> np.ndarray:
        """``sin(pi n x / l)`` for n = 1..N, exactly zero at both ends."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n = np.arange(1, self.truncation + 1)
        b = np.sin(math.pi * n[:, None] * x[None, :] / self.problem.length)
        b[:, (x == 0.0) | (x == self.problem.length)] = 0.0
        return b

    def lift(self, x, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        left = float(np.asarray(self.data.bnd_left(np.float64(t))))
        right = float(np.asarray(self.data.bnd_right(np.float64(t))))
        out = left + (right - left) * x / self.problem.length
        # pin the endpoints bit-for-bit to the boundary data
        out = np.where(x == 0.0, left, out)
        return np.where(x == self.problem.length, right, out)

    def __call__(self, x, t):
        return evaluate(self, x, t)


def build_solution(problem: ReducedProblem, data: ProblemData, horizon: float,
                   truncation: int = DEFAULT_MODES) -> SeriesSolution:
    modes = [build_mode(data, problem, n) for n in range(1, truncation + 1)]
    return SeriesSolution(problem, data, truncation, float(horizon), modes)


def evaluate(sol: SeriesSolution, x, t: float):
    """``u(x, t)``; ``x`` may be an array, ``t`` is a scalar."""
    if t < 0 or t > sol.horizon * (1 + 1e-12):
        raise ValueError(f"t={t} outside [0, {sol.horizon}]")
    y = sol.amplitudes(t)
    out = y @ sol.basis(x) + sol.lift(np.atleast_1d(np.asarray(x, float)), t)
    return float(out[0]) if np.ndim(x) == 0 else out


def sample(sol: SeriesSolution, nx: int, nt: int, t0: float = 0.0) -> Field:
    """Uniform ``nt x nx`` grid over ``[0, l] x [t0, T]``."""
    if nx < 2 or nt < 2:
        raise ValueError("need at least two points per axis")
    xs = np.linspace(0.0, sol.problem.length, nx)
    ts = np.linspace(t0, sol.horizon, nt)
    return sample_on(sol, xs, ts)


def sample_on(sol: SeriesSolution, xs, ts) -> Field:
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    basis = sol.basis(xs)
    values = np.empty((ts.size, xs.size))
    for i, t in enumerate(ts):
        values[i] = sol.amplitudes(t) @ basis + sol.lift(xs, t)
    return Field(xs, ts, values)


def tail_estimate(sol: SeriesSolution) -> float:
    """``|y_N(T)|``, reported as a crude truncation indicator."""
    return float(abs(sol.amplitudes(sol.horizon)[-1]))


# --- regularity heuristic -------------------------------------------------

@dataclass
class DecayEstimate:
    quantity: str
    exponent: float
    threshold: float
    points: int

    @property
    def verdict(self) -> str:
        return "pass" if self.exponent > self.threshold else "warn"


@dataclass
class RegularityReport:
    horizon: float
    steps: int
    delta: float
    truncation: int
    estimates: list[DecayEstimate]

    @property
    def verdict(self) -> str:
        return "pass" if all(e.verdict == "pass" for e in self.estimates) else "warn"

    def to_text(self) -> str:
        lines = [
            f"regularity verdict: {self.verdict}",
            f"T={self.horizon:g} m={self.steps} delta={self.delta:g} "
            f"fit range n={self.truncation // 2}..{self.truncation}",
            f"{'quantity':<16} {'exponent':>10} {'threshold':>10} {'points':>6}  verdict",
        ]
        for e in self.estimates:
            exp = "vanishing" if math.isinf(e.exponent) else f"{e.exponent:10.3f}"
            lines.append(f"{e.quantity:<16} {exp:>10} {e.threshold:10.3f} {e.points:6d}  {e.verdict}")
        return "\n".join(lines) + "\n"


def _decay_exponent(ns: np.ndarray, values: np.ndarray, floor: float) -> tuple[float, int]:
    keep = values > floor
    if keep.sum() < 3:
        return math.inf, int(keep.sum())
    slope = np.polyfit(np.log(ns[keep]), np.log(values[keep]), 1)[0]
    return float(-slope), int(keep.sum())


def regularity_check(data: ProblemData, p: ReducedProblem, T: float, N: int,
                     delta: float, samples: int = 17) -> RegularityReport:
    """Fit decay exponents of the data's Fourier coefficients.

    With ``m = ceil(T/tau)``, the history coefficients must decay faster than
    ``n^-(2m+5+delta)``, their first and second time derivatives faster than
    ``n^-(2m+3+delta)`` and ``n^-(2m+1+delta)``.  On the window
    ``[(k-1) tau, k tau]`` the forcing coefficients must beat
    ``n^-(2(m-k)+3+delta)`` and their derivatives ``n^-(2(m-k)+1+delta)``.
    Exponents come from a log-log least-squares fit over ``n = N/2..N``;
    values at quadrature noise level are dropped, and a sequence with fewer
    than three surviving points counts as vanishing.
    """
    if N < 8:
        raise ValueError("regularity check needs N >= 8")
    tau = p.tau
    m = max(1, math.ceil(T / tau - 1e-9))
    ns_all = np.arange(1, N + 1)
    fit = ns_all >= N // 2

    s = np.linspace(-tau, 0.0, samples)
    phi = sine_coeffs(data.history, p.length, ns_all, s)
    left = broadcast_eval(data.bnd_left, s)[:, None]
    right = broadcast_eval(data.bnd_right, s)[:, None]
    phi = phi - lift_coeff(left, right, ns_all[None, :])
    dphi = np.gradient(phi, s, axis=0, edge_order=2)
    d2phi = np.gradient(dphi, s, axis=0, edge_order=2)

    scale = max(float(np.abs(phi).max()), 1e-300)
    h = s[1] - s[0]
    base_floor = max(1e-10, 1e-13 * scale)

    estimates = []
    for name, arr, thr, fl in (
        ("history", phi, 2 * m + 5 + delta, base_floor),
        ("history_dt", dphi, 2 * m + 3 + delta, base_floor / h),
        ("history_dtt", d2phi, 2 * m + 1 + delta, base_floor / h**2),
    ):
        vals = np.abs(arr).max(axis=0)
        exp, npts = _decay_exponent(ns_all[fit], vals[fit], fl)
        estimates.append(DecayEstimate(name, exp, thr, npts))

    for k in range(1, m + 1):
        lo = (k - 1) * tau
        hi = min(k * tau, T)
        if hi <= lo:
            break
        t = np.linspace(lo, hi, samples)
        F = sine_coeffs(data.forcing, p.length, ns_all, t)
        F = F + np.stack([np.asarray(source_coeff(data, p, int(n), t)) for n in ns_all], axis=1)
        dF = np.gradient(F, t, axis=0, edge_order=2)
        fscale = max(float(np.abs(F).max()), 1e-300)
        ffloor = max(1e-10, 1e-13 * fscale)
        ht = t[1] - t[0]
        for name, arr, thr, fl in (
            (f"forcing[{k}]", F, 2 * (m - k) + 3 + delta, ffloor),
            (f"forcing_dt[{k}]", dF, 2 * (m - k) + 1 + delta, ffloor / ht),
        ):
            vals = np.abs(arr).max(axis=0)
            exp, npts = _decay_exponent(ns_all[fit], vals[fit], fl)
            estimates.append(DecayEstimate(name, exp, thr, npts))

    return RegularityReport(float(T), m, float(delta), N, estimates)

