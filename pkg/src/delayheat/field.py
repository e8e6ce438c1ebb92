"""Sampled space-time fields and their CSV form."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def fmt(value: float) -> str:
    """Full-precision scientific notation used in every CSV we write."""
    return f"{float(value):.16e}"


@dataclass
class Field:
    """``values[i, j] = u(xs[j], ts[i])`` on a tensor grid."""

    xs: np.ndarray
    ts: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.ts = np.asarray(self.ts, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.ts.size, self.xs.size):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.ts.size}, {self.xs.size})"
            )
        if np.any(np.diff(self.xs) <= 0) or np.any(np.diff(self.ts) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @property
    def dx(self) -> float:
        return float(self.xs[1] - self.xs[0])

    @property
    def dt(self) -> float:
        return float(self.ts[1] - self.ts[0])

    def at_time(self, t: float) -> np.ndarray:
        """Row at ``t``, linearly interpolated between stored times."""
        i = int(np.searchsorted(self.ts, t))
        if i < self.ts.size and self.ts[i] == t:
            return self.values[i]
        i = min(max(i, 1), self.ts.size - 1)
        w = (t - self.ts[i - 1]) / (self.ts[i] - self.ts[i - 1])
        return (1 - w) * self.values[i - 1] + w * self.values[i]

    def subsample(self, t_stride: int = 1, x_stride: int = 1) -> "Field":
        ti = np.arange(0, self.ts.size, t_stride)
        if ti[-1] != self.ts.size - 1:
            ti = np.append(ti, self.ts.size - 1)
        xi = np.arange(0, self.xs.size, x_stride)
        if xi[-1] != self.xs.size - 1:
            xi = np.append(xi, self.xs.size - 1)
        return Field(self.xs[xi], self.ts[ti], self.values[np.ix_(ti, xi)], dict(self.meta))

    def rows(self):
        for i, t in enumerate(self.ts):
            for j, x in enumerate(self.xs):
                yield x, t, self.values[i, j]

    def to_csv(self, path, column: str = "u", extra: dict[str, np.ndarray] | None = None) -> Path:
        """Write ``x,t,<column>[,extra...]`` rows, time-major."""
        path = Path(path)
        extra = extra or {}
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "t", column, *extra])
            for i, t in enumerate(self.ts):
                for j, x in enumerate(self.xs):
                    w.writerow([fmt(x), fmt(t), fmt(self.values[i, j]),
                                *(fmt(v[i, j]) for v in extra.values())])
        return path


def read_field_csv(path, column: str = "u") -> Field:
    """Inverse of :meth:`Field.to_csv` for the main value column."""
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    xs = np.unique([float(r["x"]) for r in rows])
    ts = np.unique([float(r["t"]) for r in rows])
    vals = np.array([float(r[column]) for r in rows]).reshape(ts.size, xs.size)
    return Field(xs, ts, vals)
