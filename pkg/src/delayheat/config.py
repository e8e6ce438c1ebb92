"""Scenario configuration files.

INI-style text with three sections::

    [problem]            # a1, a2, b1, b2, d1, d2  or  a1sq, a2sq, c1, c2
    a1sq = 1.0
    tau = 0.5
    l = 3.141592653589793

    [data]               # expressions in x, t (s is an alias of t)
    history = "sin(x)"
    bnd_left = "0"
    bnd_right = "0"
    forcing = "0"
    target = "sin(x)"    # control scenarios only

    [run]
    T = 1.0
    modes = 16

Expressions may use ``pi``, ``tau``, ``l`` and ``T``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .exprparse import space_function, space_time_function, time_function
from .fd_oracle import SCHEMES, FdConfig
from .reduction import (
    OriginalProblem,
    ProblemData,
    ReducedProblem,
    map_data,
    reduce,
)

ORIGINAL_KEYS = ("a1", "a2", "b1", "b2", "d1", "d2")
REDUCED_KEYS = ("a1sq", "a2sq", "c1", "c2")
SHARED_KEYS = ("tau", "l")
DATA_KEYS = ("history", "bnd_left", "bnd_right", "forcing", "target")


class ConfigError(InputError):
    pass


@dataclass
class RunConfig:
    T: float
    modes: int = 16
    delta: float = 0.5
    fd_nx: int = 200
    fd_dt: float | None = None
    fd_scheme: str = "crank-nicolson"
    sample_nx: int = 41
    sample_nt: int = 21
    out: str | None = None

    def fd_config(self, tau: float) -> FdConfig:
        dt = self.fd_dt if self.fd_dt is not None else tau / 200
        return FdConfig(self.fd_nx, dt, self.fd_scheme)


@dataclass
class ScenarioConfig:
    kind: str
    problem: dict[str, float]
    data: dict[str, str]
    run: RunConfig
    source: str | None = field(default=None, compare=False)

    @property
    def tau(self) -> float:
        return self.problem["tau"]

    @property
    def length(self) -> float:
        return self.problem["l"]

    def constants(self) -> dict[str, float]:
        return {"tau": self.tau, "l": self.length, "T": self.run.T}


def _unquote(text: str) -> str:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def _float(section: str, key: str, raw: str) -> float:
    try:
        value = float(_unquote(raw))
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from None
    if not math.isfinite(value):
        raise ConfigError(f"[{section}] {key} must be finite")
    return value


def _int(section: str, key: str, raw: str) -> int:
    try:
        return int(_unquote(raw))
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not an integer") from None


def parse_config(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    for sec in cp.sections():
        if sec not in ("problem", "data", "run"):
            raise ConfigError(f"unknown section [{sec}]")
    if not cp.has_section("problem"):
        raise ConfigError("missing [problem] section")

    prob = dict(cp["problem"])
    unknown = set(prob) - set(ORIGINAL_KEYS) - set(REDUCED_KEYS) - set(SHARED_KEYS)
    if unknown:
        raise ConfigError(f"unknown [problem] keys: {sorted(unknown)}")
    has_orig = any(k in prob for k in ORIGINAL_KEYS)
    has_red = any(k in prob for k in REDUCED_KEYS)
    if has_orig == has_red:
        raise ConfigError("[problem] must give exactly one of the original "
                          "(a1, a2, b1, b2, d1, d2) or reduced (a1sq, a2sq, c1, c2) coefficients")
    kind = "original" if has_orig else "reduced"
    keys = ORIGINAL_KEYS if has_orig else REDUCED_KEYS
    required = keys[0]
    for k in (required, *SHARED_KEYS):
        if k not in prob:
            raise ConfigError(f"[problem] is missing {k}")
    problem = {k: _float("problem", k, prob.get(k, "0")) for k in (*keys, *SHARED_KEYS)}

    data = {}
    if cp.has_section("data"):
        raw = dict(cp["data"])
        unknown = set(raw) - set(DATA_KEYS)
        if unknown:
            raise ConfigError(f"unknown [data] keys: {sorted(unknown)}")
        data = {k: _unquote(v) for k, v in raw.items()}
    for k in DATA_KEYS[:-1]:
        data.setdefault(k, "0")

    if not cp.has_section("run"):
        raise ConfigError("missing [run] section")
    r = dict(cp["run"])
    if "T" not in r:
        raise ConfigError("[run] is missing T")
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(r) - known
    if unknown:
        raise ConfigError(f"unknown [run] keys: {sorted(unknown)}")
    run = RunConfig(T=_float("run", "T", r["T"]))
    for k in ("modes", "fd_nx", "sample_nx", "sample_nt"):
        if k in r:
            setattr(run, k, _int("run", k, r[k]))
    for k in ("delta", "fd_dt"):
        if k in r:
            setattr(run, k, _float("run", k, r[k]))
    if "fd_scheme" in r:
        run.fd_scheme = _unquote(r["fd_scheme"])
    if "out" in r:
        run.out = _unquote(r["out"])

    cfg = ScenarioConfig(kind, problem, data, run, source=text)
    validate(cfg)
    return cfg


def validate(cfg: ScenarioConfig) -> None:
    r = cfg.run
    if not r.T > 0:
        raise ConfigError("[run] T must be positive")
    if r.modes < 1:
        raise ConfigError("[run] modes must be at least 1")
    if r.sample_nx < 2 or r.sample_nt < 2:
        raise ConfigError("[run] sample grid needs at least 2 points per axis")
    if r.fd_scheme not in SCHEMES:
        raise ConfigError(f"[run] fd_scheme must be one of {sorted(SCHEMES)}")
    if r.fd_nx < 8:
        raise ConfigError("[run] fd_nx must be at least 8")
    if r.fd_dt is not None and not r.fd_dt > 0:
        raise ConfigError("[run] fd_dt must be positive")
    if not cfg.tau > 0 or not cfg.length > 0:
        raise ConfigError("[problem] tau and l must be positive")


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def dump_config(cfg: ScenarioConfig) -> str:
    """Canonical text form; ``parse_config(dump_config(c)) == c``."""
    lines = ["[problem]"]
    for k, v in cfg.problem.items():
        lines.append(f"{k} = {v!r}")
    lines += ["", "[data]"]
    for k in DATA_KEYS:
        if k in cfg.data:
            lines.append(f'{k} = "{cfg.data[k]}"')
    lines += ["", "[run]"]
    for k, v in asdict(cfg.run).items():
        if v is None:
            continue
        lines.append(f"{k} = {v!r}" if not isinstance(v, str) else f"{k} = {v}")
    return "\n".join(lines) + "\n"


@dataclass
class Scenario:
    """A configuration turned into solver inputs."""

    config: ScenarioConfig
    problem: ReducedProblem
    data: ProblemData
    original: OriginalProblem | None

    @property
    def mu(self) -> float:
        return self.problem.mu

    def to_configured(self, xs: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Map canonical values on a grid back to the configured variables."""
        if self.mu == 0.0:
            return values
        return values * np.exp(self.mu * np.asarray(xs, float))


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    c = cfg.constants()
    d = cfg.data
    history = space_time_function(d["history"], c)
    left = time_function(d["bnd_left"], c)
    right = time_function(d["bnd_right"], c)
    forcing = space_time_function(d["forcing"], c)
    target = space_function(d["target"], c) if "target" in d else None

    if cfg.kind == "original":
        pr = cfg.problem
        orig = OriginalProblem(pr["a1"], pr["a2"], pr["b1"], pr["b2"], pr["d1"], pr["d2"],
                               pr["tau"], pr["l"])
        problem = reduce(orig)
        data = map_data(orig, history, left, right, forcing, target)
    else:
        pr = cfg.problem
        orig = None
        problem = ReducedProblem(pr["a1sq"], pr["a2sq"], pr["c1"], pr["c2"], pr["tau"], pr["l"])
        data = ProblemData(history, left, right, forcing, target)
    data.check(problem.length, problem.tau, cfg.run.T)
    return Scenario(cfg, problem, data, orig)
