"""Command line front end: ``dhc solve|control|verify|check|expfig``.

Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure.
Failures print one line to stderr of the form::

    dhc: error code=3 kind=ControlBlowup mode=27 message="..."
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .config import (
    ConfigError,
    Scenario,
    ScenarioConfig,
    build_scenario,
    dump_config,
    load_config,
)
from .control import synthesize, verify_steering
from .delayed_exp import DelayedExp
from .errors import InputError, NumericalFailure
from .exprparse import space_time_function
from .fd_oracle import solve_fd
from .field import Field, fmt
from .solution import build_solution, regularity_check, sample, sample_on, tail_estimate
from .spectral import mode_constants

DEFAULT_OUT = "dhc-out"
ENV_OUT = "DHC_OUT_DIR"
# the regularity fit needs a few coefficients beyond n = N/2
MIN_CHECK_MODES = 8

log = logging.getLogger("delayheat")


def resolve_out_dir(cli_out: str | None, cfg: ScenarioConfig | None) -> Path:
    """``--out`` beats the config's ``out``, which beats ``$DHC_OUT_DIR``."""
    for cand in (cli_out, cfg.run.out if cfg else None, os.environ.get(ENV_OUT)):
        if cand:
            return Path(cand)
    return Path(DEFAULT_OUT)


def _write_rows(path: Path, header, rows) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _configured_field(sc: Scenario, field: Field) -> Field:
    return Field(field.xs, field.ts, sc.to_configured(field.xs[None, :], field.values), field.meta)


def _modes_csv(sc: Scenario, n_modes: int, path: Path) -> Path:
    rows = []
    for n in range(1, n_modes + 1):
        c = mode_constants(sc.problem, n)
        rows.append([n, fmt(c.big_l), fmt(c.big_d)])
    return _write_rows(path, ["n", "L_n", "D_n"], rows)


def run_solve(cfg: ScenarioConfig, out_dir: Path, analytic: str | None = None) -> dict:
    sc = build_scenario(cfg)
    r = cfg.run
    out_dir.mkdir(parents=True, exist_ok=True)
    sol = build_solution(sc.problem, sc.data, r.T, truncation=r.modes)
    field = _configured_field(sc, sample(sol, r.sample_nx, r.sample_nt))

    summary: dict = {"modes": r.modes, "T": r.T, "tail": tail_estimate(sol)}
    extra = None
    if analytic is not None:
        ref = space_time_function(analytic, cfg.constants())
        want = ref(field.xs[None, :], field.ts[:, None])
        err = np.abs(field.values - want)
        extra = {"u_analytic": want, "abs_error": err}
        summary["max_abs_error"] = float(err.max())
    field.to_csv(out_dir / "solution.csv", column="u", extra=extra)
    _modes_csv(sc, r.modes, out_dir / "modes.csv")

    rep = regularity_check(sc.data, sc.problem, r.T, max(r.modes, MIN_CHECK_MODES), r.delta)
    summary["regularity"] = rep.verdict
    lines = [rep.to_text(), f"tail |y_N(T)| {summary['tail']:.6e}"]
    if "max_abs_error" in summary:
        lines.append(f"max_abs_error {summary['max_abs_error']:.6e}")
    (out_dir / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    summary["files"] = ["solution.csv", "modes.csv", "report.txt"]
    return summary


def run_control(cfg: ScenarioConfig, out_dir: Path) -> dict:
    sc = build_scenario(cfg)
    r = cfg.run
    out_dir.mkdir(parents=True, exist_ok=True)
    cs = synthesize(sc.data, sc.problem, r.modes, r.T)
    cs.to_csv(out_dir / "control.csv")
    ctl = _configured_field(sc, cs.sample(r.sample_nx, r.sample_nt))
    ctl.to_csv(out_dir / "control_field.csv", column="U")
    rep = verify_steering(cs, sc.data, sc.problem, r.fd_config(cfg.tau))
    (out_dir / "steering.txt").write_text(rep.to_text(), encoding="utf-8")
    return {
        "modes": r.modes,
        "T": r.T,
        "series_terminal_error": rep.series_error,
        "oracle_terminal_error": rep.oracle_error,
        "max_moment_defect": max(rep.moment_defects),
        "files": ["control.csv", "control_field.csv", "steering.txt"],
    }


def run_verify(cfg: ScenarioConfig, out_dir: Path) -> dict:
    sc = build_scenario(cfg)
    r = cfg.run
    out_dir.mkdir(parents=True, exist_ok=True)
    fd = solve_fd(sc.problem, sc.data, sc.data.forcing, r.fd_config(cfg.tau), r.T)
    rows = np.unique(np.round(np.linspace(0, fd.ts.size - 1, r.sample_nt)).astype(int))
    ts = fd.ts[rows]
    sol = build_solution(sc.problem, sc.data, r.T, truncation=r.modes)
    series = _configured_field(sc, sample_on(sol, fd.xs, ts))
    oracle = sc.to_configured(fd.xs[None, :], fd.values[rows])
    diff = series.values - oracle
    Field(fd.xs, ts, series.values).to_csv(
        out_dir / "compare.csv", column="u_series",
        extra={"u_fd": oracle, "diff": diff})
    max_diff = float(np.abs(diff).max())
    text = (f"max_abs_diff {max_diff:.6e}\n"
            f"modes {r.modes}\nfd_nx {fd.xs.size - 1}\nfd_dt {fd.meta['dt']:.6e}\n"
            f"fd_scheme {fd.meta['scheme']}\n"
            f"delay_steps {fd.meta['delay_steps']}\n"
            f"delay_snap_error {fd.meta['delay_snap_error']:.6e}\n")
    (out_dir / "verify.txt").write_text(text, encoding="utf-8")
    return {"max_abs_diff": max_diff, "files": ["compare.csv", "verify.txt"]}


def run_check(cfg: ScenarioConfig, out_dir: Path) -> dict:
    sc = build_scenario(cfg)
    r = cfg.run
    out_dir.mkdir(parents=True, exist_ok=True)
    rep = regularity_check(sc.data, sc.problem, r.T, max(r.modes, MIN_CHECK_MODES), r.delta)
    (out_dir / "report.txt").write_text(rep.to_text(), encoding="utf-8")
    return {"regularity": rep.verdict, "files": ["report.txt"]}


PLOT_SCRIPT = """\
# Plot delayed_exp.csv with matplotlib (not a dependency of this package).
import csv
import matplotlib.pyplot as plt

with open("delayed_exp.csv", encoding="utf-8") as fh:
    rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))][1:]
t = [float(r[0]) for r in rows]
y = [float(r[1]) for r in rows]
plt.plot(t, y)
plt.xlabel("t")
plt.ylabel("delayed exponential")
plt.grid(True)
plt.savefig("delayed_exp.png", dpi=150)
"""


def emit_delayed_exp(b: float, tau: float, t_max: float, samples: int, out_dir: Path,
                     plot_script: bool = False) -> Path:
    """Samples of the delayed exponential on ``[-2 tau, t_max]``."""
    if samples < 2:
        raise InputError("need at least 2 samples")
    if not tau > 0:
        raise InputError("tau must be positive")
    if not t_max > -2 * tau:
        raise InputError("t_max must exceed -2 tau")
    fn = DelayedExp(b, tau)
    ts = np.linspace(-2 * tau, t_max, samples)
    vals = fn(ts)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "delayed_exp.csv"
    knots = fn.knots(t_max)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# b={b!r} tau={tau!r}\n")
        fh.write("# knots: " + ", ".join(fmt(k) for k in knots) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "exp_tau"])
        w.writerows([fmt(t), fmt(v)] for t, v in zip(ts, vals))
    if plot_script:
        (out_dir / "plot_delayed_exp.py").write_text(PLOT_SCRIPT, encoding="utf-8")
    return path


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dhc", description="Delay heat equation solver and controller.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="scenario file")
            p.add_argument("--modes", type=int, help="override the number of sine modes")
        p.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./{DEFAULT_OUT})")
        p.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")
        return p

    s = common(sub.add_parser("solve", help="series solution on a sample grid"))
    s.add_argument("--analytic", help="reference solution u(x, t) to compare against")
    common(sub.add_parser("control", help="synthesize and verify the steering control"))
    common(sub.add_parser("verify", help="series solution against the finite-difference oracle"))
    common(sub.add_parser("check", help="regularity heuristic only"))
    e = common(sub.add_parser("expfig", help="delayed exponential samples"), needs_config=False)
    e.add_argument("--b", type=float, default=1.0, help="rate (default 1)")
    e.add_argument("--tau", type=float, default=1.0, help="delay (default 1)")
    e.add_argument("--t-max", type=float, default=3.0, help="right end of the range (default 3)")
    e.add_argument("--samples", type=int, default=501, help="number of samples (default 501)")
    e.add_argument("--plot-script", action="store_true", help="also write a matplotlib script")
    sub.add_parser("dump", help="print a config in canonical form").add_argument(
        "--config", required=True)
    return ap


def _fail(code: int, exc: BaseException) -> int:
    parts = [f"code={code}", f"kind={type(exc).__name__}"]
    mode = getattr(exc, "mode", None)
    if isinstance(mode, int):
        parts.append(f"mode={mode}")
    parts.append(f"message={json.dumps(str(exc))}")
    print("dhc: error " + " ".join(parts), file=sys.stderr)
    return code


def _summary(result: dict) -> str:
    def show(v):
        if isinstance(v, float):
            return f"{v:.6e}" if math.isfinite(v) else str(v)
        if isinstance(v, list):
            return ",".join(map(str, v))
        return str(v)
    return "\n".join(f"{k}: {show(v)}" for k, v in result.items())


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "dump":
            sys.stdout.write(dump_config(load_config(args.config)))
            return 0
        if args.command == "expfig":
            out = resolve_out_dir(args.out, None)
            path = emit_delayed_exp(args.b, args.tau, args.t_max, args.samples, out,
                                    plot_script=args.plot_script)
            result = {"file": str(path)}
        else:
            cfg = load_config(args.config)
            if args.modes is not None:
                if args.modes < 1:
                    raise ConfigError("--modes must be at least 1")
                cfg.run.modes = args.modes
            out = resolve_out_dir(args.out, cfg)
            if args.command == "solve":
                result = run_solve(cfg, out, analytic=args.analytic)
            elif args.command == "control":
                result = run_control(cfg, out)
            elif args.command == "verify":
                result = run_verify(cfg, out)
            else:
                result = run_check(cfg, out)
            result = {"out": str(out), **result}
    except InputError as exc:
        return _fail(2, exc)
    except NumericalFailure as exc:
        return _fail(3, exc)
    if not args.quiet:
        print(_summary(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
