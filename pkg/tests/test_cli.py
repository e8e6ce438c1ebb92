import csv
import math
import re
import subprocess
import sys

import numpy as np
import pytest

from delayheat.cli import main, resolve_out_dir
from delayheat.config import ConfigError, dump_config, parse_config

HEAT = """
[problem]
a1sq = 1.0
tau = 0.5
l = 3.141592653589793

[data]
history = "sin(x)"

[run]
T = 1.0
modes = 8
sample_nx = 65
sample_nt = 33
"""

ZERO = """
[problem]
a1sq = 1.0
a2sq = 0.2
c1 = 0.1
c2 = -0.3
tau = 0.5
l = 2.0

[data]
target = "0"

[run]
T = 0.8
modes = 4
fd_nx = 40
fd_dt = 0.01
"""

DELAY = """
[problem]   # canonical form
a1sq = 0.25
a2sq = 0.04
c1 = 0.2
c2 = -0.3
tau = 0.4
l = 3.141592653589793

[data]
history = "sin(x)*(1 + s) + 0.3*sin(2*x)*cos(3*s)"
target = "sin(x) - 0.5*sin(3*x)"

[run]
T = 1.0
modes = 4
fd_nx = 200
fd_dt = 0.0002
"""

ORIGINAL = """
[problem]
a1 = 1.0
a2 = 0.5
b1 = 0.4
b2 = 0.1
d1 = 0.2
d2 = -0.3
tau = 0.5
l = 3.141592653589793

[data]
history = "exp(-0.2*x)*sin(x)*(1+s)"
target = "exp(-0.2*x)*sin(x)"

[run]
T = 1.0
modes = 6
"""

ERROR_LINE = re.compile(r'^dhc: error code=(\d) kind=(\w+)( mode=(\d+))? message=".*"$')


def write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        return list(csv.reader(line for line in fh if not line.startswith("#")))


def run(argv):
    return main(argv + ["--quiet"])


def test_zero_data_solution(tmp_path):
    cfg = write(tmp_path, ZERO)
    assert run(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "solution.csv")
    assert rows[0] == ["x", "t", "u"]
    assert all(float(r[2]) == 0.0 for r in rows[1:])
    modes = read_csv(tmp_path / "o" / "modes.csv")
    assert modes[0] == ["n", "L_n", "D_n"] and len(modes) == 5
    assert "regularity verdict: pass" in (tmp_path / "o" / "report.txt").read_text()


def test_heat_kernel_with_analytic(tmp_path):
    cfg = write(tmp_path, HEAT)
    out = tmp_path / "o"
    assert run(["solve", "--config", cfg, "--out", str(out), "--analytic", "exp(-t)*sin(x)"]) == 0
    rows = read_csv(out / "solution.csv")
    assert rows[0] == ["x", "t", "u", "u_analytic", "abs_error"]
    assert max(float(r[4]) for r in rows[1:]) <= 1e-6
    assert len(rows) == 1 + 65 * 33


def test_csv_format(tmp_path):
    cfg = write(tmp_path, HEAT)
    out = tmp_path / "o"
    run(["solve", "--config", cfg, "--out", str(out)])
    raw = (out / "solution.csv").read_bytes()
    assert b"\r" not in raw
    num = re.compile(r"^-?\d\.\d{16}e[+-]\d{2,3}$")
    for line in raw.decode("utf-8").splitlines()[1:50]:
        assert all(num.match(c) for c in line.split(","))


def test_both_coefficient_families_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, "[problem]\na1 = 1\na1sq = 1\ntau = 1\nl = 1\n[run]\nT = 1\n")
    assert run(["solve", "--config", cfg, "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    m = ERROR_LINE.match(err[0])
    assert m and m.group(1) == "2" and m.group(2) == "ConfigError"


@pytest.mark.parametrize("text", [
    "[problem]\na1sq = 1\ntau = 1\nl = 1\n[run]\nT = -1\n",
    "[problem]\na1sq = 1\ntau = 1\nl = 1\n[run]\nT = 1\nmodes = 0\n",
    "[problem]\na1sq = 1\ntau = 1\n[run]\nT = 1\n",
    "[problem]\na1sq = 1\ntau = 1\nl = 1\nzeta = 3\n[run]\nT = 1\n",
    "[problem]\na1sq = 1\ntau = 1\nl = 1\n[data]\nhistory = \"1\"\n[run]\nT = 1\n",
    "[problem]\na1sq = 1\ntau = 1\nl = 1\n[data]\nhistory = \"sin(\"\n[run]\nT = 1\n",
    "[problem]\na1 = 1\na2 = 2\nb1 = 1\nb2 = 1\ntau = 1\nl = 1\n[run]\nT = 1\n",
])
def test_invalid_configs_exit_2(tmp_path, capsys, text):
    cfg = write(tmp_path, text)
    assert run(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert ERROR_LINE.match(capsys.readouterr().err.strip())


def test_missing_config_file(tmp_path, capsys):
    assert run(["solve", "--config", str(tmp_path / "nope.ini")]) == 2
    assert ERROR_LINE.match(capsys.readouterr().err.strip())


def test_control_zero_target(tmp_path):
    cfg = write(tmp_path, ZERO)
    out = tmp_path / "o"
    assert run(["control", "--config", cfg, "--out", str(out)]) == 0
    rows = read_csv(out / "control.csv")
    assert rows[0] == ["n", "L_n", "D_n", "R_n", "A_n"]
    assert all(float(r[3]) == 0.0 and float(r[4]) == 0.0 for r in rows[1:])
    field = read_csv(out / "control_field.csv")
    assert field[0] == ["x", "t", "U"]
    assert all(float(r[2]) == 0.0 for r in field[1:])


def test_control_with_delay(tmp_path):
    cfg = write(tmp_path, DELAY)
    out = tmp_path / "o"
    assert run(["control", "--config", cfg, "--out", str(out)]) == 0
    text = (out / "steering.txt").read_text()
    vals = dict(line.rsplit(" ", 1) for line in text.strip().splitlines())
    assert float(vals["series_terminal_error"]) <= 1e-6
    assert float(vals["oracle_terminal_error"]) <= 1e-2
    assert all(float(v) <= 1e-8 for k, v in vals.items() if k.startswith("moment_defect"))


def test_control_blowup_exit_3(tmp_path, capsys):
    text = ("[problem]\na1sq = 1\na2sq = 0.2\ntau = 1\nl = 3.141592653589793\n"
            "[data]\ntarget = \"sin(30*x)\"\n[run]\nT = 0.05\nmodes = 30\n")
    cfg = write(tmp_path, text)
    assert run(["control", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    m = ERROR_LINE.match(capsys.readouterr().err.strip())
    assert m and m.group(2) == "ControlBlowup" and m.group(4) == "27"


def test_control_without_target_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, HEAT)
    assert run(["control", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "MissingTarget" in capsys.readouterr().err


def test_verify(tmp_path):
    cfg = write(tmp_path, ZERO)
    out = tmp_path / "z"
    assert run(["verify", "--config", cfg, "--out", str(out)]) == 0
    rows = read_csv(out / "compare.csv")
    assert rows[0] == ["x", "t", "u_series", "u_fd", "diff"]
    assert all(float(r[4]) == 0.0 for r in rows[1:])

    cfg = write(tmp_path, DELAY, "delay.ini")
    out = tmp_path / "d"
    assert run(["verify", "--config", cfg, "--out", str(out)]) == 0
    fine = max(abs(float(r[4])) for r in read_csv(out / "compare.csv")[1:])
    assert fine <= 1e-3
    summary = (out / "verify.txt").read_text()
    assert summary.startswith("max_abs_diff ")
    assert float(summary.split()[1]) == pytest.approx(fine, rel=1e-6)

    coarse = write(tmp_path, DELAY.replace("fd_nx = 200", "fd_nx = 8").replace("fd_dt = 0.0002", "fd_dt = 0.1"),
                   "coarse.ini")
    out = tmp_path / "c"
    assert run(["verify", "--config", coarse, "--out", str(out)]) == 0
    assert max(abs(float(r[4])) for r in read_csv(out / "compare.csv")[1:]) > fine


def test_original_variables_round_trip_to_configured(tmp_path):
    cfg = write(tmp_path, ORIGINAL)
    out = tmp_path / "o"
    assert run(["verify", "--config", cfg, "--out", str(out)]) == 0
    assert float((out / "verify.txt").read_text().split()[1]) <= 1e-3
    assert run(["solve", "--config", cfg, "--out", str(out)]) == 0
    rows = read_csv(out / "solution.csv")[1:]
    # at t = 0 the configured-variable solution is the original history
    for r in rows[:41]:
        x = float(r[0])
        assert float(r[2]) == pytest.approx(math.exp(-0.2 * x) * math.sin(x), abs=1e-9)
    assert run(["control", "--config", cfg, "--out", str(out)]) == 0


def test_check_subcommand(tmp_path):
    tri = HEAT.replace('"sin(x)"', '"(pi/2 - abs(x - pi/2))*(1+0*s)"')
    cfg = write(tmp_path, tri)
    assert run(["check", "--config", cfg, "--out", str(tmp_path / "o"), "--modes", "16"]) == 0
    assert "regularity verdict: warn" in (tmp_path / "o" / "report.txt").read_text()


def test_modes_override(tmp_path):
    cfg = write(tmp_path, HEAT)
    assert run(["solve", "--config", cfg, "--out", str(tmp_path / "o"), "--modes", "3"]) == 0
    assert len(read_csv(tmp_path / "o" / "modes.csv")) == 4


def test_out_dir_precedence(tmp_path, monkeypatch):
    cfg = parse_config(HEAT)
    monkeypatch.delenv("DHC_OUT_DIR", raising=False)
    assert str(resolve_out_dir(None, cfg)) == "dhc-out"
    monkeypatch.setenv("DHC_OUT_DIR", str(tmp_path / "env"))
    assert resolve_out_dir(None, cfg) == tmp_path / "env"
    cfg.run.out = str(tmp_path / "cfg")
    assert resolve_out_dir(None, cfg) == tmp_path / "cfg"
    assert resolve_out_dir(str(tmp_path / "cli"), cfg) == tmp_path / "cli"
    assert run(["expfig"]) == 0
    assert (tmp_path / "env" / "delayed_exp.csv").exists()


def test_config_round_trip(tmp_path):
    for text in (HEAT, DELAY, ORIGINAL, ZERO):
        cfg = parse_config(text)
        again = parse_config(dump_config(cfg))
        assert again == cfg
        assert dump_config(again) == dump_config(cfg)
    a = write(tmp_path, DELAY, "a.ini")
    b = write(tmp_path, dump_config(parse_config(DELAY)), "b.ini")
    for sub in ("solve", "control"):
        assert run([sub, "--config", a, "--out", str(tmp_path / "A")]) == 0
        assert run([sub, "--config", b, "--out", str(tmp_path / "B")]) == 0
    for name in ("solution.csv", "modes.csv", "control.csv", "control_field.csv", "report.txt", "steering.txt"):
        assert (tmp_path / "A" / name).read_bytes() == (tmp_path / "B" / name).read_bytes()


def test_case_of_horizon_key():
    with pytest.raises(ConfigError):
        parse_config("[problem]\na1sq = 1\ntau = 1\nl = 1\n[run]\nt = 1\n")


def test_expfig(tmp_path):
    out = tmp_path / "e"
    assert run(["expfig", "--b", "0", "--tau", "0.5", "--t-max", "2", "--samples", "41", "--out", str(out)]) == 0
    lines = (out / "delayed_exp.csv").read_text().splitlines()
    assert lines[1].startswith("# knots: ")
    knots = [float(k) for k in lines[1][len("# knots: "):].split(",")]
    assert knots == [-0.5, 0.0, 0.5, 1.0, 1.5, 2.0]
    rows = read_csv(out / "delayed_exp.csv")
    assert rows[0] == ["t", "exp_tau"]
    for t, v in rows[1:]:
        assert float(v) == (1.0 if float(t) >= -0.5 else 0.0)

    assert run(["expfig", "--samples", "11", "--out", str(out), "--plot-script"]) == 0
    vals = {float(t): float(v) for t, v in read_csv(out / "delayed_exp.csv")[1:]}
    assert vals[0.5] == 1.5 and vals[1.5] == 2.625
    assert vals[-2.0] == 0.0 and vals[-1.5] == 0.0
    assert (out / "plot_delayed_exp.py").exists()
    assert run(["expfig", "--samples", "1", "--out", str(out)]) == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "delayheat", "expfig", "--out", str(tmp_path), "--samples", "5"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "delayed_exp.csv" in res.stdout
