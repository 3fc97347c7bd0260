import subprocess
import sys

import pytest

from noma_relay import cli
from noma_relay.cli import Gate, ParseError, main, parse_config
from noma_relay.model import Duplex

RAYLEIGH = """\
# Rayleigh FD, three relays
relays=3
mode=fd
power.a1=0.75
power.a3=0.75
rates.d1=0.1
rates.d2=1
si.kappa=1
si.theta=0.2
"""

GEOMETRIC = """\
relays=4
mode=fd
power.a1=0.75
power.a3=0.55
rates.d1=0.1
rates.d2=1
si.m=2
si.kappa=1
si.theta=0.31
link.s1.m=2
link.s2.m=2
link.d1.m=2
link.d2.m=2
sic.m_r=2
sic.m_d2=2
geometry.alpha=3
run.snr_db=50
"""


@pytest.fixture
def write(tmp_path):
    def _write(text, name="exp.cfg"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return _write


def test_parse_basic_config():
    exp = parse_config(RAYLEIGH + "run.trials=500  # trailing comment\n")
    cfg = exp.system
    assert cfg.n_relays == 3 and cfg.duplex is Duplex.FD
    assert cfg.power.a1 == 0.75 and cfg.power.a2 == pytest.approx(0.25)
    assert cfg.relays[0].si.theta == 0.2
    assert cfg.layout is None
    assert exp.run["trials"] == 500


def test_parse_geometric_config():
    cfg = parse_config(GEOMETRIC).system
    assert cfg.layout is not None and cfg.layout.alpha == 3
    assert cfg.relays[0].s1.m == 2


@pytest.mark.parametrize("text,key,line", [
    (RAYLEIGH + "noise.r=abc\n", "noise.r", 10),
    (RAYLEIGH + "bogus.key=1\n", "bogus.key", 10),
    (RAYLEIGH + "mode=hd\n", "mode", 10),
    ("relays=2\nmode=fd\nlink.s1.omega=1\ngeometry.alpha=3\n", None, None),
])
def test_parse_errors_name_key_and_line(text, key, line):
    with pytest.raises(ParseError) as exc:
        parse_config(text)
    if key is not None:
        assert exc.value.key == key
        assert exc.value.line == line
        assert f"line {line}" in str(exc.value) and key in str(exc.value)


def test_bad_config_exits_2(write, capsys):
    path = write(RAYLEIGH + "noise.d1=fast\n")
    assert main(["curve", "--config", path]) == 2
    err = capsys.readouterr().err
    assert "noise.d1" in err and "line 10" in err


def test_curve_rows_and_format(write, tmp_path):
    path = write(RAYLEIGH)
    out = tmp_path / "curve.csv"
    assert main(["curve", "--config", path, "--out", str(out), "--methods", "asymptotic,exact"]) == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "snr_db,exact,asymptotic"
    assert len(lines) == 14
    assert [float(r.split(",")[0]) for r in lines[1:]] == list(range(0, 61, 5))


def test_curve_is_byte_identical(write, tmp_path):
    path = write(RAYLEIGH)
    outs = []
    for k in range(2):
        out = tmp_path / f"c{k}.csv"
        main(["curve", "--config", path, "--out", str(out), "--methods", "exact,mc",
              "--trials", "2000", "--seed", "4", "--db-stop", "20"])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].splitlines()[0] == b"snr_db,exact,mc,mc_half_width"


def test_empty_sweep_writes_header_only(write, capsys):
    path = write(RAYLEIGH)
    assert main(["curve", "--config", path, "--db-start", "10", "--db-stop", "5"]) == 0
    assert capsys.readouterr().out == "snr_db,exact\n"


def test_unknown_method_is_a_parse_error(write):
    assert main(["curve", "--config", write(RAYLEIGH), "--methods", "exact,magic"]) == 2


def test_mc_command(write, capsys):
    assert main(["mc", "--config", write(RAYLEIGH), "--trials", "3000", "--snr-db", "20"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "snr_db,strategy,op,half_width,trials"
    assert [ln.split(",")[1] for ln in lines[1:]] == ["ssrs", "tsrs"]


def test_placement_origin_only(write, capsys):
    assert main(["placement", "--config", write(GEOMETRIC), "--origin-only"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "x,y,op_min,d_s1,d_s2,d_d1,d_d2"
    x, y, op = (float(v) for v in lines[1].split(",")[:3])
    assert (x, y) == (0.0, 0.0) and 0 < op < 1


def test_placement_grid_csv(write, tmp_path, capsys):
    grid = tmp_path / "grid.csv"
    assert main(["placement", "--config", write(GEOMETRIC), "--grid-csv", str(grid), "--workers", "2"]) == 0
    lines = grid.read_text().splitlines()
    assert lines[0] == "n,p,r,theta,x,y,op,d_s1,d_s2,d_d1,d_d2"
    assert len(lines) == 4034
    x, y = (float(v) for v in capsys.readouterr().out.splitlines()[1].split(",")[:2])
    assert (round(x, 3), round(y, 3)) == (-5.386, -1.623)


def test_placement_needs_geometry(write):
    assert main(["placement", "--config", write(RAYLEIGH)]) == 2


def test_validate_degenerate_suite(capsys):
    assert main(["validate", "--suite", "degenerate"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.rstrip().endswith("gates passed")


def test_validate_reports_failures(monkeypatch, capsys):
    monkeypatch.setitem(cli.SUITES, "degenerate", lambda: [Gate("forced", 1.0, 0.5)])
    assert main(["validate", "--suite", "degenerate"]) == 1
    assert "FAIL  forced" in capsys.readouterr().out


def test_oversized_heterogeneous_tsrs_exits_3(write):
    text = RAYLEIGH.replace("relays=3", "relays=21") + "relay.1.s1.m=2\n"
    assert main(["curve", "--config", write(text), "--db-stop", "0"]) == 3


def test_module_entry_point(write):
    proc = subprocess.run([sys.executable, "-m", "noma_relay", "curve", "--config", write(RAYLEIGH),
                           "--db-stop", "10"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "snr_db,exact"
