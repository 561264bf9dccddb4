import numpy as np
import pytest
import yaml
from hypothesis import given, strategies as st

from mbpi import cli
from mbpi.config import ExperimentConfig, loads
from mbpi.errors import ConfigError

REC = """
process: {nu: 0.3, delta: 0.8}
grids:
  t: {logspace: [1, 3, 7]}
  s: [0.0, 0.5, 0.9]
truncation: {N: 32}
montecarlo: {replications: 20000, seed: 3, j: [0, 1]}
validators: [thm1, schroder, invariance]
"""

EXACT = """
process:
  nu: 0.6
  delta: 0.4
  L: {family: constant, c: 1.0}
  ell: {family: constant, c: 0.2}
grids: {t: {logspace: [1, 3, 7]}, s: [0.0, 0.5]}
truncation: {N: 32}
validators: [thm2, thm4, cor1, schroder, invariance, ratio_limit]
"""


def _write(tmp_path, text, name="c.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_round_trip():
    cfg = loads(REC)
    assert loads(cfg.dumps()) == cfg
    assert cfg.grids.t[0] == 10.0 and len(cfg.grids.t) == 7


@given(nu=st.floats(0.05, 0.95), delta=st.floats(0.05, 0.95), seed=st.integers(0, 2**63))
def test_round_trip_property(nu, delta, seed):
    cfg = loads(yaml.safe_dump({"process": {"nu": nu, "delta": delta}, "montecarlo": {"seed": seed}}))
    assert loads(cfg.dumps()) == cfg


@pytest.mark.parametrize("text,msg", [
    ("process: {nu: 0.6, delta: 0.4}\nvalidators: [thm1]", "γ > 0 required"),
    ("process: {nu: 0.3, delta: 0.8}\nvalidators: [thm4]", "γ < 0 required"),
    ("process: {nu: 0.6, delta: 0.4}\nvalidators: [cor1]", "C = |γ| required"),
    ("process: {nu: 0.3, delta: 0.8}\nvalidators: [nope]", "unknown validator"),
    ("process: {nu: 0.3, delta: 0.8}\ngrids: {t: [3, 1]}", "strictly increasing"),
    ("process: {nu: 1.3, delta: 0.8}", "bad process"),
    ("process: {nu: 0.3, delta: 0.8}\nextra: 1", "unknown top-level"),
    ("[1, 2", "not valid YAML"),
])
def test_parse_time_rejection(text, msg):
    with pytest.raises(ConfigError, match=msg.replace("|", r"\|")):
        loads(text)


def test_run_recurrent_suite(tmp_path, capsys):
    code = cli.main(["run", "--config", _write(tmp_path, REC), "--out", str(tmp_path / "o")])
    assert code == 0
    reports = sorted(p.name for p in (tmp_path / "o" / "reports").iterdir())
    assert reports == ["invariance.csv", "schroder.csv", "thm1.csv"]
    assert "[thm1] PASS" in capsys.readouterr().out


def test_reproducible_outputs(tmp_path):
    cfg = _write(tmp_path, REC.replace("validators: [thm1, schroder, invariance]", "validators: [thm1, mc]"))
    for d in ("a", "b"):
        assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    for name in ("reports/thm1.csv", "reports/mc.csv", "flow.csv", "p00.csv", "intensities.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    head = (tmp_path / "a" / "reports" / "mc.csv").read_text().splitlines()[0]
    assert head.startswith("# config=") and "seed: 3" in head


def test_seed_override(tmp_path):
    cfg = _write(tmp_path, REC)
    cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "99"])
    text = (tmp_path / "a" / "reports" / "mc.csv").read_text()
    assert "# seed=99" in text


def test_transient_suite(tmp_path):
    code = cli.main(["run", "--config", _write(tmp_path, EXACT), "--out", str(tmp_path / "o"), "--plot"])
    assert code == 0
    assert (tmp_path / "o" / "reports" / "cor1.svg").exists()
    assert cli.main(["report", "--out", str(tmp_path / "o")]) == 0


def test_empty_validators_echo_only(tmp_path):
    code = cli.main(["run", "--config", _write(tmp_path, "process: {nu: 0.3, delta: 0.8}"), "--out", str(tmp_path / "o")])
    assert code == 0
    assert sorted(p.name for p in (tmp_path / "o").iterdir()) == ["config.yaml", "summary.txt"]


def test_exit_code_config_error(tmp_path, capsys):
    code = cli.main(["run", "--config", _write(tmp_path, "process: {nu: 0.6, delta: 0.4}\nvalidators: [thm1]")])
    assert code == 2
    assert "γ > 0 required" in capsys.readouterr().err


def test_exit_code_validation_failure(tmp_path):
    text = "process:\n  nu: 0.3\n  delta: 0.8\n  ell: {family: with_remainder, c: 1.0, rho: 0.5, d: 1.0}\nvalidators: [thm1]"
    assert cli.main(["validate", "--config", _write(tmp_path, text), "--out", str(tmp_path / "o")]) == 1
    assert cli.main(["report", "--out", str(tmp_path / "o")]) == 1


def test_exit_code_numerical_error(tmp_path):
    # log_power families have no intensity table
    text = "process:\n  nu: 0.3\n  delta: 0.8\n  L: {family: log_power, c: 1.0, p: 1.0}"
    code = cli.main(["laws", "--config", _write(tmp_path, text), "--out", str(tmp_path / "o")])
    assert code == 3
    assert (tmp_path / "o" / "INCOMPLETE").read_text().startswith("stage=laws")


def test_standalone_stages(tmp_path):
    cfg = _write(tmp_path, REC)
    out = str(tmp_path / "o")
    for cmd in ("laws", "solve", "invariant"):
        assert cli.main([cmd, "--config", cfg, "--out", out]) == 0
    names = {p.name for p in (tmp_path / "o").iterdir()}
    assert {"intensities.csv", "flow.csv", "p00.csv", "invariant.csv"} <= names
