import json
import os
import subprocess
import sys

import pytest

from jetsigma.cli import main, run
from jetsigma.session import (
    MissingSessionDataError,
    SessionError,
    load_session,
    loads_session,
)

SESSIONS = os.path.join(
    os.path.dirname(__file__), "..", "src", "jetsigma", "sessions"
)


def _path(name):
    return os.path.join(SESSIONS, name + ".session")


def test_load_bundled_session():
    s = load_session(_path("exp_coupled_pair"))
    assert s.ctx.dependents == ("u", "v")
    assert s.fields is not None and len(s.fields) == 2
    assert s.sigma is not None and s.sigma.r == 2
    assert s.system is not None and s.system.solved is not None
    assert len(s.seeds) == 2
    assert s.change is not None
    assert s.oracle is not None


def test_empty_session_rejected(tmp_path):
    p = tmp_path / "empty.session"
    p.write_text("")
    with pytest.raises(SessionError):
        load_session(str(p))


def test_nonsquare_twist_rejected():
    text = """
[context]
independent=x
dependent=u,v
order=1
[sigma]
row=0,u_1,0
row=u,0,0
"""
    with pytest.raises(SessionError):
        loads_session(text)


def test_undeclared_symbol_has_line():
    text = """
[context]
independent=x
dependent=u
order=1
[equation]
implicit=q + u_1
"""
    with pytest.raises(SessionError) as err:
        loads_session(text)
    assert "line 7" in str(err.value)


def test_run_all_exit_zero():
    s = load_session(_path("exp_coupled_pair"))
    rep, extra = run("all", s)
    assert rep.exit_status == 0
    assert extra is not None  # the reduce stage emitted a session


def test_zero_sigma_override_fails_with_witness():
    s = load_session(_path("exp_coupled_pair"))
    rep, _ = run("check-symmetry", s, zero_sigma=True)
    assert rep.exit_status == 1
    assert any(e.verdict == "NonZero" and e.witness for e in rep.entries)


def test_missing_session_data():
    text = """
[context]
independent=x
dependent=u
order=2
[equation]
solved=u_2:0
"""
    s = loads_session(text)
    with pytest.raises(MissingSessionDataError) as err:
        run("reduce", s)
    assert "coordinate_change" in str(err.value)


def test_reduced_session_roundtrips():
    s = load_session(_path("exp_coupled_pair"))
    _, extra = run("reduce", s)
    reparsed = loads_session(extra)
    assert reparsed.system is not None
    assert reparsed.ctx.dependents == ("z1", "z2")
    assert reparsed.system.solved is not None
    rep, _ = run("prolong", reparsed) if reparsed.fields else (None, None)


def test_json_reports_are_byte_identical():
    s1 = load_session(_path("exp_coupled_pair"))
    s2 = load_session(_path("exp_coupled_pair"))
    r1, _ = run("check-symmetry", s1, trials=7, seed=3)
    r2, _ = run("check-symmetry", s2, trials=7, seed=3)
    j1 = r1.to_json("exp_coupled_pair.session", 3, 7)
    j2 = r2.to_json("exp_coupled_pair.session", 3, 7)
    assert j1 == j2
    payload = json.loads(j1)
    assert payload["schema"] == "jetsigma-report/1"
    assert payload["exit_status"] == 0


def test_cli_main_json(tmp_path, capsys):
    out = tmp_path / "report.json"
    status = main(
        [
            "check-symmetry",
            "--session",
            _path("exp_coupled_pair"),
            "--json",
            "--out",
            str(out),
        ]
    )
    assert status == 0
    payload = json.loads(out.read_text())
    assert payload["command"] == "check-symmetry"
    assert all(e["verdict"] == "Zero" for e in payload["entries"])


def test_cli_unknown_session_file():
    assert main(["prolong", "--session", "/nonexistent.session"]) == 1


def test_header_line_tokens():
    text = """
[context] independent=x dependent=u,v order=1
[field X1] xi=0
phi=1,0
[field X2]
xi=0
phi=0,1
"""
    s = loads_session(text)
    assert s.ctx.max_order == 1 and len(s.fields) == 2
