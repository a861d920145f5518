import json
import subprocess
import sys

import numpy as np
import pytest

from teledetect.cli import main, run
from teledetect.errors import StateParseError, StateValidationError
from teledetect.linalg import (
    DensityMatrix,
    SubsystemLayout,
    bell_tensor,
    random_density,
    random_haar_pure,
    random_unitary,
    werner,
)
from teledetect.statefile import (
    certificate_holds,
    parse_state,
    parse_unitary,
    state_to_dict,
    write_state,
    write_unitary,
)


def cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ---------------------------------------------------------------- state files

def test_parse_bell_file(tmp_path):
    path = tmp_path / "bell.json"
    doc = {"kind": "pure", "mode": "multiqubit", "qubits_per_side": 1,
           "data": [[0.7071067811865476, 0], [0, 0], [0, 0], [0.7071067811865476, 0]]}
    path.write_text(json.dumps(doc))
    st = parse_state(path)
    assert st.layout == SubsystemLayout.multiqubit(1)
    assert np.allclose(st.amplitudes, bell_tensor(1).amplitudes, atol=1e-15)


def test_trace_residual_reported(tmp_path):
    path = tmp_path / "bad.json"
    m = np.diag([0.49, 0.49, 0, 0])
    data = [[[float(x), 0.0] for x in row] for row in m]
    path.write_text(json.dumps({"kind": "density", "mode": "bipartite", "d": 2, "data": data}))
    with pytest.raises(StateValidationError, match=r"trace residual 2\.0e-02"):
        parse_state(path)


def test_round_trip_is_bit_identical(tmp_path):
    states = [
        random_haar_pure(SubsystemLayout.multiqubit(2), 0),
        random_density(SubsystemLayout.bipartite(3), None, 1),
        werner(0.37),
    ]
    for k, st in enumerate(states):
        path = tmp_path / f"s{k}.json"
        write_state(st, path)
        back = parse_state(path)
        a = st.amplitudes if hasattr(st, "amplitudes") else st.matrix
        b = back.amplitudes if hasattr(back, "amplitudes") else back.matrix
        assert a.tobytes() == b.tobytes()
        assert back.layout == st.layout
        write_state(back, tmp_path / "again.json")
        assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_syntax_error_has_line_number(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "kind": "pure",\n  "mode": "multiqubit"\n  "data": []\n}\n')
    with pytest.raises(StateParseError, match=r"^line 4: "):
        parse_state(path)


def test_schema_errors(tmp_path):
    path = tmp_path / "x.json"
    for doc in (
        {"kind": "mixed", "mode": "bipartite", "d": 2, "data": []},
        {"kind": "pure", "mode": "qutrit", "data": []},
        {"kind": "pure", "mode": "bipartite", "d": 2},
        {"kind": "pure", "mode": "bipartite", "d": 2, "data": [1, 2, 3, 4]},
    ):
        path.write_text(json.dumps(doc))
        with pytest.raises(StateParseError):
            parse_state(path)
    path.write_text(json.dumps({"kind": "pure", "mode": "bipartite", "d": 2, "data": [[1, 0]] * 3}))
    with pytest.raises(StateValidationError, match="amplitudes"):
        parse_state(path)


def test_unitary_file_round_trip(tmp_path):
    u = random_unitary(3, 4)
    write_unitary(u, tmp_path / "u.json")
    assert parse_unitary(tmp_path / "u.json").tobytes() == u.tobytes()
    write_unitary(np.diag([1, 2, 1]), tmp_path / "bad.json")
    with pytest.raises(StateValidationError):
        parse_unitary(tmp_path / "bad.json")


def test_state_to_dict_fields():
    doc = state_to_dict(werner(0.5, 3))
    assert doc["kind"] == "density" and doc["mode"] == "bipartite" and doc["d"] == 3
    # a qubit pair is written in the multiqubit form
    assert state_to_dict(werner(0.5))["mode"] == "multiqubit"
    doc = state_to_dict(bell_tensor(2))
    assert doc["kind"] == "pure" and doc["qubits_per_side"] == 2


# ----------------------------------------------------------------------- CLI

def test_gen_and_detect_ideal(tmp_path, capsys):
    path = tmp_path / "bell.json"
    code, out, err = cli(capsys, "gen", "bell", "--n", "2", "-o", str(path))
    assert code == 0 and path.exists()
    code, out, err = cli(capsys, "detect-ideal", "--state", str(path), "--restarts", "4")
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"] == "Ideal"
    assert rep["certificate"]["value"] == pytest.approx(1.0, abs=1e-12)
    assert rep["input_digest"].startswith("sha256:")
    assert rep["seed"] == 0
    assert "verdict=Ideal" in err and err.count("\n") == 1
    assert certificate_holds(rep, parse_state(path))


def test_separability_cli(tmp_path, capsys):
    path = tmp_path / "prod.json"
    assert cli(capsys, "gen", "random", "product", "--n", "2", "--seed", "3", "-o", str(path))[0] == 0
    code, out, _ = cli(capsys, "separability", "--state", str(path), "--restarts", "8")
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "Inconclusive"
    assert rep["diagnostics"]["best_value"] <= 0.25 + 1e-7
    assert certificate_holds(rep, parse_state(path))


def test_fef_cli_on_werner(tmp_path, capsys):
    path = tmp_path / "w.json"
    cli(capsys, "gen", "random", "werner", "--p", "0.5", "--seed", "0", "-o", str(path))
    code, out, _ = cli(capsys, "fef", "--state", str(path), "--d", "2")
    rep = json.loads(out)
    assert code == 0
    assert rep["verdict"] == "Useful"
    assert rep["diagnostics"]["fef"] == pytest.approx(0.625, abs=1e-9)
    assert rep["diagnostics"]["fidelity"] == pytest.approx(0.75, abs=1e-9)
    assert certificate_holds(rep, parse_state(path))


def test_witness_commands(tmp_path, capsys):
    state = tmp_path / "w.json"
    write_state(werner(0.5), state)
    code, out, _ = cli(capsys, "witness", "eval", "--state", str(state), "--d", "2")
    rep = json.loads(out)
    assert code == 0 and rep["diagnostics"]["witness_value"] == pytest.approx(-1 / 8, abs=1e-12)
    assert certificate_holds(rep, werner(0.5))

    u = tmp_path / "u.json"
    write_unitary(random_unitary(2, 1), u)
    code, out, _ = cli(capsys, "witness", "eval", "--state", str(state), "--d", "2", "--u", str(u))
    assert certificate_holds(json.loads(out), werner(0.5))

    code, out, _ = cli(capsys, "witness", "optimality", "--d", "3")
    rep = json.loads(out)
    assert code == 0 and rep["optimal"] is True and rep["gram_rank"] == 9

    code, out, _ = cli(capsys, "witness", "detect", "--state", str(state), "--d", "2")
    rep = json.loads(out)
    assert rep["verdict"] == "Useful"
    assert rep["diagnostics"]["minimum"] == pytest.approx(-1 / 8, abs=1e-9)
    assert certificate_holds(rep, werner(0.5))


def test_reports_are_deterministic(tmp_path, capsys):
    path = tmp_path / "rho.json"
    cli(capsys, "gen", "random", "density", "--d", "3", "--seed", "5", "-o", str(path))
    for argv in (["fef", "--state", str(path), "--d", "3", "--restarts", "4", "--seed", "2"],
                 ["witness", "detect", "--state", str(path), "--d", "3", "--restarts", "4"]):
        a = json.loads(cli(capsys, *argv)[1])
        b = json.loads(cli(capsys, *argv)[1])
        a.pop("wall_time_s")
        b.pop("wall_time_s")
        assert a == b


def test_restart_env_override(tmp_path, capsys, monkeypatch):
    path = tmp_path / "p.json"
    write_state(random_haar_pure(SubsystemLayout.multiqubit(1), 0), path)
    monkeypatch.setenv("TELEDETECT_RESTARTS", "3")
    rep = run(["detect-ideal", "--state", str(path)])
    assert rep["diagnostics"]["restarts_used"] == 3
    rep = run(["detect-ideal", "--state", str(path), "--restarts", "5"])
    assert rep["diagnostics"]["restarts_used"] == 5
    monkeypatch.setenv("TELEDETECT_RESTARTS", "many")
    code, _, err = cli(capsys, "detect-ideal", "--state", str(path))
    assert code == 2 and err.startswith("teledetect-error: usage:")


def test_error_exit_codes(tmp_path, capsys):
    code, out, err = cli(capsys, "detect-ideal", "--bogus")
    assert code == 2 and out == ""
    assert err.startswith("teledetect-error: usage: ") and err.count("\n") == 1

    broken = tmp_path / "broken.json"
    broken.write_text("{\n  \"kind\": \n")
    code, _, err = cli(capsys, "fef", "--state", str(broken), "--d", "2")
    assert code == 3 and err.startswith("teledetect-error: parse: line ")

    bad = tmp_path / "bad.json"
    m = DensityMatrix(np.eye(4) / 4, SubsystemLayout.bipartite(2)).matrix * 0.98
    bad.write_text(json.dumps({"kind": "density", "mode": "bipartite", "d": 2,
                               "data": [[[float(x.real), 0.0] for x in row] for row in m]}))
    code, _, err = cli(capsys, "fef", "--state", str(bad), "--d", "2")
    assert code == 4 and "trace residual" in err and err.count("\n") == 1

    code, _, err = cli(capsys, "fef", "--state", str(tmp_path / "missing.json"), "--d", "2")
    assert code == 2

    mixed = tmp_path / "mixed.json"
    write_state(werner(0.5), mixed)
    code, _, err = cli(capsys, "detect-ideal", "--state", str(mixed))
    assert code == 2


def test_inconclusive_exits_zero(tmp_path, capsys):
    path = tmp_path / "w.json"
    write_state(werner(0.2), path)
    code, out, _ = cli(capsys, "fef", "--state", str(path), "--d", "2", "--restarts", "4")
    assert code == 0 and json.loads(out)["verdict"] == "Inconclusive"


def test_module_entry_point(tmp_path):
    path = tmp_path / "bell.json"
    write_state(bell_tensor(1), path)
    proc = subprocess.run([sys.executable, "-m", "teledetect.cli", "detect-ideal", "--state", str(path),
                           "--restarts", "2"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["verdict"] == "Ideal"
