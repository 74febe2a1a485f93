from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellkit import io
from bellkit.cli import main
from bellkit.dilation import identity_witness, real_simulation_dilation_witness
from bellkit.linalg import SIGMA_X, SIGMA_Z, direct_sum
from bellkit.randomize import random_strategy
from bellkit.selftest import BUILTINS, SQRT2, bell_value, chsh_functional
from bellkit.strategy import Strategy, correlation, from_observables, validate


def emit(tmp_path, name):
    path = tmp_path / f"{name}.json"
    assert main(["emit", name, str(path)]) == 0
    return path


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_emit_parse_emit_is_byte_identical(tmp_path, name):
    path = emit(tmp_path, name)
    first = path.read_bytes()
    s = io.load_strategy(path)
    assert io.dumps(io.strategy_to_json(s)).encode() == first
    assert emit(tmp_path, name).read_bytes() == first
    orig = BUILTINS[name]()
    assert np.array_equal(s.state, orig.state)
    for side in "AB":
        for e, f in zip(s.effects(side), orig.effects(side)):
            assert np.array_equal(e, f)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_random_strategy_round_trip(da, db, seed):
    s = random_strategy((da, db), np.random.default_rng(seed), n_outcomes=3)
    text = io.dumps(io.strategy_to_json(s))
    back = io.strategy_from_json(json.loads(text))
    assert np.array_equal(back.state, s.state)
    assert io.dumps(io.strategy_to_json(back)) == text


def test_witness_round_trip():
    w = real_simulation_dilation_witness(BUILTINS["pauli3"]())
    back = io.witness_from_json(json.loads(io.dumps(io.witness_to_json(w))))
    assert np.array_equal(back.u_a, w.u_a) and np.array_equal(back.aux1, w.aux1)
    assert back.aux_dims == w.aux_dims


def test_schema_errors():
    good = io.strategy_to_json(BUILTINS["chsh"]())
    for bad in (
        [],
        {k: v for k, v in good.items() if k != "state"},
        {**good, "dims": [2, 0]},
        {**good, "state": [[1, 0, 0]]},
        {**good, "alice": [good["alice"][0], good["alice"][0]]},
        {**good, "bob": [{"input": "y", "effects": []}]},
        {**good, "alice": [{"input": "x", "effects": [{"rows": 2, "cols": 2, "entries": [[1, 0]]}]}]},
    ):
        with pytest.raises(io.SchemaError):
            io.strategy_from_json(bad)
    with pytest.raises(io.SchemaError):
        io.complex_from_json("1+2j")


def test_emit_then_validate_and_bell_value(tmp_path, capsys):
    q = emit(tmp_path, "quaternion")
    capsys.readouterr()
    assert main(["validate", str(q), "--json"]) == 0
    flags = json.loads(capsys.readouterr().out)["flags"]
    assert all(flags.values())
    c = io.load_strategy(emit(tmp_path, "chsh"))
    assert abs(bell_value(c, chsh_functional()) - 2 * SQRT2) <= 1e-12


def test_validate_rejects_malformed_input(tmp_path, capsys):
    junk = tmp_path / "nonsense.json"
    junk.write_text("{not json")
    assert main(["validate", str(junk)]) == 2
    assert "malformed" in capsys.readouterr().err
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"dims": [2, 2]}))
    assert main(["validate", str(wrong)]) == 2
    assert main(["validate", str(tmp_path / "missing.json")]) == 2


def test_validate_invalid_strategy_exit_one(tmp_path, capsys):
    s = BUILTINS["chsh"]()
    bad = Strategy(s.state, 2, 2, {"x": (np.eye(2), np.eye(2))}, s.bob)
    path = tmp_path / "bad.json"
    io.save_strategy(bad, path)
    assert main(["validate", str(path)]) == 1
    assert "error:" in capsys.readouterr().out


def test_unknown_flag_and_command(capsys):
    assert main(["validate", "x.json", "--bogus"]) == 2
    assert main(["frobnicate"]) == 2
    assert main([]) == 2


def test_classify_commands(tmp_path, capsys):
    expected = {"quaternion": "SelfConjugateNotReal", "chsh": "Real", "pauli3": "Complex"}
    for name, verdict in expected.items():
        path = emit(tmp_path, name)
        capsys.readouterr()
        assert main(["classify", str(path), "--json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["verdict"] == verdict
        assert main(["classify", str(path)]) == 0
        assert f"verdict: {verdict}" in capsys.readouterr().out


def test_classify_reducible_falls_back_to_blocks(tmp_path, capsys):
    psi = np.zeros(16)
    psi[0] = psi[5] = psi[10] = psi[15] = 0.5
    doubled = {"z": direct_sum(SIGMA_Z, SIGMA_Z), "x": direct_sum(SIGMA_X, SIGMA_X)}
    path = tmp_path / "red.json"
    io.save_strategy(from_observables(psi, (4, 4), doubled, doubled), path)
    assert main(["classify", str(path)]) == 0
    assert "verdict: Reducible" in capsys.readouterr().out


def test_correlate_and_moments(tmp_path, capsys):
    path = emit(tmp_path, "pauli3")
    capsys.readouterr()
    assert main(["correlate", str(path), "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)["correlation"]
    assert len(rows) == 9 * 4
    assert main(["moments", str(path), "--observable", "--word-a", '["X", "Y"]', "--word-b", '["Z"]', "--json"]) == 0
    value = json.loads(capsys.readouterr().out)["value"]
    assert abs(abs(value[1]) - 1) <= 1e-12
    assert main(["moments", str(path), "--word-a", '[["X", 0]]', "--word-b", '[["Z", 0]]']) == 0
    assert "moment =" in capsys.readouterr().out
    assert main(["moments", str(path), "--word-a", "[", "--word-b", "[]"]) == 2
    assert main(["moments", str(path), "--word-a", '[["Q", 0]]', "--word-b", "[]"]) == 2


def test_realsim_and_dilate_check(tmp_path, capsys):
    path = emit(tmp_path, "pauli3")
    out, wit = tmp_path / "sim.json", tmp_path / "wit.json"
    assert main(["realsim", str(path), "--out", str(out), "--witness", str(wit)]) == 0
    sim = io.load_strategy(out)
    assert correlation(sim).max_difference(correlation(BUILTINS["pauli3"]())) <= 1e-12
    assert main(["dilate-check", str(out), str(path), str(wit), "--complex"]) == 0
    assert "PASS" in capsys.readouterr().out
    ident = tmp_path / "id.json"
    ident.write_text(io.dumps(io.witness_to_json(identity_witness(BUILTINS["pauli3"]()))))
    assert main(["dilate-check", str(out), str(path), str(ident)]) == 2
    assert main(["dilate-check", str(path), str(path), str(ident)]) == 0
    rotated = tmp_path / "rot.json"
    p3 = BUILTINS["pauli3"]()
    io.save_strategy(Strategy(np.array([0, 1, 1, 0]) / np.sqrt(2), 2, 2, p3.alice, p3.bob), rotated)
    capsys.readouterr()
    assert main(["dilate-check", str(rotated), str(path), str(ident)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_naimark_and_restrict(tmp_path, capsys):
    s = BUILTINS["chsh"]()
    pov = s.replace(alice={"x0": (np.eye(2) / 2, np.eye(2) / 2), "x1": s.alice["x1"]})
    path, out = tmp_path / "pov.json", tmp_path / "proj.json"
    io.save_strategy(pov, path)
    assert main(["naimark", str(path), "--out", str(out), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["dims"] == [4, 2]
    assert validate(io.load_strategy(out)).projective
    assert main(["restrict", str(path), "--out", str(out)]) == 0
    psi = np.zeros(4)
    psi[0] = 1
    io.save_strategy(from_observables(psi, (2, 2), {"x": SIGMA_X}, {"z": SIGMA_Z}), path)
    assert main(["restrict", str(path), "--out", str(out)]) == 1
    io.save_strategy(from_observables(psi, (2, 2), {"z": SIGMA_Z}, {"z": SIGMA_Z}), path)
    capsys.readouterr()
    assert main(["restrict", str(path), "--out", str(out), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["dims"] == [1, 1]


def test_selftest_command(capsys):
    assert main(["selftest", "quaternion"]) == 0
    out = capsys.readouterr().out
    assert "16.970562748" in out and out.strip().endswith("PASS")
    assert main(["selftest", "quaternion", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert abs(payload["bell_value"] - 12 * SQRT2) <= 1e-9
    assert main(["selftest", "chsh"]) == 2


def test_seesaw_command(tmp_path, capsys):
    out = tmp_path / "res.json"
    assert main(["seesaw", "--scenario", "chsh", "--restarts", "3", "--seed", "0", "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert abs(res["best_value"] - 2 * SQRT2) <= 1e-8
    assert res["seed"] == 0
    scen = tmp_path / "scen.json"
    scen.write_text(json.dumps({"dims": [2, 2], "alice": {"a": 2, "b": 2}, "bob": {"c": 2, "d": 2},
                                "functional": {"correlators": [["a", "c", 1], ["a", "d", 1], ["b", "c", 1],
                                                               ["b", "d", -1]]}}))
    capsys.readouterr()
    assert main(["seesaw", "--scenario", str(scen), "--restarts", "3", "--json"]) == 0
    assert abs(json.loads(capsys.readouterr().out)["best_value"] - 2 * SQRT2) <= 1e-8
    scen.write_text(json.dumps({"dims": [2, 2], "alice": {"a": 3}, "bob": {"c": 2},
                                "functional": {"terms": [["a", "c", 0, 0, 1.0]]}}))
    assert main(["seesaw", "--scenario", str(scen)]) == 2
    scen.write_text(json.dumps({"dims": [2, 2], "alice": {"a": 2}, "bob": {"c": 2}, "functional": "bogus"}))
    assert main(["seesaw", "--scenario", str(scen)]) == 2


def test_projgen_command(tmp_path, capsys):
    fam = tmp_path / "fam.json"
    assert main(["projgen", "--n", "2", "--check", "--emit", str(fam), "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["real_dim"] == 16 and payload["passed"]
    assert payload["negative"]["first_three"] <= 8
    assert json.loads(fam.read_text())["projections"][0]["rows"] == 4
    assert main(["projgen", "--n", "4", "--check"]) == 0
    assert main(["projgen", "--n", "1"]) == 2
