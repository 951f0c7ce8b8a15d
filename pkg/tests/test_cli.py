import json

import pytest

from mbqtm import __version__
from mbqtm.cli import main
from mbqtm.complexity import load_ir, lower
from mbqtm.wellformed import validate_wellformed


def run_json(capsys, *argv):
    code = main([*argv, "--format", "json"])
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_version(capsys):
    assert main(["--version"]) == 0
    out = capsys.readouterr().out
    assert __version__ in out and "machine format 1" in out


def test_usage_error_exit_code(capsys):
    assert main(["run"]) == 2
    assert main(["table", "--thetas", "2^-x", "--epsilons", "0.1"]) == 2


def test_validate_pass_and_fail(capsys):
    code, doc = run_json(capsys, "validate", "hadamard.mqt", "--seed", "1")
    assert code == 0 and doc["payload"]["passed"]
    code = main(["validate", "fixtures/nonunitary.mqt", "--seed", "1"])
    captured = capsys.readouterr()
    assert code == 3
    assert "column (q0, 0)" in captured.err


def test_missing_file_is_usage_error(capsys):
    assert main(["run", "nope.mqt", "--steps", "1"]) == 2


def test_document_shape(capsys):
    code, doc = run_json(capsys, "run", "parity.mqt", "--input", "1101", "--steps", "5", "--cell", "4")
    assert set(doc) == {"version", "format_version", "request", "payload", "timing"}
    assert doc["payload"]["marginal"] == {"1": 1.0}
    assert doc["timing"] is None


def test_dump_amplitudes(capsys):
    _, doc = run_json(capsys, "run", "hadamard.mqt", "--input", "1", "--steps", "1", "--dump-amplitudes")
    amps = {a["tape"]["0"]: a["re"] for a in doc["payload"]["amplitudes"]}
    assert amps["0"] == pytest.approx(2**-0.5) and amps["1"] == pytest.approx(-(2**-0.5))


def test_ensemble_byte_identical(capsys):
    argv = ["ensemble", "hadamard.mqt", "--input", "0", "--steps", "1", "--cell", "0", "--n", "1024",
            "--seed", "42", "--format", "json"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first
    assert json.loads(first)["payload"]["seed"] == 42


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("MBQTM_SEED", "77")
    _, doc = run_json(capsys, "observe", "hadamard.mqt", "--input", "0", "--steps", "1", "--cell", "0")
    assert doc["request"]["seed"] == 77
    _, doc = run_json(capsys, "observe", "hadamard.mqt", "--input", "0", "--steps", "1", "--cell", "0",
                      "--seed", "5")
    assert doc["request"]["seed"] == 5


def test_generated_seed_is_echoed(capsys, monkeypatch):
    monkeypatch.delenv("MBQTM_SEED", raising=False)
    _, doc = run_json(capsys, "observe", "hadamard.mqt", "--input", "0", "--steps", "1", "--cell", "0")
    seed = doc["request"]["seed"]
    _, again = run_json(capsys, "observe", "hadamard.mqt", "--input", "0", "--steps", "1", "--cell", "0",
                        "--seed", str(seed))
    assert again["payload"] == doc["payload"]


def test_observe_partial(capsys):
    _, doc = run_json(capsys, "observe", "bqp-demo.mqt", "--input", "101", "--steps", "3", "--cell", "-1",
                      "--model", "qtm-partial", "--seed", "3")
    assert doc["payload"]["symbol"] in ("0", "1")


def test_measure_models(capsys):
    base = ["measure", "bqp-demo.mqt", "--input", "101", "--steps", "3", "--cell", "-1", "--seed", "1",
            "--theta", "2^-5"]
    _, doc = run_json(capsys, *base, "--model", "bqtm")
    assert abs(doc["payload"]["outcome"]["value"] - 0.5) < 2**-5
    _, doc = run_json(capsys, *base, "--model", "mbqtm", "--epsilon", "0.0455")
    assert doc["payload"]["consumed"] and doc["payload"]["outcome"]["collapsed"]
    _, doc = run_json(capsys, *base, "--model", "mbqtm", "--epsilon", "0.0455", "--n", "1024")
    assert doc["payload"]["ensemble"]["n"] == 1024
    assert main([*base, "--model", "mbqtm"]) == 2


def test_table_text_and_json(capsys):
    argv = ["table", "--thetas", "2^-5,2^-6,2^-7", "--epsilons", "0.0455,0.02,0.01"]
    _, doc = run_json(capsys, *argv)
    assert doc["payload"]["grid"][0] == [1024, 1386, 1699]
    assert len(doc["payload"]["records"]) == 9
    main(argv)
    text = capsys.readouterr().out
    assert "16384" in text and "27177" in text
    _, doc = run_json(capsys, *argv, "--convention", "paper-cols23")
    assert doc["payload"]["grid"][2][1:] == [27177, 32275]


def test_audit(capsys):
    code, doc = run_json(capsys, "audit-table1")
    assert code == 0 and doc["payload"]["conclusions"]["inconsistent_cells"] == 6


def test_check_exit_codes(capsys):
    assert main(["check", "parity-eqp.inst"]) == 0
    assert main(["check", "hadamard-eqp.inst"]) == 1
    capsys.readouterr()
    code, doc = run_json(capsys, "check", "bqp-demo.inst", "--mode", "empirical", "--trials", "200",
                         "--seed", "4")
    assert code == 0 and doc["payload"]["mode"] == "empirical" and doc["payload"]["seed"] == 4


def test_transform_writes_valid_ir(capsys, tmp_path):
    out = tmp_path / "star.mqir"
    code, doc = run_json(capsys, "transform", "zqp-demo.inst", "--to", "zbqp-star", "-o", str(out))
    assert code == 0 and doc["payload"]["k"] == 4 and doc["payload"]["measured_k"] == [4]
    assert validate_wellformed(lower(load_ir(out))).passed
    mqt = tmp_path / "star.mqt"
    assert main(["transform", "zqp-demo.mqir", "--to", "zbqp-star", "-o", str(mqt)]) == 0
    capsys.readouterr()
    code, doc = run_json(capsys, "validate", str(mqt), "--window", "0")
    assert code == 0


def test_text_matches_json_numbers(capsys):
    argv = ["ensemble", "bqp-demo.mqt", "--input", "101", "--steps", "3", "--cell", "-1", "--n", "999",
            "--seed", "8"]
    main(argv)
    text = capsys.readouterr().out
    _, doc = run_json(capsys, *argv)
    assert f"average: {doc['payload']['average']!r}" in text
