import csv
import io
import json

import pytest

from reflectron.cli import main, run_suite, select_targets, ConfigError
from reflectron.permutations import generate, inverse, read_file, write_file


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def perm_file(tmp_path):
    path = tmp_path / "f.perm"
    code, _, _ = run("gen-perm", "--kind", "random", "--n", "4", "--seed", "7", "--out", str(path))
    assert code == 0
    return path


def test_gen_perm_file(perm_file):
    assert read_file(perm_file) == generate("random", 4, seed=7)
    assert perm_file.read_text().startswith("perm v1 n=4\n")


def test_gen_perm_stdout():
    code, out, _ = run("gen-perm", "--kind", "bit_reverse", "--n", "2")
    assert code == 0 and out == "perm v1 n=2\n00\n10\n01\n11\n"


def test_invert_exact_from_file(perm_file):
    code, out, err = run("invert-exact", "--perm", str(perm_file), "--x", "1100", "--format", "json")
    assert code == 0
    report = json.loads(out)
    (entry,) = report["results"]
    f = read_file(perm_file)
    assert f(entry["y"]) == 0b1100 and entry["y"] == format(inverse(f)(0b1100), "04b")
    assert entry["iterations"] == 2
    assert entry["success_probability"] == pytest.approx(1.0, abs=1e-9)
    assert report["passed"] and report["version"]
    assert "finished in" in err


def test_invert_exact_all_with_trace():
    code, out, _ = run("invert-exact", "--kind", "affine_gf2", "--n", "4", "--seed", "2", "--x", "all", "--trace")
    report = json.loads(out)
    assert code == 0 and len(report["results"]) == 16
    assert [r["support_size"] for r in report["results"][0]["trace"]] == [4, 1]


def test_invert_exact_sample():
    code, out, _ = run("invert-exact", "--n", "8", "--x", "sample:5", "--seed", "3")
    assert code == 0 and len(json.loads(out)["results"]) == 5


def test_json_deterministic(tmp_path):
    argv = ("invert-exact", "--n", "6", "--kind", "random", "--seed", "4", "--x", "sample:3", "--trace")
    assert run(*argv)[1] == run(*argv)[1]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(*argv, "--out", str(a))
    run(*argv, "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_grover_search_and_invert():
    code, out, _ = run("grover-search", "--x", "0110")
    (entry,) = json.loads(out)["results"]
    assert code == 0 and entry["iterations"] == 3 and entry["max_deviation"] <= 1e-9
    code, out, _ = run("grover-invert", "--kind", "random", "--n", "6", "--x", "101010", "--iterations", "2")
    (entry,) = json.loads(out)["results"]
    assert code == 0 and entry["queries"] == 4


def test_compare_csv():
    code, out, _ = run("compare", "--n", "4", "8", "12", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["n", "A_queries", "C_queries", "A_success", "C_success"]
    assert [(r["n"], r["A_queries"], r["C_queries"]) for r in rows] == [
        ("4", "4", "6"), ("8", "8", "24"), ("12", "12", "100")]
    assert all(abs(float(r["A_success"]) - 1) <= 1e-9 for r in rows)


def test_compare_comma_list():
    assert run("compare", "--n", "4,8", "--format", "csv")[1] == run("compare", "--n", "4", "8", "--format", "csv")[1]


@pytest.mark.parametrize("op,j", [("u_f", 0), ("o_full", 0), ("o_pair", 1), ("diffusion", 0),
                                  ("q", 1), ("q_prime", 1), ("m_f", 0)])
def test_verify_lowering(op, j):
    code, out, _ = run("verify-lowering", "--op", op, "--n", "4", "--j", str(j))
    (entry,) = json.loads(out)["results"]
    assert code == 0 and entry["max_deviation"] <= 1e-9 and entry["mode"] == "dense"


def test_verify_lowering_sampled_wide():
    code, out, _ = run("verify-lowering", "--op", "q_prime", "--n", "6", "--j", "2")
    assert code == 0 and json.loads(out)["results"][0]["mode"] == "sampled"


def test_gate_counts():
    code, out, _ = run("gate-counts", "--op", "o_pair", "--n", "6", "--j", "1")
    (entry,) = json.loads(out)["results"]
    assert code == 0
    assert entry["native"]["gates"] == {"CNOT": 4, "CZ": 1, "X": 4}
    assert entry["native"]["oracle_calls"] == 2


# -- exit codes ---------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    ("invert-exact", "--n", "5"),
    ("invert-exact", "--n", "4", "--x", "101"),
    ("invert-exact", "--n", "4", "--x", "sample:17"),
    ("invert-exact", "--perm", "/nonexistent/f.perm"),
    ("invert-exact", "--n", "4", "--tol", "-1"),
    ("invert-exact", "--n", "4", "--format", "csv"),
    ("verify-lowering", "--op", "q", "--n", "4", "--j", "2"),
    ("verify-lowering", "--op", "teleport", "--n", "4"),
    ("frobnicate",),
    ("compare", "--n", "five"),
    (),
])
def test_config_errors_exit_2(argv):
    code, out, err = run(*argv)
    assert code == 2 and out == "" and "error" in err


def test_corrupt_perm_exit_2(tmp_path):
    path = tmp_path / "bad.perm"
    path.write_text("perm v1 n=2\n00\n00\n10\n11\n")
    code, _, err = run("invert-exact", "--perm", str(path))
    assert code == 2 and "bijection" in err


def test_verification_failure_exit_1():
    # a tolerance below rounding noise makes the Grover comparison fail
    code, out, _ = run("grover-search", "--x", "0110", "--tol", "1e-300")
    assert code == 1 and json.loads(out)["passed"] is False


# -- suite ------------------------------------------------------------------

def test_suite_all_pass():
    report, code = run_suite({"n": [2, 4], "kinds": ["identity", "bit_reverse"], "x": "all"})
    assert code == 0
    assert report["summary"] == {"entries": 4, "runs": 40, "passed": 4, "failed": 0, "config_errors": 0}


def test_suite_corrupt_entry(tmp_path):
    good, bad = tmp_path / "good.perm", tmp_path / "bad.perm"
    write_file(generate("random", 4, 1), good)
    bad.write_text("perm v1 n=4\n0000\n")
    matrix = {"n": [2], "kinds": ["random"], "perms": [str(good), str(bad)], "x": "all"}
    report, code = run_suite(matrix, workers=2)
    assert code == 2
    statuses = {r.get("perm", r.get("kind")): r["status"] for r in report["results"]}
    assert statuses == {"random": "pass", str(good): "pass", str(bad): "config-error"}


def test_suite_cli_and_order_independence(tmp_path):
    matrix = tmp_path / "m.json"
    matrix.write_text(json.dumps({"n": [4, 2], "kinds": ["random", "affine_gf2"], "seeds": [1, 0]}))
    code, out, _ = run("suite", str(matrix))
    assert code == 0
    serial, _ = run_suite(json.loads(matrix.read_text()))
    threaded, _ = run_suite(json.loads(matrix.read_text()), workers=4)
    assert json.loads(out)["results"] == serial["results"] == threaded["results"]


def test_suite_bad_matrix(tmp_path):
    path = tmp_path / "m.json"
    path.write_text("{not json")
    assert run("suite", str(path))[0] == 2
    path.write_text("{}")
    assert run("suite", str(path))[0] == 2


def test_select_targets():
    assert select_targets("all", 2, 0) == [0, 1, 2, 3]
    assert select_targets("10", 2, 0) == [2]
    assert select_targets("sample:3", 4, 5) == select_targets("sample:3", 4, 5)
    assert len(set(select_targets("sample:16", 4, 1))) == 16
    with pytest.raises(ConfigError):
        select_targets("sample:x", 4, 0)
