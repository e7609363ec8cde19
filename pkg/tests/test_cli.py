import json
import subprocess
import sys

import pytest

from cli_cases import outputs, prepare
from shcroute.cli import EXIT_FAILURE, EXIT_INPUT, main
from shcroute.core import read_graph, read_vertices


@pytest.fixture
def cases(tmp_path):
    return prepare(tmp_path)


@pytest.mark.parametrize("verb", ["gen random", "gen hypercube", "gen hard", "validate",
                                  "route sample", "prune run", "dynroute sim", "embed prune",
                                  "params suggest"])
def test_every_verb_runs(verb, cases, tmp_path):
    out = tmp_path / "result"
    code = main(cases[verb] + ["--out", str(out)])
    assert code == 0, verb
    assert out.read_text()


def test_gen_hard_writes_companions(cases, tmp_path):
    out = tmp_path / "hard"
    assert main(cases["gen hard"] + ["--out", str(out)]) == 0
    files = outputs(tmp_path, out)
    assert set(files) == {"", ".removed", ".demand", ".hard"}
    with open(out) as fh:
        G = read_graph(fh)
    with open(str(out) + ".hard") as fh:
        assert len(read_vertices(G, fh)) == 4
    # the written instance validates through the CLI
    assert main(["validate", "--graph", str(out), "--removed", str(out) + ".removed",
                 "--tau", "1/4", "--out", str(tmp_path / "v")]) == 0


def test_gen_hard_needs_out(cases, capsys):
    assert main(cases["gen hard"]) == EXIT_INPUT
    assert "--out" in capsys.readouterr().err


def test_validate_reports_violation(cases, tmp_path, capsys):
    (tmp_path / "many.txt").write_text("1.1\n1.2\n1.3\n2.1\n")
    code = main(["validate", "--graph", str(tmp_path / "g.shc"), "--removed", str(tmp_path / "many.txt"),
                 "--tau", "1/100"])
    lines = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
    assert code == EXIT_FAILURE
    assert lines[-1]["valid"] is False and lines[-1]["violations"] == len(lines) - 1


def test_route_sample_congestion_file(cases, tmp_path):
    out = tmp_path / "paths.csv"
    assert main(cases["route sample"] + ["--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "src,dst,length,attempts" and len(rows) == 4
    cong = (tmp_path / "paths.csv.congestion.csv").read_text().splitlines()
    assert cong[0] == "u,w,count"


def test_params_suggest_json(capsys):
    assert main(["params", "suggest", "--n", "64", "--d", "1"]) == 0
    got = json.loads(capsys.readouterr().out)
    assert got["k"] == 64 and got["tau"] == "1/4350" and got["warnings"] == []


def test_global_flags_before_verb(cases, tmp_path):
    out = tmp_path / "a"
    assert main(["--seed", "4", "--out", str(out), "gen", "random", "--k", "3", "--d", "2"]) == 0
    out2 = tmp_path / "b"
    assert main(cases["gen random"] + ["--out", str(out2)]) == 0
    assert out.read_bytes() == out2.read_bytes()


def test_input_errors(tmp_path, capsys):
    assert main(["validate", "--graph", str(tmp_path / "missing"), "--tau", "1/4"]) == EXIT_INPUT
    (tmp_path / "junk").write_text("not a graph\n")
    assert main(["validate", "--graph", str(tmp_path / "junk"), "--tau", "1/4"]) == EXIT_INPUT
    assert main(["params", "suggest", "--n", "0", "--d", "1"]) == EXIT_INPUT
    with pytest.raises(SystemExit):
        main(["gen", "random", "--k", "3"])


def test_strict_failure_exit_code(cases, tmp_path, capsys):
    # removing demand that does not exist is rejected; strict mode stops with a repro
    (tmp_path / "bad.txt").write_text("remove-demand 77\n")
    argv = cases["dynroute sim"][:]
    argv[argv.index("--script") + 1] = str(tmp_path / "bad.txt")
    assert main(argv) == EXIT_FAILURE
    assert "minimal repro" in capsys.readouterr().err


def test_console_script_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "shcroute.cli", "params", "suggest", "--n", "256", "--d", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["k"] == 16


@pytest.mark.parametrize("verb", ["gen random", "gen hard", "route sample", "prune run",
                                  "dynroute sim", "embed prune", "validate", "params suggest",
                                  "gen hypercube"])
def test_reruns_identical(verb, cases, tmp_path):
    got = []
    for tag in ("x", "y"):
        out = tmp_path / f"{tag}.out"
        main(cases[verb] + ["--out", str(out)])
        got.append(outputs(tmp_path, out))
    assert got[0] == got[1] and got[0]
