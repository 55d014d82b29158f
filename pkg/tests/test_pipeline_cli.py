import json
import subprocess
import sys

import pytest

from g2r.automata import parse_fla, serialize_dfa
from g2r.bench import PALINDROMES, RUNNING_EXAMPLE, palindrome_grammar, running_example
from g2r.cli import main
from g2r.counting import exact_state_count
from g2r.cyk import BudgetExceeded, cyk_build
from g2r.encode import parse_dimacs, parse_mapping, parse_opb
from g2r.grammar import full_domains
from g2r.pipeline import COLUMNS, NoSolution, order_experiment, run_pipeline


@pytest.fixture
def files(tmp_path):
    (tmp_path / "ex.g").write_text(RUNNING_EXAMPLE)
    (tmp_path / "ex.dom").write_text("a\na,b\nb\n")
    (tmp_path / "pal.g").write_text(PALINDROMES)
    return tmp_path


def test_report_running_example():
    g, d = running_example()
    r = run_pipeline(g, 3, d, name="ex")
    s = r.sizes
    assert (s["enfa_states"], s["nfa_states"], s["mdfa_states"], s["mdfa_trans"]) == (14, 5, 4, 4)
    assert (s["predicted_pre"], s["predicted_post"], s["upper_bound"]) == (13, 4, 15)
    assert r.predicted_matches
    head, row = r.tsv().splitlines()
    assert head.split("\t") == list(COLUMNS)
    assert row.split("\t")[:2] == ["ex", "3"]
    assert set(r.artifacts) >= {"report.tsv", "count.tsv", "mdfa.fla", "acyclic_grammar.txt"}


def test_reports_are_reproducible():
    g = palindrome_grammar()
    d = full_domains(g.terminals, 8)
    a = run_pipeline(g, 8, d)
    b = run_pipeline(g, 8, d)
    assert a.artifacts == b.artifacts


def test_pipeline_refuses_over_budget():
    g = palindrome_grammar()
    n = 14
    _, graph = cyk_build(g, full_domains(g.terminals, n))
    need = exact_state_count(graph).exact_pre_closure + 1
    assert need == 1270
    with pytest.raises(BudgetExceeded) as err:
        run_pipeline(g, n, budget=1000)
    assert err.value.needed == need
    run_pipeline(g, n, budget=need)


def test_pipeline_no_solution():
    g, _ = running_example()
    with pytest.raises(NoSolution):
        run_pipeline(g, 3, (frozenset("b"),) * 3)
    with pytest.raises(ValueError):
        run_pipeline(g, 4, running_example()[1])


def test_order_experiment_rows():
    row = order_experiment("separation-1", 4)
    assert (row.left, row.right) == (8, 37)
    assert row.tsv() == "separation-1\t4\t8\t37\t4.6250"
    with pytest.raises(ValueError):
        order_experiment("separation-3", 4)
    with pytest.raises(ValueError):
        order_experiment("separation-1", 13)


def test_cli_pipeline(files, capsys):
    out = files / "out"
    rc = main(["pipeline", str(files / "ex.g"), "-n", "3", "--domains", str(files / "ex.dom"),
               "--name", "ex", "--out", str(out)])
    assert rc == 0
    printed = capsys.readouterr().out
    assert printed == (out / "report.tsv").read_text()
    assert parse_fla((out / "mdfa.fla").read_text()).num_states == 4


def test_cli_budget_exit_code(files, capsys):
    rc = main(["pipeline", str(files / "pal.g"), "-n", "14", "--budget", "1000"])
    assert rc == 2
    assert "1270" in capsys.readouterr().err


def test_cli_entry_point_budget(files):
    proc = subprocess.run([sys.executable, "-m", "g2r.cli", "pipeline", str(files / "pal.g"),
                           "-n", "14", "--budget", "1000"], capture_output=True, text=True)
    assert proc.returncode == 2 and proc.stdout == ""


def test_cli_errors(files, capsys):
    (files / "bad.g").write_text("S -> \n")
    assert main(["pipeline", str(files / "bad.g"), "-n", "3"]) == 1
    assert main(["count", str(files / "ex.g"), "-n", "3", "--domains", str(files / "missing")]) == 1
    assert main(["encode", str(files / "ex.g"), "--out", str(files / "o")]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_count(files, capsys):
    assert main(["count", str(files / "ex.g"), "-n", "3", "--domains", str(files / "ex.dom")]) == 0
    text = capsys.readouterr().out
    assert "exact_pre_closure\t13" in text and "exact_post_closure\t4" in text
    assert "upper_bound\t15" in text


def test_cli_order(capsys):
    assert main(["order-exp", "--family", "separation-2", "-n", "4", "6"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "family\tn\tleft\tright\tratio"
    assert lines[1].startswith("separation-2\t4\t7\t15")


def test_cli_encode_cnf(files, capsys):
    out = files / "enc"
    assert main(["encode", str(files / "ex.g"), "-n", "3", "--domains", str(files / "ex.dom"),
                 "--kind", "regular", "--strength", "weak", "--out", str(out)]) == 0
    f = parse_dimacs((out / "formula.cnf").read_text())
    names = parse_mapping((out / "formula.map").read_text())
    assert len(names) == f.num_vars and "x[1,a]" in names


def test_cli_instance_solve_and_encode(files, capsys):
    inst = files / "inst.json"
    inst.write_text(json.dumps({"shift": 1, "n": 12, "workers": 2,
                                "demands": [[5, "a1", 2], [8, "a1", 1]]}))
    answers = []
    for model in ("grammar", "regular"):
        assert main(["solve", "--model", model, "--instance", str(inst)]) == 0
        answers.append(json.loads(capsys.readouterr().out))
    assert answers[0]["objective"] == answers[1]["objective"]
    assert answers[0]["nodes"] == answers[1]["nodes"]
    out = files / "pb"
    assert main(["encode", "--instance", str(inst), "--out", str(out)]) == 0
    model = parse_opb((out / "model.opb").read_text())
    assert model.objective and model.constraints


def test_cli_automaton_tools(files, capsys):
    from g2r.bench import separation1_dfa
    (files / "a.dfa").write_text(serialize_dfa(separation1_dfa(3)))
    (files / "d.dom").write_text("0,1\n0,1\n*\n")
    assert main(["unfold", str(files / "a.dfa"), "-n", "3", "-o", str(files / "u.fla")]) == 0
    assert main(["nfa-reduce", str(files / "u.fla"), "-o", str(files / "r.fla")]) == 0
    assert main(["determinize", str(files / "r.fla"), "-o", str(files / "k.fla")]) == 0
    assert main(["minimize", str(files / "k.fla"), "-o", str(files / "m.fla")]) == 0
    assert main(["simplify", str(files / "m.fla"), "--domains", str(files / "d.dom")]) == 0
    simplified = parse_fla(capsys.readouterr().out)
    unfolded = parse_fla((files / "u.fla").read_text())
    minimal = parse_fla((files / "m.fla").read_text())
    assert minimal.words() == unfolded.words()
    assert all("2" not in w[:2] for w in simplified.words())
    assert simplified.words() == {w for w in unfolded.words() if "2" not in w[:2]}
