from pathlib import Path

import pytest

from postfa import cli
from postfa.fileformat import parse_machine
from postfa.semantics import evaluate

FIX = Path(__file__).parent / "fixtures"


def run(capsys, *argv):
    code = cli.run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(out):
    return dict(line.split(" = ", 1) for line in out.splitlines())


def test_eval_leq(capsys):
    code, out, _ = run(capsys, "eval", FIX / "leq.machine", "ab")
    r = {k.strip(): v for k, v in rows(out).items()}
    assert code == 0
    assert r["p^a"] == "3/4096" and r["f^a"] == "3/4" and r["expected steps"] == "4096"


def test_eval_tsv(capsys):
    code, out, _ = run(capsys, "eval", "--tsv", FIX / "split.machine", "")
    assert code == 0 and "f^a\t1/2" in out.splitlines()


def test_eval_reads_stdin(capsys, monkeypatch):
    import io
    monkeypatch.setattr("sys.stdin", io.StringIO((FIX / "identity.machine").read_text()))
    code, out, _ = run(capsys, "eval", "-", "a")
    assert code == 0 and "f^a" in out


def test_classify_pass_and_fail(capsys):
    code, out, _ = run(capsys, "classify", FIX / "leq.machine", "--lang", "eq", "--mode", "bounded",
                       "--epsilon", "1/4", "--max-len", "8")
    assert code == 0 and "PASS, 0 counterexamples" in out
    code, out, _ = run(capsys, "classify", FIX / "leq.machine", "--lang", "pal", "--mode", "bounded",
                       "--epsilon", "1/4", "--max-len", "3", "--show", "2")
    assert code == 1 and "FAIL" in out


def test_decimal_parameters_are_refused(capsys):
    code, _, err = run(capsys, "classify", FIX / "leq.machine", "--lang", "eq", "--mode", "bounded",
                       "--epsilon", "0.25")
    assert code == 2 and "rational" in err


def test_missing_file_is_usage_error(capsys):
    code, _, err = run(capsys, "eval", FIX / "nope.machine")
    assert code == 2 and err


def test_bad_machine_reports_line(capsys):
    code, _, err = run(capsys, "eval", FIX / "bad-stochastic.machine")
    assert code == 2 and "not column stochastic" in err


def test_foreign_symbol_is_usage_error(capsys):
    code, _, _ = run(capsys, "eval", FIX / "leq.machine", "abc")
    assert code == 2


@pytest.mark.parametrize("target", ["post", "cutpoint", "complement", "amplify:2"])
def test_convert_round_trips_through_the_file_format(capsys, tmp_path, target):
    src = "leq-post.machine" if target != "post" else "leq.machine"
    out_file = tmp_path / "out.machine"
    code, _, _ = run(capsys, "convert", FIX / src, "--to", target, "-o", out_file)
    assert code == 0
    m = parse_machine(out_file.read_text())
    assert evaluate(m, "ab").valid


def test_amplify_one_is_identity(capsys):
    _, out, _ = run(capsys, "convert", FIX / "leq-post.machine", "--to", "amplify:1")
    assert parse_machine(out) == parse_machine((FIX / "leq-post.machine").read_text())


def test_convert_union_needs_operand(capsys):
    code, _, err = run(capsys, "convert", FIX / "leq-post.machine", "--to", "union")
    assert code == 2 and err


def test_convert_unknown_target(capsys):
    code, _, _ = run(capsys, "convert", FIX / "leq-post.machine", "--to", "teleport")
    assert code == 2


def test_convert_linearized(capsys):
    code, out, _ = run(capsys, "convert", FIX / "qfa-restart2.machine", "--to", "linearized")
    assert code == 0 and "linearized" in out


def test_zoo_list_and_emit(capsys):
    code, out, _ = run(capsys, "zoo", "list")
    assert code == 0 and "leq" in out and "lpal" in out
    code, out, _ = run(capsys, "zoo", "leq")
    assert code == 0 and evaluate(parse_machine(out), "ab").f_accept == 3 / 4


def test_verify_subset(capsys):
    code, out, _ = run(capsys, "verify", "--only", "1", "12")
    assert code == 0
    assert len([l for l in out.splitlines() if l.startswith("criterion")]) == 2


def test_mc(capsys):
    code, out, _ = run(capsys, "mc", FIX / "kwqfa4.machine", "ab", "--trials", "2000", "--seed", "3")
    assert code == 0 and "accept frequency" in out and "mean steps" in out


def test_mc_divergence_exit(capsys):
    code, _, err = run(capsys, "mc", FIX / "leq.machine", "ab", "--trials", "5", "--round-cap", "1")
    assert code == 1 and "trial" in err


def test_no_verb_is_usage_error(capsys):
    assert cli.run([]) == 2
