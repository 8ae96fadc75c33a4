import csv
import io

import pytest

from socopart.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_prints_partition(capsys):
    code, out, _ = run(capsys, "solve", "problem5", "--at", "0.5")
    assert code == EXIT_OK
    assert "partition: ({2}, {}, {1}, ({}, {}, {}))" in out
    assert out.splitlines()[1].startswith("# instance: ")


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "solve", "no_such_instance", "--at", "0")[0] == EXIT_USAGE
    assert run(capsys, "solve", "problem5")[0] == EXIT_USAGE
    assert run(capsys, "bogus")[0] == EXIT_USAGE
    assert run(capsys, "transition", "problem14", "--at", "0",
               "--order", "0")[0] == EXIT_USAGE
    bad = tmp_path / "bad.soc"
    bad.write_text("CONES\n2\nA\n1 x\nB\n1\nC\n1 0\nCBAR\n0 1\n")
    code, _, err = run(capsys, "partition", str(bad), "--at", "0")
    assert code == EXIT_USAGE and "line 4, column 3" in err


def test_numerical_failure_exit(capsys):
    code, _, err = run(capsys, "solve", "problem14", "--at", "-0.6")
    assert code == EXIT_NUMERIC
    assert "numerical failure" in err


def test_transition_verdict_line(capsys):
    code, out, _ = run(capsys, "transition", "problem14", "--at", "0")
    assert code == EXIT_OK
    assert "TRANSITION POINT (order 1, v_2' = -0.5)" in out


def test_inapplicable_verdict(capsys):
    code, out, _ = run(capsys, "transition", "problem15", "--at", "-0.5")
    assert code == EXIT_OK
    assert "INAPPLICABLE (dual nondegeneracy fails)" in out


def _rows(text, fmt):
    if fmt == "csv":
        rows = [r for r in csv.reader(io.StringIO(text))
                if r and not r[0].startswith("#")]
        return rows[1:]
    lines = text.splitlines()
    i = next(k for k, ln in enumerate(lines) if set(ln.strip()) <= {"-", " "}
             and ln.strip())
    out = []
    for ln in lines[i + 1:]:
        if not ln.strip():
            break
        out.append(ln.split())
    return out


def test_csv_and_table_carry_same_numbers(capsys):
    _, txt, _ = run(capsys, "scan", "problem5", "--from", "0.1", "--to", "0.9",
                    "--points", "5")
    _, csvo, _ = run(capsys, "scan", "problem5", "--from", "0.1", "--to", "0.9",
                     "--points", "5", "--format", "csv")
    a, b = _rows(txt, "table"), _rows(csvo, "csv")
    assert len(a) == len(b) == 5
    for ra, rb in zip(a, b):
        assert float(ra[0]) == pytest.approx(float(rb[0]), rel=1e-6)
        assert float(ra[-2]) == pytest.approx(float(rb[-2]), rel=1e-5)
        assert ra[-1] == rb[-1] == "ok"
    assert "psi concave on the samples" in txt


def test_nonlinearity_csv(capsys):
    code, out, _ = run(capsys, "nonlinearity", "problem5", "--start", "0.5",
                       "--max-iter", "3", "--format", "csv")
    assert code == EXIT_OK
    assert "# alpha_hat" in out and "alpha_k" in out


def test_scan_thread_setting(capsys, monkeypatch):
    monkeypatch.setenv("SOCO_PART_THREADS", "zero")
    assert run(capsys, "scan", "problem5", "--from", "0", "--to", "1",
               "--points", "3")[0] == EXIT_USAGE
    monkeypatch.setenv("SOCO_PART_THREADS", "2")
    assert run(capsys, "scan", "problem5", "--from", "0", "--to", "1",
               "--points", "3")[0] == EXIT_OK
