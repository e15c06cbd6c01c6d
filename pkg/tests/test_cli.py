import json
import subprocess
import sys
from fractions import Fraction as F

import pytest

import freqseq.cli as cli
from freqseq.numeration import EquivalenceReport
from freqseq.torus import CertificationReport, PrecisionExhausted, construct_beta


@pytest.fixture()
def w23(tmp_path):
    p = tmp_path / "w23.txt"
    p.write_text("2/3\n1/3\n")
    return str(p)


@pytest.fixture()
def unsorted_weights(tmp_path):
    p = tmp_path / "w.txt"
    p.write_text("# three letters, user order\n0.3\n0.5\n0.2\n")
    return str(p)


@pytest.fixture()
def quarters(tmp_path):
    p = tmp_path / "part.txt"
    p.write_text("0 1/4 0.4\n1/4 1/2 0.3\n1/2 3/4 0.2\n3/4 1 0.1\n")
    return str(p)


def read_jsonl(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh]


# ----------------------------------------------------------------- usage

def test_usage_errors_exit_2(w23):
    for argv in ([],
                 ["gen", "--terms", "5"],  # no spec source
                 ["gen", "--weights", w23, "--geometric", "2", "--terms", "5"],
                 ["gen", "--weights", w23],  # no --terms
                 ["numer", "--terms", "10"],  # no --base
                 ["frobnicate"]):
        with pytest.raises(SystemExit) as ei:
            cli.main(argv)
        assert ei.value.code == 2, argv


def test_bad_prefix_token_exits_2(w23, capsys):
    with pytest.raises(SystemExit) as ei:
        cli.main(["gen", "--weights", w23, "--terms", "5", "--prefix", "x"])
    assert ei.value.code == 2
    assert "prefix token" in capsys.readouterr().err


# ------------------------------------------------------------------- gen

def test_gen_golden_jsonl(w23, tmp_path):
    out = tmp_path / "seq.jsonl"
    rc = cli.main(["gen", "--weights", w23, "--terms", "9",
                   "--mode", "exact", "--out", str(out)])
    assert rc == 0
    rows = read_jsonl(out)
    assert [r["letter"] for r in rows] == [1, 2, 1, 1, 2, 1, 1, 2, 1]
    assert [r["n"] for r in rows] == list(range(1, 10))


def test_gen_user_letter_mapping(unsorted_weights, tmp_path):
    out = tmp_path / "seq.jsonl"
    cli.main(["gen", "--weights", unsorted_weights, "--terms", "6",
              "--mode", "exact", "--out", str(out)])
    # the heaviest weight sits at user position 2
    assert read_jsonl(out)[0]["letter"] == 2


def test_gen_geometric_with_joker(tmp_path):
    out = tmp_path / "seq.jsonl"
    rc = cli.main(["gen", "--geometric", "10", "--prefix", "J",
                   "--terms", "22", "--mode", "exact", "--out", str(out)])
    assert rc == 0
    letters = [r["letter"] for r in read_jsonl(out)]
    assert letters == [0] + [1] * 9 + [2] + [1] * 9 + [2, 1]


def test_gen_default_mode_is_float(w23, tmp_path):
    out = tmp_path / "seq.jsonl"
    rc = cli.main(["gen", "--weights", w23, "--terms", "100",
                   "--out", str(out)])
    assert rc == 0
    assert len(read_jsonl(out)) == 100


def test_gen_trace_csv(w23, tmp_path):
    out = tmp_path / "seq.jsonl"
    trace = tmp_path / "trace.csv"
    cli.main(["gen", "--weights", w23, "--terms", "1000", "--mode", "exact",
              "--out", str(out), "--trace", str(trace)])
    lines = trace.read_text().splitlines()
    assert lines[0].startswith("N,max_abs_deviation")
    assert lines[-1].startswith("1000,")


def test_gen_sum_not_one_message(tmp_path, capsys):
    p = tmp_path / "w.txt"
    p.write_text("0.4\n0.3\n0.2\n")
    rc = cli.main(["gen", "--weights", str(p), "--terms", "5"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "SumNotOne" in err
    assert "residual=1/10" in err


def test_gen_prefix_maps_user_letters(unsorted_weights, tmp_path):
    out = tmp_path / "seq.jsonl"
    cli.main(["gen", "--weights", unsorted_weights, "--terms", "4",
              "--mode", "exact", "--prefix", "J,1", "--out", str(out)])
    rows = read_jsonl(out)
    assert rows[0]["letter"] == 0
    assert rows[1]["letter"] == 1  # round-trips through the permutation


# ------------------------------------------------------------------ diag

def test_diag_stdout_report(w23, capsys):
    rc = cli.main(["diag", "--weights", w23, "--terms", "1000"])
    assert rc == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == "N,max_abs_deviation,sum_deficits,sum_excesses,argmax_letter"
    assert lines[1] == "1,1/3,1/3,1/3,2"
    assert lines[2] == "10,1/30,1/30,1/30,2"
    assert lines[-1].startswith("convergence: slope -1.0000")


def test_diag_trace_to_file(w23, tmp_path, capsys):
    trace = tmp_path / "t.csv"
    rc = cli.main(["diag", "--weights", w23, "--terms", "100",
                   "--trace", str(trace)])
    assert rc == 0
    assert trace.read_text().splitlines()[1] == "1,1/3,1/3,1/3,2"
    assert "convergence:" in capsys.readouterr().out


def test_diag_short_run_reports_unavailable(w23, capsys):
    rc = cli.main(["diag", "--weights", w23, "--terms", "10"])
    assert rc == 0
    assert "convergence: unavailable" in capsys.readouterr().out


def test_diag_stamp_header(w23, capsys):
    cli.main(["diag", "--weights", w23, "--terms", "100", "--stamp"])
    assert capsys.readouterr().out.startswith("# stamp ")


# ----------------------------------------------------------------- numer

def test_numer_equal(capsys):
    rc = cli.main(["numer", "--base", "10", "--terms", "1000"])
    assert rc == 0
    assert capsys.readouterr().out.strip() == "EQUAL n=1000"


def test_numer_mismatch_exit_3(monkeypatch, capsys):
    fake = EquivalenceReport(b=10, n=50, equal=False,
                             first_mismatch=7, triple=(1, 2, 1))
    monkeypatch.setattr(cli, "verify_equivalence", lambda *a, **k: fake)
    rc = cli.main(["numer", "--base", "10", "--terms", "50"])
    assert rc == 3
    assert capsys.readouterr().out.strip() == \
        "MISMATCH at n=7: dem=1 counter=2 subst=1"


# ------------------------------------------------------------------ beta

def test_beta_certified(quarters, tmp_path, capsys):
    out = tmp_path / "w.json"
    rc = cli.main(["beta", "--partition", quarters, "--terms", "30",
                   "--out", str(out)])
    assert rc == 0
    assert capsys.readouterr().out.strip() == "CERTIFIED n=30 precision=128"
    doc = json.loads(out.read_text())
    assert doc["N"] == 30
    assert doc["beta_lo_hex"].startswith("0x1.")


def test_beta_witness_round_trips(quarters, tmp_path):
    from freqseq.torus import certify, read_witness
    out = tmp_path / "w.json"
    cli.main(["beta", "--partition", quarters, "--terms", "20",
              "--out", str(out)])
    assert certify(read_witness(str(out)))


def test_beta_not_certified_exit_4(quarters, tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(
        cli, "certification_report",
        lambda w: CertificationReport(ok=False, failed_at=3,
                                      precision_bits=w.precision_bits))
    rc = cli.main(["beta", "--partition", quarters, "--terms", "10",
                   "--out", str(tmp_path / "w.json")])
    assert rc == 4
    assert capsys.readouterr().out.strip() == "NOT-CERTIFIED at m=3"


def test_beta_precision_exhausted_exit_5(tmp_path, monkeypatch, capsys):
    tenth = tmp_path / "tenths.txt"
    tenth.write_text("".join(
        f"{i}/10 {i + 1}/10 1/10\n" for i in range(10)))
    monkeypatch.setattr(
        cli, "construct_beta",
        lambda cells, c_min: construct_beta(cells, c_min,
                                            max_precision_bits=128))
    rc = cli.main(["beta", "--partition", str(tenth), "--terms", "30",
                   "--out", str(tmp_path / "w.json")])
    assert rc == 5
    assert "PrecisionExhausted" in capsys.readouterr().err


def test_beta_bad_partition_exit_1(tmp_path, capsys):
    p = tmp_path / "p.txt"
    p.write_text("0 1/2 1/2\n2/3 1 1/2\n")  # gap
    rc = cli.main(["beta", "--partition", str(p), "--terms", "5"])
    assert rc == 1
    assert "BadPartition" in capsys.readouterr().err


# ---------------------------------------------------------- determinism

def test_gen_deterministic_in_process(w23, tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for out in (a, b):
        cli.main(["gen", "--weights", w23, "--terms", "500",
                  "--out", str(out)])
    assert a.read_bytes() == b.read_bytes()


def test_cli_deterministic_subprocess(tmp_path):
    w = tmp_path / "w.txt"
    w.write_text("0.5\n0.3\n0.2\n")
    cmd = [sys.executable, "-m", "freqseq", "diag", "--weights", str(w),
           "--terms", "1000"]
    runs = [subprocess.run(cmd, capture_output=True, check=True).stdout
            for _ in range(2)]
    assert runs[0] == runs[1]
    assert runs[0].startswith(b"N,max_abs_deviation")
