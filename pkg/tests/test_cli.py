import csv
import io
import json
from fractions import Fraction

import pytest

from arithmpc import codes
from arithmpc.cli import BENCH_COLUMNS, main
from arithmpc.ring import parse_ring

CIRCUIT = """\
RING gf:97
INPUT A x1
INPUT A x2
INPUT B y1
INPUT B y2
MUL m1 x1 y1
MUL m2 x2 y2
ADD s m1 m2
MUL p s x1
OUTPUT A s
OUTPUT B p
"""


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_bench_tau_elements_per_product(capsys):
    code, out = run(capsys, "bench", "--protocol", "tau", "--k", "8", "--c", "8", "--t", "4",
                    "--trials", "5")
    assert code == 0
    assert out.out.splitlines()[0].split(",") == BENCH_COLUMNS
    (row,) = rows(out.out)
    assert float(row["elements_per_product"]) == 32
    assert float(row["correctness_pass_rate"]) == 1.0


def test_bench_rho_zm6(capsys):
    code, out = run(capsys, "bench", "--protocol", "rho", "--ring", "zm:6", "--n", "43",
                    "--trials", "10")
    assert code == 0
    (row,) = rows(out.out)
    assert row["correctness_pass_rate"] == "1"
    assert float(row["elements_transmitted"]) == 86


def test_bench_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main(["bench", "--protocol", "nope"])
    assert e.value.code == 2
    assert "usage" in capsys.readouterr().err
    code, out = run(capsys, "bench", "--protocol", "tau", "--ring", "zm:6", "--trials", "1")
    assert code == 2 and "error" in out.err
    code, _ = run(capsys, "bench", "--protocol", "rho", "--ring", "zm:1")
    assert code == 2


def test_bench_jobs_and_determinism(capsys):
    argv = ["bench", "--protocol", "sigma", "--protocol", "wrapped-rho", "--ring", "zm:97",
            "--trials", "6", "--seed", "11"]
    _, a = run(capsys, *argv)
    _, b = run(capsys, *argv)
    _, c = run(capsys, *argv, "--jobs", "3")
    assert a.out == b.out == c.out


def test_distance_stat_matches_library(capsys):
    code, out = run(capsys, "distance", "stat", "--ring", "zm:2", "--n", "4")
    assert code == 0
    rep = json.loads(out.out)
    o = parse_ring("zm:2")
    lib = codes.stat_distance_bruteforce(o, 4, o.zero())
    d = rep["distance"]
    assert Fraction(d["numerator"], d["denominator"]) == lib <= Fraction(1, 2)
    assert d["text"] == f"{lib.numerator}/{lib.denominator}"
    assert rep["x_independent"]
    code, out = run(capsys, "distance", "stat", "--ring", "zm:2", "--n", "0")
    assert code == 2


def test_distance_psi(capsys):
    code, out = run(capsys, "distance", "psi", "--M", "3", "--k", "4")
    rep = json.loads(out.out)
    assert code == 0 and rep["within_bound"]
    assert Fraction(rep["distance"]["numerator"], rep["distance"]["denominator"]) <= Fraction(1, 16)
    code, _ = run(capsys, "distance", "psi", "--M", "30", "--k", "4")
    assert code == 2


def test_codes_gen_container(capsys, tmp_path):
    path = tmp_path / "code.bin"
    code, _ = run(capsys, "codes", "gen", "--scheme", "rs", "--k", "8", "--ring", "gf:1009",
                  "--seed", "3", "--out", str(path))
    assert code == 0
    c = codes.load_code(path.read_bytes())
    assert c.scheme == "rs" and c.k == 8 and c.n == 64
    code, out = run(capsys, "codes", "gen", "--scheme", "ring", "--k", "4", "--ring", "zm:6")
    assert json.loads(out.out)["scheme"] == "ring"


def test_run_writes_stats_and_transcript(capsys, tmp_path):
    stats, tr = tmp_path / "s.csv", tmp_path / "t.jsonl"
    code, out = run(capsys, "run", "--protocol", "rho", "--ring", "zm:6", "--seed", "4",
                    "--stats", str(stats), "--transcript", str(tr))
    assert code == 0 and json.loads(out.out)["correct"]
    (row,) = rows(stats.read_text())
    assert int(row["elements_transmitted"]) == 2 * (3 + 40)
    recs = [json.loads(line) for line in tr.read_text().splitlines()]
    assert sum(r["count"] for r in recs if r["kind"] == "ring_elems") == 86


@pytest.mark.parametrize("proto", ["sigma", "tau", "theta", "psi", "wrapped", "degree2", "multiparty"])
def test_run_protocols(capsys, proto):
    ring = "gf:1009" if proto in ("sigma", "tau") else "mat:5:2" if proto == "multiparty" else "zm:97"
    code, out = run(capsys, "run", "--protocol", proto, "--ring", ring)
    assert code == 0 and json.loads(out.out)["correct"]


def test_pdtshr(capsys, tmp_path):
    stats = tmp_path / "p.csv"
    code, out = run(capsys, "pdtshr", "--protocol", "psi", "--ring", "zm:97", "--trials", "4",
                    "--stats", str(stats))
    assert code == 0
    assert rows(stats.read_text())[0]["ciphertexts"] == "2"


@pytest.fixture
def circuit_files(tmp_path):
    c = tmp_path / "c.ac"
    c.write_text(CIRCUIT)
    i = tmp_path / "in.json"
    i.write_text(json.dumps({"x1": 3, "x2": 4, "y1": 5, "y2": 6}))
    return str(c), str(i)


@pytest.mark.parametrize("backend", ["rho", "tau", "theta", "wrapped-sigma"])
def test_eval(capsys, circuit_files, backend):
    c, i = circuit_files
    code, out = run(capsys, "eval", "--circuit", c, "--inputs", i, "--backend", backend)
    rep = json.loads(out.out)
    assert code == 0 and rep["matches_plain"]
    assert rep["outputs"] == {"A": {"s": 39}, "B": {"p": 20}}


def test_eval_errors(capsys, tmp_path, circuit_files):
    c, _ = circuit_files
    code, out = run(capsys, "eval", "--circuit", c)
    assert code == 2 and "missing inputs" in out.err
    bad = tmp_path / "bad.ac"
    bad.write_text("INPUT A a\nADD z a q\n")
    code, out = run(capsys, "eval", "--circuit", str(bad))
    assert code == 2 and "line 2" in out.err


def test_outer(capsys, circuit_files, tmp_path):
    c, i = circuit_files
    code, out = run(capsys, "outer", "--circuit", c, "--inputs", i, "--servers", "16",
                    "--block", "4", "--degree", "5", "--seed", "2")
    rep = json.loads(out.out)
    assert code == 0 and rep["outputs"] == {"A": {"s": 39}, "B": {"p": 20}}
    report = tmp_path / "abort.json"
    code, _ = run(capsys, "outer", "--circuit", c, "--inputs", i, "--corrupt", "reveal:2",
                  "--out", str(report))
    rep = json.loads(report.read_text())
    assert code == 1 and rep["abort"]["stage"] == "layer1:reveal" and rep["abort"]["parties"]
    code, _ = run(capsys, "outer", "--circuit", c, "--inputs", i, "--servers", "8", "--degree", "4")
    assert code == 2
