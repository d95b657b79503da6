import json
import subprocess
import sys

import pytest

from conftest import KLAYER_BLOCKED, single_node, small_model, zero_chain
from treebest.cli import main
from treebest.diverse import DiversitySpec, write_diversity
from treebest.model import write_model


@pytest.fixture
def model_file(tmp_path):
    def make(model, name="m.tm"):
        path = tmp_path / name
        path.write_text(write_model(model))
        return str(path)

    return make


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out.splitlines(), err


def parse_line(line):
    fields = dict(part.split("=", 1) for part in line.split())
    h = None if fields["hamming"] == "-" else int(fields["hamming"])
    return float(fields["energy"]), h, [int(s) for s in fields["x"].split(",")]


def test_solve_single_node(capsys, model_file):
    code, out, _ = run(capsys, "solve", model_file(single_node([0.5, 0.2])))
    assert code == 0 and out == ["energy=0.2 hamming=- x=1"]


def test_mbest_exact(capsys, model_file):
    code, out, _ = run(capsys, "mbest", model_file(single_node([0.1, 0.7, 0.3])), "--m", "3", "--exact")
    assert code == 0
    assert [parse_line(l)[0] for l in out] == [0.1, 0.3, 0.7]


def test_mbest_exhausted_exit_zero(capsys, model_file):
    code, out, err = run(capsys, "mbest", model_file(single_node([0.1, 0.7])), "--m", "4")
    assert code == 0 and len(out) == 2 and "exhausted" in err


def test_diverse_accumulate_zero_chain(capsys, model_file):
    code, out, _ = run(capsys, "diverse", model_file(zero_chain(4)), "--method", "accumulate", "--k", "2")
    assert code == 0 and len(out) == 2
    energy, h, x = parse_line(out[1])
    assert energy == 0.0 and h >= 2 and sum(a != b for a, b in zip(x, parse_line(out[0])[2])) == h


@pytest.mark.parametrize("method", ["klayer", "accumulate", "divmbest"])
def test_diverse_methods(capsys, model_file, method):
    code, out, _ = run(capsys, "diverse", model_file(small_model(3)), "--method", method, "--k", "1")
    assert code == 0 and len(out) == 2


def test_diverse_m3_accumulate(capsys, model_file):
    code, out, _ = run(capsys, "diverse", model_file(zero_chain(6)), "--method", "accumulate", "--k", "2", "--m", "3")
    assert code == 0 and len(out) == 3


def test_diverse_no_valid_exit_two(capsys, model_file):
    code, out, err = run(capsys, "diverse", model_file(single_node([0.1, 0.4])), "--method", "klayer", "--k", "2")
    # the MAP is still printed, the failure goes to stderr
    assert code == 2 and len(out) == 1 and "NoValidSolution" in err
    code, _, _ = run(capsys, "diverse", model_file(KLAYER_BLOCKED), "--method", "klayer", "--k", "2")
    assert code == 2


def test_diversity_file(capsys, model_file, tmp_path):
    m = zero_chain(3)
    spec = DiversitySpec.hamming((0, 0, 0), 3, m.label_counts)
    path = tmp_path / "d.txt"
    path.write_text(write_diversity(spec, m))
    code, out, _ = run(capsys, "diverse", model_file(m), "--method", "accumulate", "--k", "3", "--diversity-file", path)
    assert code == 0 and parse_line(out[1])[2] == [1, 1, 1]
    code, _, err = run(capsys, "diverse", model_file(m), "--method", "klayer", "--k", "1", "--diversity-file", path)
    assert code == 1 and err


def test_json_matches_text(capsys, model_file):
    path = model_file(small_model(8))
    for argv in (["mbest", path, "--m", "4"], ["diverse", path, "--method", "klayer", "--k", "2"]):
        _, text, _ = run(capsys, *argv)
        _, js, _ = run(capsys, *argv, "--json")
        objs = [json.loads(l) for l in js]
        assert set(objs[0]) == {"energy", "hamming", "assignment", "status", "method"}
        for line, obj in zip(text, objs, strict=True):
            energy, h, x = parse_line(line)
            assert energy == pytest.approx(obj["energy"], rel=1e-11)
            assert h == obj["hamming"] and x == obj["assignment"]


def test_oracle(capsys, model_file):
    path = model_file(single_node([0.1, 0.7, 0.3]))
    code, out, _ = run(capsys, "oracle", path, "--m", "2")
    assert code == 0 and [parse_line(l)[0] for l in out] == [0.1, 0.3]
    code, out, _ = run(capsys, "oracle", model_file(KLAYER_BLOCKED), "--k", "2")
    assert code == 0 and parse_line(out[1])[0] == pytest.approx(2.8)
    assert run(capsys, "oracle", path)[0] == 1
    assert run(capsys, "oracle", path, "--m", "1", "--k", "1")[0] == 1


def test_input_errors(capsys, tmp_path):
    assert run(capsys, "solve", tmp_path / "missing.tm")[0] == 1
    bad = tmp_path / "bad.tm"
    bad.write_text("NOT A MODEL\n")
    code, out, err = run(capsys, "solve", bad)
    assert code == 1 and out == [] and "parse error" in err
    assert run(capsys, "mbest", bad, "--m", "0")[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys)[0] == 1


def test_bench_stdout_and_summary(capsys, tmp_path):
    summary = tmp_path / "s.csv"
    argv = ["bench", "--trees", "2", "--nodes", "6", "--k-list", "1,2", "--methods", "mlayer_dp,accumulate",
            "--repeats", "1", "--out", "-", "--summary", summary]
    code, out, _ = run(capsys, *argv)
    assert code == 0 and out[0].startswith("seed,tree_index,method") and len(out) == 1 + 2 * 2 * 2
    assert summary.read_text().startswith("method,k,n_solved")
    assert run(capsys, "bench", "--methods", "nope", "--out", "-")[0] == 1
    assert run(capsys, "bench", "--k-list", "0", "--out", "-")[0] == 1


def test_module_entry_point(model_file):
    proc = subprocess.run(
        [sys.executable, "-m", "treebest", "solve", model_file(single_node([0.5, 0.2]))],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and proc.stdout.strip() == "energy=0.2 hamming=- x=1"
