import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from romtree.cli import main
from romtree.experiment import correlation_diagnostic
from romtree.snapshots import load_archive, read_matrix
from romtree.tree import load_tree, predict


@pytest.fixture
def small_heat(tmp_path):
    out = tmp_path / "heat"
    assert main(["generate", "heat", "--gammas", "0.01:0.01:0.1", "--nx", "21", "--nt", "41", "--out", str(out)]) == 0
    return out


def test_generate_full_heat_sweep(tmp_path, capsys):
    out = tmp_path / "arch"
    assert main(["generate", "heat", "--gammas", "0.001:0.001:0.1", "--nx", "11", "--nt", "6", "--out", str(out)]) == 0
    snaps = load_archive(out)
    assert len(snaps) == 100 and snaps.ids[0] == "g0.001" and snaps.ids[-1] == "g0.1"
    assert "wrote 100 entries" in capsys.readouterr().out


def test_generate_soliton(tmp_path):
    out = tmp_path / "sol"
    assert main(["generate", "soliton", "--alphas", "0.2,0.3", "--nx", "32", "--nt", "5", "--T", "1",
                 "--out", str(out)]) == 0
    snaps = load_archive(out)
    assert snaps.n == 64 and list(snaps.ids) == ["a0.2", "a0.3"]


def test_compare_writes_reports(small_heat, tmp_path, capsys):
    ids = tmp_path / "train.txt"
    ids.write_text("g0.01\ng0.04\ng0.07\ng0.1\n")
    out = tmp_path / "rep"
    code = main(["compare", "--archive", str(small_heat), "--train-ids", f"@{ids}", "--rank", "3",
                 "--min-leaf", "2", "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "report.json").read_text())
    assert set(doc["wins"]) == {"tree_vs_global", "tree_vs_interp_best", "tree_vs_interp_mean",
                                "global_vs_interp_best", "global_vs_interp_mean"}
    with open(out / "errors.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["method"] for r in rows} == {"tree", "global", "interp"}
    assert len([r for r in rows if r["method"] == "interp"]) == 6 * 4
    assert "report written" in capsys.readouterr().out


def test_compare_train_frac(small_heat, tmp_path):
    out = tmp_path / "rep"
    assert main(["compare", "--archive", str(small_heat), "--train-frac", "0.5", "--seed", "1", "--rank", "2",
                 "--min-leaf", "1", "--methods", "tree,global", "--out", str(out)]) == 0
    doc = json.loads((out / "report.json").read_text())
    assert len(doc["config"]["train_ids"]) == 5 and len(doc["per_test"]) == 5


def test_correlate_matches_library(small_heat, capsys):
    assert main(["correlate", "--archive", str(small_heat), "--rank", "3"]) == 0
    printed = capsys.readouterr().out.splitlines()[0]
    expected = correlation_diagnostic(load_archive(small_heat), 3)[0]
    assert printed == f"correlation: {expected!r}"
    with open(small_heat / "scatter_r3.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 45


def test_tree_fit_and_predict(small_heat, tmp_path, capsys):
    tdir = tmp_path / "tree"
    assert main(["tree", "fit", "--archive", str(small_heat), "--rank", "2", "--min-leaf", "2", "--out", str(tdir)]) == 0
    basis_file = tmp_path / "b.snpx"
    capsys.readouterr()
    assert main(["tree", "predict", "--tree", str(tdir), "--lambda", "0.035", "--out", str(basis_file)]) == 0
    line = json.loads(capsys.readouterr().out)
    tree = load_tree(tdir)
    assert line["region"] == tree.leaf_for([0.035]).region
    assert np.array_equal(read_matrix(basis_file), predict(tree, [0.035]).phi)


def test_import_csv_and_info(tmp_path, capsys):
    arch = tmp_path / "a"
    for k in range(2):
        f = tmp_path / f"m{k}.csv"
        np.savetxt(f, np.arange(6.0).reshape(3, 2) + k, delimiter=",")
        assert main(["import-csv", "--from-csv", str(f), "--id", f"m{k}", "--lambda", f"{k},1.5",
                     "--archive", str(arch)]) == 0
    snaps = load_archive(arch)
    assert list(snaps.ids) == ["m0", "m1"] and snaps.d == 2
    capsys.readouterr()
    assert main(["info", "--archive", str(arch)]) == 0
    out = capsys.readouterr().out
    assert "entries: 2  n: 3  d: 2" in out and "lambda[0]: min 0.0 max 1.0" in out


def test_exit_codes(tmp_path, small_heat, capsys):
    assert main(["info", "--archive", str(tmp_path / "nowhere")]) == 2
    assert main(["compare", "--archive", str(small_heat), "--rank", "2", "--min-leaf", "1", "--out", "x"]) == 1
    assert main(["compare", "--archive", str(small_heat), "--train-ids", "nope", "--rank", "2",
                 "--min-leaf", "1", "--out", str(tmp_path / "r")]) == 1
    assert main(["correlate", "--archive", str(small_heat), "--rank", "500"]) == 1
    assert main(["bogus"]) == 1
    assert main(["tree", "predict", "--tree", "", "--lambda", "0.1"]) == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "romtree", "info", "--archive", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 2 and "I/O error" in res.stderr
