import csv
import json
import subprocess
import sys

import pytest

from gcatlab.cli import main
from gcatlab.harness.data import make_citation_like, write_citation_dataset
from gcatlab.harness.report import read_surface


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    d = tmp_path_factory.mktemp("bundle")
    g, x, y = make_citation_like(num_nodes=90, seed=1)
    write_citation_dataset(d, g, x, y)
    return d


def run(tmp_path, *argv):
    return main([*argv, "--cache-dir", str(tmp_path / "cache")])


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


class TestCommands:
    def test_synth(self, tmp_path):
        out = tmp_path / "synth"
        assert run(tmp_path, "synth", "--grid", "8", "--case", "2", "--x-param", "4",
                   "--y-param", "-4", "--out", str(out)) == 0
        m = manifest(out)
        assert m["command"] == "synth" and len(m["outputs"]) == 2
        assert (out / m["outputs"][0]).exists()
        assert "out" not in m["config"] and "cache_dir" not in m["config"]

    def test_synth_all_cells_skips_oversized(self, tmp_path):
        out = tmp_path / "all"
        assert run(tmp_path, "synth", "--grid", "8", "--case", "4_1", "--option", "2",
                   "--all-cells", "--out", str(out)) == 0
        # only 10 and 50 points fit on 64 nodes
        assert len(manifest(out)["outputs"]) == 4

    def test_analyze_dataset(self, tmp_path, bundle, capsys):
        out = tmp_path / "an"
        assert run(tmp_path, "analyze", "--dataset-dir", str(bundle), "--dim", "8",
                   "--emb-epochs", "1", "--out", str(out)) == 0
        assert {"gconv.txt", "gcat.txt", "gconv.csv", "gcat.csv"} <= {p.name for p in out.iterdir()}
        assert "fisher" in capsys.readouterr().out

    def test_embed(self, tmp_path):
        out = tmp_path / "emb"
        assert run(tmp_path, "embed", "--grid", "5", "--dim", "4", "--emb-epochs", "1",
                   "--out", str(out)) == 0
        assert len((out / "embedding.tsv").read_text().splitlines()) == 25

    def test_classify_synthetic(self, tmp_path):
        out = tmp_path / "cl"
        emb = tmp_path / "emb"
        run(tmp_path, "embed", "--grid", "8", "--dim", "4", "--emb-epochs", "1", "--out", str(emb))
        assert run(tmp_path, "classify", "--grid", "8", "--case", "3", "--x-param", "-1",
                   "--y-param", "1", "--method", "gcat_svm", "--repeats", "2",
                   "--embedding", str(emb / "embedding.tsv"), "--out", str(out)) == 0
        rows = list(csv.DictReader(open(out / "results.csv")))
        assert rows[0]["method"] == "gcat_svm"

    def test_bench(self, tmp_path, bundle):
        out = tmp_path / "bench"
        assert run(tmp_path, "bench", "--dataset-dir", str(bundle), "--dim", "8",
                   "--emb-epochs", "1", "--repeats", "2", "--methods", "gcat_lr", "sgc_lr",
                   "--out", str(out)) == 0
        rows = list(csv.DictReader(open(out / "results.csv")))
        assert [r["method"] for r in rows] == ["gcat_lr", "sgc_lr"]

    def test_timing(self, tmp_path):
        out = tmp_path / "t"
        assert run(tmp_path, "timing", "--grid", "6", "--dense-adjacency", "--trials", "10",
                   "--features", "1", "3", "--out", str(out)) == 0
        data = json.loads((out / "timing.json").read_text())
        assert [r["features"] for r in data["rows"]] == [1, 3]
        assert data["structure"] == "dense adjacency"

    def test_surface(self, tmp_path):
        out = tmp_path / "surf"
        assert run(tmp_path, "surface", "--grid", "10", "--dim", "4", "--emb-epochs", "1",
                   "--cases", "1:1", "--methods", "--out", str(out)) == 0
        grid = read_surface(out / "surfaces" / "case_1.J.gcat.dat")
        assert grid.x_values == list(range(1, 29, 3))
        missing = json.loads((out / "missing.json").read_text())
        assert missing == []
        assert not (out / "accuracy.csv").exists()


class TestErrors:
    def test_validation_exit_code(self, tmp_path, capsys):
        assert run(tmp_path, "classify", "--grid", "6", "--method", "gcat_lr",
                   "--out", str(tmp_path / "x")) == 2
        assert "--x-param" in capsys.readouterr().err

    def test_bad_case_pair(self, tmp_path):
        assert run(tmp_path, "surface", "--grid", "6", "--cases", "9:1", "--dim", "4",
                   "--emb-epochs", "1", "--out", str(tmp_path / "s")) == 2

    def test_missing_file_exit_code(self, tmp_path):
        assert run(tmp_path, "embed", "--graph", str(tmp_path / "nope.txt"),
                   "--out", str(tmp_path / "e")) == 1

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["timing"])
        assert exc.value.code == 2

    def test_module_entry(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "gcatlab.cli", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and "surface" in proc.stdout
