import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import make_dataset
from genrf.analysis import run_records
from genrf.cli import EXIT_INPUT, EXIT_OK, load_scenarios, main
from genrf.data import (
    CovariateMatrix,
    GenotypeMatrix,
    PhenotypeVector,
    WeightVector,
    align,
    load_matrix_file,
    load_weights,
    write_matrix_file,
)
from genrf.records import format_records


@pytest.fixture
def files(tmp_path):
    g, x, y = make_dataset(31, n=100, p=10, q=2, signal=0.4)
    ids = tuple(f"s{i:03d}" for i in range(100))
    geno = GenotypeMatrix(g, ids)
    write_matrix_file(geno, tmp_path / "geno.tsv")
    write_matrix_file(PhenotypeVector(y, ids), tmp_path / "pheno.tsv")
    write_matrix_file(CovariateMatrix(x, ids, ("intercept", "age")), tmp_path / "covar.tsv")
    w = np.linspace(0.5, 1.5, 10)
    write_matrix_file(WeightVector(w, geno.variant_ids), tmp_path / "weights.tsv")
    return tmp_path


def read_tsv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split("\t")
    return [dict(zip(header, ln.split("\t"))) for ln in lines[1:]]


class TestTestCommand:
    def test_single_genrf_record(self, files, capsys):
        out = files / "res.tsv"
        code = main(["test", str(files / "geno.tsv"), str(files / "pheno.tsv"), "--out", str(out)])
        assert code == EXIT_OK
        (rec,) = read_tsv(out)
        assert rec["method"] == "GENRF"
        assert 0.0 <= float(rec["p_value"]) <= 1.0
        assert (rec["n"], rec["p"], rec["q"]) == ("100", "10", "1")
        assert "GENRF" in capsys.readouterr().out
        manifest = json.loads((files / "res.tsv.manifest.json").read_text())
        assert manifest["command"] == "test"
        assert manifest["inputs"]["genotypes"].endswith("geno.tsv")

    @pytest.mark.parametrize("suffix", ["tsv", "jsonl"])
    def test_matches_library_exactly(self, files, suffix):
        out = files / f"res.{suffix}"
        argv = [
            "test",
            str(files / "geno.tsv"),
            str(files / "pheno.tsv"),
            "--covariates", str(files / "covar.tsv"),
            "--weights", str(files / "weights.tsv"),
            "--methods", "GENRF,SKAT,LINEAR",
            "--out", str(out),
        ]
        assert main(argv) == EXIT_OK

        geno = load_matrix_file(files / "geno.tsv", "genotype")
        ds = align(
            geno,
            load_matrix_file(files / "pheno.tsv", "phenotype"),
            load_matrix_file(files / "covar.tsv", "covariate"),
        )
        w = load_weights(files / "weights.tsv", geno.variant_ids)
        records = run_records(ds, ("GENRF", "SKAT", "LINEAR"), w)
        assert out.read_text() == format_records(records, suffix)
        if suffix == "jsonl":
            got = [json.loads(ln) for ln in out.read_text().splitlines()]
            assert [r["p_value"] for r in got] == [r["p_value"] for r in records]
            assert [r["method"] for r in got] == ["GENRF", "SKAT", "LINEAR"]

    def test_mismatched_ids(self, files, capsys):
        y = np.zeros(100)
        ids = tuple(f"t{i:03d}" for i in range(100))
        write_matrix_file(PhenotypeVector(y, ids), files / "bad.tsv")
        out = files / "res.tsv"
        code = main(["test", str(files / "geno.tsv"), str(files / "bad.tsv"), "--out", str(out)])
        assert code == EXIT_INPUT
        assert not out.exists()
        assert "error" in capsys.readouterr().err

    def test_bad_genotype_reports_line(self, files, capsys):
        text = (files / "geno.tsv").read_text().splitlines()
        text[3] = text[3][:-1] + "7"
        (files / "geno.tsv").write_text("\n".join(text) + "\n")
        code = main(["test", str(files / "geno.tsv"), str(files / "pheno.tsv"), "--out", str(files / "r.tsv")])
        assert code == EXIT_INPUT
        assert "line 4" in capsys.readouterr().err

    def test_unknown_method(self, files):
        code = main(
            ["test", str(files / "geno.tsv"), str(files / "pheno.tsv"), "--methods", "BURDEN", "--out", str(files / "r.tsv")]
        )
        assert code == EXIT_INPUT


SCENARIO = """\
name: null_small
n: 40
rho: 0.3
n_reps: 25
seed: 77
model: {family: normal_main, a: 0.0}
"""


class TestSimulateCommand:
    def test_deterministic_across_runs_and_threads(self, tmp_path):
        path = tmp_path / "one.scenarios"
        path.write_text(SCENARIO)
        outs = []
        for threads in (1, 1, 3):
            out = tmp_path / f"out{len(outs)}"
            assert main(["simulate", str(path), "--out", str(out), "--threads", str(threads)]) == EXIT_OK
            outs.append(out)
        for name in ("null_small.tsv", "null_small.json"):
            first = (outs[0] / name).read_bytes()
            assert all((o / name).read_bytes() == first for o in outs[1:])

    def test_malformed_key(self, tmp_path, capsys):
        path = tmp_path / "bad.scenarios"
        path.write_text(SCENARIO + "colour: red\n")
        assert main(["simulate", str(path), "--out", str(tmp_path / "o")]) == EXIT_INPUT
        assert "colour" in capsys.readouterr().err

    def test_grid_for_sweep(self, tmp_path, capsys):
        path = tmp_path / "sweep.scenarios"
        path.write_text(
            "- {name: a, n: 30, rho: 0.0, n_reps: 10, column: '0.0', model: {family: normal_main, a: 0.5}}\n"
            "- {name: b, n: 30, rho: 0.5, n_reps: 10, column: '0.5', model: {family: normal_main, a: 0.5}}\n"
        )
        assert main(["simulate", str(path), "--out", str(tmp_path / "o")]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.splitlines()[0].split()[2:] == ["0.0", "0.5"]
        assert (tmp_path / "o" / "summary.tsv").read_text() == out

    def test_overrides(self, tmp_path):
        path = tmp_path / "one.scenarios"
        path.write_text(SCENARIO)
        main(["simulate", str(path), "--out", str(tmp_path / "o"), "--reps", "5", "--seed", "3", "--methods", "GENRF"])
        doc = json.loads((tmp_path / "o" / "null_small.json").read_text())
        assert doc["scenario"]["n_reps"] == 5 and doc["scenario"]["seed"] == 3
        assert [r["method"] for r in doc["results"]] == ["GENRF"]


class TestPresets:
    @pytest.mark.parametrize("name", ["table1", "table2_normal", "table2_exponential", "table3"])
    def test_presets_load(self, name):
        scenarios = load_scenarios(name)
        assert len({s.name for s in scenarios}) == len(scenarios)
        assert all(s.n == 100 and s.p == 10 and s.maf == 0.3 for s in scenarios)

    def test_table1_shape(self):
        scenarios = load_scenarios("table1")
        assert len(scenarios) == 20
        assert sorted({s.rho for s in scenarios}) == [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
        assert {s.model.a for s in scenarios} == {0.0, 0.5}


class TestQuadformCommand:
    def test_prints_probability(self, capsys):
        assert main(["quadform", "1", "1", "--x", "5.991465"]) == EXIT_OK
        assert float(capsys.readouterr().out.split()[0]) == pytest.approx(0.05, abs=1e-6)

    def test_hidden_from_help(self, capsys):
        with pytest.raises(SystemExit):
            main(["--help"])
        assert "quadform" not in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "genrf", "quadform", "2", "1", "0.5", "--x", "5"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert float(proc.stdout.split()[0]) == pytest.approx(0.226432, abs=1e-5)
