import json
import math
import subprocess
import sys
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from conftest import near_one_factor, random_correlation
from mvpert.cli import STAGES, RunReport, main
from mvpert.corr_matrix import equicorrelated
from mvpert.fileio import write_matrix

SCHEMA = json.loads((Path(__file__).parents[1] / "docs" / "run_report.schema.json").read_text())


@pytest.fixture
def files(tmp_path):
    rng = np.random.default_rng(42)
    mats = {
        "id2.csv": np.eye(2),
        "id3.csv": np.eye(3),
        "id8.csv": np.eye(8),
        "r05_2.csv": [[1, 0.5], [0.5, 1]],
        "equi036_5.csv": np.asarray(equicorrelated(5, 0.36).entries),
        "equi30_3.csv": np.asarray(equicorrelated(3, 0.30).entries),
        "equi35_3.csv": np.asarray(equicorrelated(3, 0.35).entries),
        "equi30_4.json": np.asarray(equicorrelated(4, 0.30).entries),
        "rand6.csv": random_correlation(rng, 6, rank_extra=12),
        "near3.json": near_one_factor(rng, 3),
        "asym.csv": [[1, 0.5], [0.4, 1]],
        "indef.csv": [[1, 0.9, -0.9], [0.9, 1, 0.9], [-0.9, 0.9, 1]],
        "singular5.csv": _near_singular(rng, 5, 1e-5),
    }
    for name, m in mats.items():
        write_matrix(tmp_path / name, m)
    return tmp_path


def _near_singular(rng, n, lam_min):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    lam = np.linspace(lam_min, 1.0, n)
    lam[-1] = n - lam[:-1].sum()
    a = (q * lam) @ q.T
    d = np.sqrt(np.diag(a))
    a = a / np.outer(d, d)
    np.fill_diagonal(a, 1.0)
    return 0.5 * (a + a.T)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    report = json.loads(out.out) if out.out else None
    if report is not None:
        jsonschema.validate(report, SCHEMA)
    return code, report, out.err


class TestGauss:
    def test_independent_orthant(self, capsys, files):
        code, rep, err = run(capsys, "gauss", "--rho", files / "id3.csv", "--xmax", "0,0,0")
        assert code == 0
        assert abs(rep["expansion"]["i_infinity"] - 0.125) < 1e-8
        assert "headline" in err

    def test_exact_one_factor(self, capsys, files):
        code, rep, _ = run(capsys, "gauss", "--rho", files / "equi036_5.csv", "--xmax", "0,0,0,0,0")
        assert abs(rep["expansion"]["i1"]) < 1e-12 and abs(rep["expansion"]["i2"]) < 1e-12
        assert rep["warnings"] == []

    def test_mc_oracle_block(self, capsys, files):
        code, rep, _ = run(capsys, "gauss", "--rho", files / "rand6.csv", "--xmax", "1,1,1,1,1,1",
                           "--compare-mc", 1_000_000, "--seed", 42)
        assert code == 0
        assert rep["oracle"]["method"] == "mc_cholesky" and rep["oracle"]["seed"] == 42
        assert rep["oracle_abs_diff"] == pytest.approx(abs(rep["expansion"]["i_infinity"] - rep["oracle"]["value"]))
        assert rep["input"]["config"]["prng"].startswith("numpy.random.Generator(PCG64)")

    def test_grid_oracle(self, capsys, files):
        code, rep, _ = run(capsys, "gauss", "--rho", files / "near3.json", "--xmax", "0.5,0,1",
                           "--compare-grid", 64)
        assert rep["oracle"]["method"] == "tensor_grid"
        assert rep["oracle_abs_diff"] < 1e-3

    def test_stages_in_order(self, capsys, files):
        _, rep, _ = run(capsys, "gauss", "--rho", files / "near3.json", "--xmax", "0,0,0", "--timings")
        assert [s["name"] for s in rep["stages"]] == list(STAGES)
        assert all(s["ms"] >= 0 for s in rep["stages"])
        _, rep, _ = run(capsys, "gauss", "--rho", files / "near3.json", "--xmax", "0,0,0")
        assert all(set(s) == {"name"} for s in rep["stages"])

    def test_infinite_limits(self, capsys, files):
        _, rep, _ = run(capsys, "gauss", "--rho", files / "r05_2.csv", "--xmax", "0,inf")
        assert rep["expansion"]["headline"] == pytest.approx(0.5, abs=1e-10)
        assert rep["input"]["xmax"] == [0.0, "inf"]

    @pytest.mark.parametrize("order", [0, 1, 2])
    def test_order_flag(self, capsys, files, order):
        _, rep, _ = run(capsys, "gauss", "--rho", files / "near3.json", "--xmax", "0,0,0", "--order", order)
        e = rep["expansion"]
        assert (e["i1"] is None) == (order < 1)
        assert (e["i2"] is None) == (order < 2)
        assert (e["i_infinity"] is None) == (order < 2)
        assert e["headline"] == [e["partial0"], e["pade1"], e["i_infinity"]][order]

    def test_naive_flag_agrees(self, capsys, files):
        _, a, _ = run(capsys, "gauss", "--rho", files / "near3.json", "--xmax", "0.2,0,1")
        _, b, _ = run(capsys, "gauss", "--rho", files / "near3.json", "--xmax", "0.2,0,1", "--naive-n4")
        assert a["expansion"]["i2"] == pytest.approx(b["expansion"]["i2"], abs=1e-14)

    def test_lambda_min_regularizes(self, capsys, files):
        _, rep, _ = run(capsys, "gauss", "--rho", files / "singular5.csv", "--xmax", "0,0,0,0,0",
                        "--lambda-min", 0.05)
        assert rep["metrics"]["lambda_min"] >= 0.05 * (1 - 1e-9)


class TestErrors:
    def test_asymmetric(self, capsys, files):
        code, rep, err = run(capsys, "gauss", "--rho", files / "asym.csv", "--xmax", "0,0")
        assert code == 3 and rep is None and "symmetric" in err

    def test_not_positive_definite(self, capsys, files):
        code, _, err = run(capsys, "gauss", "--rho", files / "indef.csv", "--xmax", "0,0,0")
        assert code == 3 and "positive definite" in err

    def test_length_mismatch(self, capsys, files):
        code, _, _ = run(capsys, "gauss", "--rho", files / "id3.csv", "--xmax", "0,0")
        assert code == 3

    @pytest.mark.parametrize("xmax", ["a,b,c", "nan,0,0", ""])
    def test_bad_xmax(self, capsys, files, xmax):
        code, _, _ = run(capsys, "gauss", "--rho", files / "id3.csv", "--xmax", xmax)
        assert code == 2

    def test_missing_file(self, capsys, files):
        assert run(capsys, "gauss", "--rho", files / "nope.csv", "--xmax", "0")[0] == 2

    def test_bad_flags(self, capsys, files):
        with pytest.raises(SystemExit) as info:
            main(["gauss", "--rho", str(files / "id3.csv"), "--xmax", "0,0,0", "--order", "3"])
        assert info.value.code == 2

    def test_bad_nu(self, capsys, files):
        for nu in ("0", "-2"):
            assert run(capsys, "student-t", "--rho", files / "id2.csv", "--xmax", "0,0", "--nu", nu)[0] == 2

    def test_grid_too_large(self, capsys, files):
        assert run(capsys, "gauss", "--rho", files / "rand6.csv", "--xmax", "0,0,0,0,0,0",
                   "--compare-grid", 16)[0] == 2

    def test_bad_nodes(self, capsys, files):
        assert run(capsys, "gauss", "--rho", files / "id2.csv", "--xmax", "0,0", "--nodes", 4)[0] == 2


class TestStudentT:
    def test_orthant_symmetry(self, capsys, files):
        _, rep, _ = run(capsys, "student-t", "--rho", files / "id2.csv", "--xmax", "0,0", "--nu", 4)
        assert abs(rep["expansion"]["headline"] - 0.25) < 1e-6
        assert rep["input"]["nu"] == 4.0

    def test_elliptical_orthant(self, capsys, files):
        _, rep, _ = run(capsys, "student-t", "--rho", files / "r05_2.csv", "--xmax", "0,0", "--nu", 7)
        assert abs(rep["expansion"]["headline"] - 1 / 3) < 1e-4

    def test_gaussian_limit(self, capsys, files):
        args = ["--rho", files / "near3.json", "--xmax", "0.5,-0.3,1"]
        _, t, _ = run(capsys, "student-t", *args, "--nu", 1e6)
        _, g, _ = run(capsys, "gauss", *args)
        assert abs(t["expansion"]["headline"] - g["expansion"]["headline"]) < 1e-3

    def test_mc_oracle(self, capsys, files):
        _, rep, _ = run(capsys, "student-t", "--rho", files / "near3.json", "--xmax", "0,0,0", "--nu", 3,
                        "--compare-mc", 200_000, "--seed", 1)
        assert rep["oracle"]["value"] == pytest.approx(rep["expansion"]["headline"], abs=5e-3)

    def test_grid_oracle_rejected(self, capsys, files):
        assert run(capsys, "student-t", "--rho", files / "id2.csv", "--xmax", "0,0", "--nu", 3,
                   "--compare-grid", 32)[0] == 2


class TestSensitivity:
    def test_identical(self, capsys, files):
        _, rep, _ = run(capsys, "sensitivity", "--rho", files / "equi30_3.csv", "--rho2", files / "equi30_3.csv",
                        "--xmax", "0,0,0")
        assert all(v == 0.0 for v in rep["sensitivity"]["difference"].values())
        assert rep["sensitivity"]["per_order"] == [0.0, 0.0, 0.0]

    def test_sign_against_mc(self, capsys, files):
        _, rep, _ = run(capsys, "sensitivity", "--rho", files / "equi30_3.csv", "--rho2", files / "equi35_3.csv",
                        "--xmax", "0,0,0", "--compare-mc", 1_000_000)
        d = rep["sensitivity"]["difference"]["i_infinity"]
        assert np.sign(d) == np.sign(rep["oracle"]["value"]) == 1
        assert rep["sensitivity"]["rho_f_seed"] == "rho"
        assert "matrix2_sha256" in rep["input"]

    def test_dimension_mismatch(self, capsys, files):
        code, _, _ = run(capsys, "sensitivity", "--rho", files / "equi30_3.csv", "--rho2", files / "equi30_4.json",
                         "--xmax", "0,0,0")
        assert code == 3


class TestMetrics:
    def test_identity(self, capsys, files):
        _, rep, _ = run(capsys, "metrics", "--rho", files / "id8.csv")
        m = rep["metrics"]
        assert m["r_of_n"] == pytest.approx(0.125, abs=1e-15)
        assert m["sigma2_rho_int"] == 0.0
        assert m["regularization_suggested"] is False

    def test_equicorrelated(self, capsys, files):
        _, rep, _ = run(capsys, "metrics", "--rho", files / "equi036_5.csv")
        assert rep["metrics"]["sigma2_rho_int"] == pytest.approx(0.0, abs=1e-30)

    def test_near_singular_flags_regularization(self, capsys, files):
        _, rep, _ = run(capsys, "metrics", "--rho", files / "singular5.csv")
        _, calm, _ = run(capsys, "metrics", "--rho", files / "near3.json")
        assert rep["metrics"]["lambda_min"] == pytest.approx(1e-5, rel=0.5)
        assert rep["metrics"]["regularization_suggested"] is True
        assert rep["metrics"]["sigma2_eps_int"] > 1e3 * calm["metrics"]["sigma2_eps_int"]
        assert any("lambda-min" in w for w in rep["warnings"])

    def test_invalid(self, capsys, files):
        assert run(capsys, "metrics", "--rho", files / "indef.csv")[0] == 3


class TestReport:
    def test_round_trip(self, capsys, files):
        main(["gauss", "--rho", str(files / "equi036_5.csv"), "--xmax", "0,0,inf,0,0", "--timings"])
        text = capsys.readouterr().out
        report = RunReport.from_json(text)
        assert report.to_json() == text
        assert math.isinf(report.input["xmax"][2])

    def test_byte_identical_runs(self, capsys, files):
        args = ["gauss", "--rho", str(files / "near3.json"), "--xmax", "0.1,0.2,0.3", "--compare-mc", "20000"]
        outs = []
        for threads in ("1", "8", "1"):
            main(args + ["--threads", threads])
            outs.append(capsys.readouterr().out)
        assert outs[0] == outs[1] == outs[2]

    def test_console_script(self, files):
        proc = subprocess.run(
            [sys.executable, "-m", "mvpert.cli", "gauss", "--rho", str(files / "id2.csv"), "--xmax", "0,0"],
            capture_output=True, text=True, check=True,
        )
        assert json.loads(proc.stdout)["expansion"]["headline"] == pytest.approx(0.25)
