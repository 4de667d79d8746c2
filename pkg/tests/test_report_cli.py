import csv
import json

import numpy as np
import pytest

from daedex.acceptance import CriterionResult
from daedex.cli import main
from daedex.pencil import Pencil, save_pencil
from daedex.report import format_number, suite_to_json

EXACT = ("nilpotency", "chain", "resolvent", "complex_resolvent", "radiality", "complex_radiality",
         "differentiation")


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, E, A in [("ident", np.eye(3), np.zeros((3, 3))),
                       ("nilblock", [[0.0, 1.0], [0.0, 0.0]], np.eye(2)),
                       ("singular", np.zeros((2, 2)), [[1.0, 0.0], [0.0, 0.0]])]:
        out[name] = tmp_path / f"{name}.json"
        save_pencil(Pencil(E, A, name), out[name])
    return out


def run(argv, out):
    return main(list(argv) + ["--out", str(out), "--quick"])


class TestFormatting:
    @pytest.mark.parametrize("v,s", [(0.1, "0.10000000000000001"), (3, "3"), (True, "true"), ("x", "x"),
                                     (np.float64(1 / 3), "0.33333333333333331")])
    def test_number(self, v, s):
        assert format_number(v) == s

    def test_suite_json(self):
        r = CriterionResult(1, "x", True, "ok", 0.04, 30.0)
        d = json.loads(suite_to_json([r]))
        assert d["schema"] == "daedex/1" and d["all_passed"] and d["criteria"][0]["criterion"] == 1
        assert r.line() == "[PASS]  1 x: ok (0.0s / 30s)"


class TestAnalyze:
    def test_identity_all_zero(self, files, tmp_path):
        assert run(["analyze", str(files["ident"])], tmp_path / "o") == 0
        rep = json.loads((tmp_path / "o" / "ident.json").read_text())
        assert rep["schema"] == "daedex/1"
        assert all(rep[k]["value"] == 0 for k in EXACT)

    def test_nilpotent_block(self, files, tmp_path):
        assert run(["analyze", str(files["nilblock"])], tmp_path / "o") == 0
        rep = json.loads((tmp_path / "o" / "nilblock.json").read_text())
        for k in ("nilpotency", "chain", "differentiation", "resolvent"):
            assert rep[k]["value"] == 2
        assert rep["radiality"]["value"] == 1
        assert rep["estimates"]["resolvent"]["value"] == 2

    def test_singular(self, files, tmp_path, capsys):
        assert run(["analyze", str(files["singular"])], tmp_path / "o") == 2
        assert "pencil not regular" in capsys.readouterr().err

    def test_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run(["analyze", str(bad)], tmp_path / "o") == 1
        assert "error" in capsys.readouterr().err

    def test_byte_identical(self, files, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(["analyze", str(files["nilblock"])], a)
        run(["analyze", str(files["nilblock"])], b)
        names = sorted(p.name for p in a.iterdir())
        assert names == sorted(p.name for p in b.iterdir())
        assert any(n.endswith(".png") for n in names)
        for n in names:
            assert (a / n).read_bytes() == (b / n).read_bytes()

    def test_seed_keeps_exact_rows(self, files, tmp_path):
        reps = []
        for seed in ("1", "2"):
            main(["analyze", str(files["nilblock"]), "--seed", seed, "--quick", "--out", str(tmp_path / seed),
                  "--format", "json"])
            reps.append(json.loads((tmp_path / seed / "nilblock.json").read_text()))
        for k in EXACT:
            assert reps[0][k]["value"] == reps[1][k]["value"]

    def test_csv_header_and_digits(self, files, tmp_path):
        run(["analyze", str(files["nilblock"]), "--no-figures"], tmp_path / "o")
        csvs = sorted((tmp_path / "o").glob("*.csv"))
        assert csvs and not list((tmp_path / "o").glob("*.png"))
        for path in csvs:
            rows = list(csv.reader(path.open()))
            assert all(not c.replace(".", "").replace("-", "").isdigit() for c in rows[0])
            for row in rows[1:]:
                for c in row:
                    if "." in c and "e" not in c:
                        assert len(c.replace("-", "").replace(".", "").lstrip("0")) <= 17

    def test_env_out(self, files, tmp_path, monkeypatch):
        monkeypatch.setenv("DAEDEX_OUT", str(tmp_path / "env"))
        assert main(["analyze", str(files["ident"]), "--quick", "--format", "json"]) == 0
        assert (tmp_path / "env" / "ident.json").exists()


class TestExample:
    def test_heat(self, tmp_path):
        assert run(["example", "heat_hessenberg", "--n", "30"], tmp_path) == 0
        rep = json.loads((tmp_path / "heat_hessenberg.json").read_text())
        assert rep["nilpotency"]["value"] == 2
        assert (tmp_path / "heat_hessenberg_pencil.json").exists()

    def test_airy(self, tmp_path):
        assert run(["example", "airy", "--L", "20", "--n", "400"], tmp_path) == 0
        rep = json.loads((tmp_path / "airy.json").read_text())
        assert rep["estimates"]["resolvent"]["kind"] == "superpolynomial"
        assert list(tmp_path.glob("airy_*.csv"))

    def test_diag(self, tmp_path):
        assert run(["example", "diag_l2", "--K", "500"], tmp_path) == 0
        header = (tmp_path / "diag_l2_transfer_real.csv").read_text().splitlines()[0]
        assert header.startswith("lambda_re,lambda_im,norm")

    def test_unknown(self, tmp_path, capsys):
        assert run(["example", "nope"], tmp_path) == 1
        assert "heat_hessenberg" in capsys.readouterr().err


class TestUsage:
    def test_bad_flag(self):
        assert main(["analyze"]) == 1

    def test_help(self):
        assert main(["--help"]) == 0

    def test_suite_subset(self, tmp_path, capsys):
        code = run(["suite", "--only", "3,4"], tmp_path)
        out = capsys.readouterr().out
        assert "[PASS]  3" in out and "[PASS]  4" in out and code == 0
        assert json.loads((tmp_path / "suite.json").read_text())["all_passed"]

    def test_bad_only(self, tmp_path):
        assert run(["suite", "--only", "x"], tmp_path) == 1
