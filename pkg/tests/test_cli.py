import json
import math
import subprocess
import sys
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from oracles import SQ2
from resonators.cli import run
from resonators.geometry import Arrangement, build_arrangement

SCHEMAS = Path(__file__).resolve().parents[1] / "docs" / "schemas"


def schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def ok_json(capsys, name, *argv):
    code, out, err = call(capsys, *argv)
    assert code == 0, err
    data = json.loads(out)
    jsonschema.validate(data, schema(name))
    return data


class TestSpectrum:
    def test_ring6(self, capsys):
        d = ok_json(capsys, "spectrum", "spectrum", "--kind", "ring", "--N", "6")
        got = [(round(g["a"], 12), g["multiplicity"]) for g in d["groups"]]
        assert got == [(0, 1), (1, 2), (3, 2), (4, 1)]

    def test_grid(self, capsys):
        d = ok_json(capsys, "spectrum", "spectrum", "--kind", "grid", "--dims", "2", "3")
        assert [g["multiplicity"] for g in d["groups"]] == [1, 1, 1, 2, 1]

    def test_csv(self, capsys):
        code, out, _ = call(capsys, "spectrum", "--kind", "chain", "--N", "4", "--format", "csv")
        assert code == 0 and len(out.strip().splitlines()) == 5

    @pytest.mark.parametrize("argv", [["spectrum", "--kind", "chain", "--N", "2"],
                                      ["spectrum", "--kind", "grid", "--dims", "1", "4"],
                                      ["spectrum", "--kind", "hexagon"],
                                      ["frobnicate"],
                                      ["frequencies", "--kind", "chain", "--N", "4"],
                                      ["frequencies", "--N", "4", "--delta", "0.01", "--Lambda", "1", "--beta", "1.2"],
                                      ["capacitance", "--N", "3", "--eps", "1.5"]])
    def test_usage_errors(self, capsys, argv):
        code, _, err = call(capsys, *argv)
        assert code == 1 and "usage error" in err

    def test_two_spheres_need_flag(self, capsys):
        assert call(capsys, "capacitance", "--N", "2", "--eps", "0.1")[0] == 1
        d = ok_json(capsys, "capacitance", "capacitance", "--N", "2", "--eps", "0.1", "--cross-check")
        assert d["n"] == 2
        d = ok_json(capsys, "spectrum", "spectrum", "--N", "2", "--cross-check")
        assert [g["a"] for g in d["groups"]] == pytest.approx([0.0, 2.0])

    def test_missing_file_is_computational(self, capsys):
        assert call(capsys, "modes", "--kind", "ring", "--N", "4", "--capacitance", "file",
                    "--capacitance-file", "/nonexistent.json")[0] == 2


class TestFrequencies:
    def test_chain4_ratios(self, capsys):
        d = ok_json(capsys, "frequencies", "frequencies", "--kind", "chain", "--N", "4",
                    "--delta", "1e-3", "--Lambda", "1", "--beta", "0.5")
        re = {f["i"]: f["re"] for f in d["frequencies"]}
        assert re[1] is None
        np.testing.assert_allclose([re[i] / d["eta"] for i in (2, 3, 4)],
                                   [math.sqrt(2 - SQ2), SQ2, math.sqrt(2 + SQ2)], rtol=1e-14)
        assert d["span"]["span_symbolic"] == "(0, 2eta)"

    def test_symbolic_eps(self, capsys):
        d = ok_json(capsys, "frequencies", "frequencies", "--N", "3", "--delta", "1e-4", "--Lambda", "10",
                    "--beta", "0.5", "--M", "2.0")
        assert d["params"]["eps_symbolic"] is True and d["frequencies"][0]["re"] > 0

    def test_user_matrix_with_imaginary(self, capsys, tmp_path):
        arr = build_arrangement("chain", 4, 1.0, 1e-2)
        C = np.array([[6, -5, -0.2, -0.1], [-5, 11, -5, -0.2], [-0.2, -5, 11, -5], [-0.1, -0.2, -5, 6.0]])
        path = tmp_path / "C.json"
        path.write_text(json.dumps({"n": 4, "provenance": "UserSupplied", "entries": C.ravel().tolist()}))
        d = ok_json(capsys, "frequencies", "frequencies", "--N", "4", "--delta", "1e-3", "--eps", "0.01",
                    "--capacitance-file", str(path))
        ims = {f["i"]: f["im"] for f in d["frequencies"]}
        assert all(v <= 0 for v in ims.values())
        assert abs(ims[2]) <= 1e-10 * abs(ims[1])

    def test_csv(self, capsys):
        code, out, _ = call(capsys, "frequencies", "--kind", "ring", "--N", "5", "--delta", "1e-3",
                            "--eps", "1e-3", "--format", "csv")
        assert code == 0 and out.splitlines()[0].startswith("i,re,im")


class TestModes:
    def test_chain(self, capsys):
        d = ok_json(capsys, "modes", "modes", "--kind", "chain", "--N", "4")
        rates = {tuple(g["edge"]): g["rate"] for g in d["modes"][2]["gaps"]}
        assert rates == {(1, 2): "Full", (2, 3): "Suppressed", (3, 4): "Full"}

    def test_ring_resolved_with_model(self, capsys):
        d = ok_json(capsys, "modes", "modes", "--kind", "ring", "--N", "6", "--eps", "1e-4")
        assert len(d["modes"]) == 6

    def test_grid_csv(self, capsys):
        code, out, _ = call(capsys, "modes", "--kind", "grid", "--dims", "2", "3", "--format", "csv")
        assert code == 0 and out.splitlines()[0] == "resonator,u1,u2,u3,u4,u5,u6"


class TestCapacitance:
    def test_model(self, capsys):
        d = ok_json(capsys, "capacitance", "capacitance", "--N", "3", "--eps", str(math.exp(-10)))
        assert d["provenance"] == "Model" and d["entries"][0] == pytest.approx(10 * math.pi)

    def test_bem_checks(self, capsys):
        d = ok_json(capsys, "capacitance", "capacitance", "--N", "2", "--eps", "0.2", "--capacitance", "bem",
                    "--panels", "200", "--cross-check")
        assert d["provenance"] == "BEM" and all(d["checks"].values())

    def test_out_file(self, capsys, tmp_path):
        out = tmp_path / "c.csv"
        code, stdout, _ = call(capsys, "capacitance", "--N", "3", "--eps", "0.1", "--format", "csv", "--out", str(out))
        assert code == 0 and stdout == "" and out.read_text().startswith("row,c1,c2,c3")


class TestConfig:
    def test_file_and_override(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"arrangement": {"kind": "ring", "N": 5}, "gap": {"Lambda": 1.0, "beta": 0.5},
                                   "physics": {"delta": 1e-3}}))
        a = ok_json(capsys, "frequencies", "frequencies", "--config", str(cfg))
        b = ok_json(capsys, "frequencies", "frequencies", "--config", str(cfg), "--Lambda", "4", "--beta", "0.5")
        assert b["frequencies"][1]["re"] == pytest.approx(2 * a["frequencies"][1]["re"], rel=1e-14)
        c = ok_json(capsys, "frequencies", "frequencies", "--config", str(cfg), "--N", "7")
        assert len(c["frequencies"]) == 4

    def test_conflicting_gap(self, capsys, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"gap": {"eps": 0.1, "Lambda": 1.0}, "physics": {"delta": 0.01}}))
        assert call(capsys, "frequencies", "--config", str(cfg))[0] == 1

    def test_missing_config(self, capsys):
        assert call(capsys, "spectrum", "--config", "/no/such/file.json")[0] == 1

    def test_byte_identical(self, capsys):
        argv = ["verify", "--kind", "ring", "--N", "5"]
        first = call(capsys, *argv)[1]
        second = call(capsys, *argv)[1]
        assert first == second and first

    def test_seed_env(self, capsys, monkeypatch):
        monkeypatch.setenv("RESONATOR_SEED", "7")
        d = ok_json(capsys, "verify", "verify", "--kind", "chain", "--N", "6")
        assert d["seed"] == 7 and d["convergence"][0]["seed"] == 7


class TestVerify:
    def test_default(self, capsys):
        code, out, err = call(capsys, "verify")
        assert code == 0
        jsonschema.validate(json.loads(out), schema("verify"))
        assert err.count("PASS") == 4 and "FAIL" not in err

    def test_failure_exit_code(self, capsys):
        # a grid that starts below the asymptotic regime cannot localize the groups
        code, out, err = call(capsys, "verify", "--kind", "ring", "--N", "9", "--rho", "0.1", "0.2")
        assert code == 3 and "FAIL" in err
        jsonschema.validate(json.loads(out), schema("verify"))

    def test_tables(self, capsys):
        code, out, err = call(capsys, "tables")
        assert code == 0 and "PASS" in err
        jsonschema.validate(json.loads(out), schema("tables"))


class TestScatter:
    def test_points(self, capsys, tmp_path):
        pts = tmp_path / "pts.csv"
        pts.write_text("x,y,z\n0,0,3\n10,0,0\n")
        d = ok_json(capsys, "scatter", "scatter", "--N", "3", "--eps", "0.2", "--delta", "1e-3", "--panels", "150",
                    "--omega", "0.01", "--points", str(pts), "--direction", "0", "0", "1")
        assert len(d["coefficients"]) == 3 and len(d["fields"]) == 2 and d["residual"] <= 1e-10

    def test_needs_omega(self, capsys):
        assert call(capsys, "scatter", "--N", "3", "--eps", "0.2", "--delta", "1e-3", "--panels", "150")[0] == 1

    def test_inside_point(self, capsys, tmp_path):
        pts = tmp_path / "pts.csv"
        pts.write_text("0,0,0\n")
        code = call(capsys, "scatter", "--N", "3", "--eps", "0.2", "--delta", "1e-3", "--panels", "150",
                    "--omega", "0.01", "--points", str(pts))[0]
        assert code == 2


class TestSchemas:
    def test_arrangement(self):
        for arr in (build_arrangement("chain", 3, 1.0, 0.1), build_arrangement("grid", (2, 3), 1.0, 0.1)):
            data = json.loads(arr.to_json())
            jsonschema.validate(data, schema("arrangement"))
            assert Arrangement.from_dict(data) == arr

    def test_all_schemas_well_formed(self):
        for path in SCHEMAS.glob("*.schema.json"):
            jsonschema.Draft202012Validator.check_schema(json.loads(path.read_text()))


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "resonators.cli", "spectrum", "--N", "4"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["kind"] == "chain"
