import json

import numpy as np

from monoattr.attribution import integrated_gradients
from monoattr.cli import main
from monoattr.report import ReportDocument, canonical, dumps, emit_report
from monoattr.zoo import get_example


class TestCanonical:
    def test_float_digits(self):
        assert canonical(1 / 3) == 0.333333333333
        assert canonical(np.float64(2.0)) == 2.0

    def test_nan_to_null(self):
        assert canonical([np.nan, 1]) == [None, 1]

    def test_sorted_keys(self):
        assert dumps({"b": 1, "a": 2}).index('"a"') < dumps({"b": 1, "a": 2}).index('"b"')


class TestEmit:
    def _report(self):
        ex = get_example("log_diminishing")
        r = ReportDocument(ex.model.id, list(ex.domain.names), [0.0, 0.0])
        r.add_attribution(integrated_gradients(ex.model, ex.point([4, 1]), ex.point([0, 0])))
        return r

    def test_json_byte_identical(self, tmp_path):
        emit_report(self._report(), "json", tmp_path / "a.json")
        emit_report(self._report(), "json", tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_csv_tables_and_manifest(self, tmp_path):
        written = emit_report(self._report(), "csv", tmp_path / "out")
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["tables"]["attributions"]["rows"] == 2
        assert (tmp_path / "out" / "attributions.csv").read_text().startswith("method,explicand,feature")
        assert len(written) == len(manifest["tables"]) + 1

    def test_figures_opt_in(self, tmp_path):
        emit_report(self._report(), "json", tmp_path / "r.json")
        assert not (tmp_path / "r_figures").exists()
        emit_report(self._report(), "json", tmp_path / "r.json", figures=True)
        assert len(list((tmp_path / "r_figures").glob("*.png"))) == 1

    def test_bar_series(self):
        s = self._report().series[0]
        assert s["kind"] == "bar"
        assert s["labels"] == ["x1", "x2"]


class TestCommands:
    def test_attribute(self, capsys):
        assert main(["attribute", "--model", "zoo:log_diminishing", "--explicand", "4,1"]) == 0
        out = capsys.readouterr().out
        assert "3.19349" in out and "2.6615" in out

    def test_attribute_out_of_bounds(self, capsys):
        assert main(["attribute", "--model", "zoo:log_diminishing", "--explicand", "9,1"]) == 2
        assert "x1" in capsys.readouterr().err

    def test_usage_error(self, capsys):
        assert main(["attribute", "--model", "zoo:log_diminishing"]) == 2

    def test_unknown_model(self, capsys):
        assert main(["attribute", "--model", "nope", "--explicand", "1,1"]) == 2

    def test_steps_out_of_range(self, capsys):
        assert main(["attribute", "--model", "zoo:log_diminishing", "--explicand", "1,1", "--steps", "5"]) == 2

    def test_check_mono_exit_codes(self, capsys):
        assert main(["check-mono", "--model", "zoo:log_diminishing", "--samples", "500"]) == 0
        spec = json.dumps({"individual": ["x1", "x2"], "strong_pairs": [["x1", "x2"]]})
        assert main(["check-mono", "--model", "zoo:quadratic_separable", "--spec", spec, "--samples", "500"]) == 1

    def test_audit_violation_exit(self, tmp_path, capsys):
        code = main(["audit", "--model", "zoo:log_diminishing", "--samples", "300", "--out", str(tmp_path / "r.json")])
        assert code == 1
        doc = json.loads((tmp_path / "r.json").read_text())
        assert doc["audit"]["matrix"]["ASPM"]["BShap"] == "violated"

    def test_audit_clean_exit(self, capsys):
        assert main(["audit", "--model", "zoo:log_diminishing", "--samples", "300", "--methods", "ig"]) == 0

    def test_audit_csv_with_grid(self, tmp_path, capsys):
        out = tmp_path / "rep"
        code = main([
            "audit", "--model", "zoo:log_diminishing", "--samples", "200", "--grid", "x1,x2",
            "--grid-values", "0,1,4", "--format", "csv", "--out", str(out), "--figures",
        ])
        assert code == 1
        assert (out / "grid.csv").exists()
        assert (out / "figures" / "grid-BShap.png").exists()

    def test_bad_spec(self, capsys):
        assert main(["audit", "--model", "zoo:log_diminishing", "--spec", "{not json"]) == 2

    def test_gen_train_evaluate(self, tmp_path, capsys):
        data, model = tmp_path / "d.csv", tmp_path / "m.json"
        assert main(["gen-data", "--n", "600", "--seed", "1", "--out", str(data)]) == 0
        assert main(["train", "--data", str(data), "--epochs", "3", "--out", str(model)]) == 0
        assert "test_auc" in capsys.readouterr().out
        assert main(["evaluate", "--model", str(model), "--data", str(data)]) == 0
        assert capsys.readouterr().out.startswith("auc\t")
        assert main(["check-mono", "--model", str(model), "--samples", "300"]) == 0

    def test_train_synthetic_source(self, tmp_path, capsys):
        assert main(["train", "--data", "synthetic:400", "--epochs", "1", "--out", str(tmp_path / "m.json")]) == 0

    def test_runtime_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("x1,x2,x3,x4,x5,x6,x7,x8,x9,y\n1,0,zz,0,0,0,0,0,0,1\n")
        assert main(["train", "--data", str(bad), "--out", str(tmp_path / "m.json")]) == 3
