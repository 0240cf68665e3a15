"""Report serialization and the command line driver."""

import json
import math

import numpy as np
import pytest

from loclab import report
from loclab.cli import ConfigError, load_config, main, validate_config

BASE_CONFIG = {
    "schema": 1,
    "model": {"kind": "lattice", "dimension": 1, "length": 24, "disorder": 4.0, "seed": 5},
    "params": {"sigma": 0.1, "zeta": 1.0},
    "checks": [
        {"name": "sule", "zeta_grid": [1.0]},
        {"name": "ledger"},
    ],
}


def write_config(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


class TestSerialization:
    def test_jsonable_handles_numpy_and_specials(self):
        obj = {
            "a": np.float64(1.5),
            "b": np.int32(7),
            "c": np.array([1.0, 2.0]),
            "d": np.bool_(True),
            "e": float("nan"),
            "f": float("inf"),
            "g": (1, 2),
        }
        out = report.jsonable(obj)
        assert out == {"a": 1.5, "b": 7, "c": [1.0, 2.0], "d": True,
                       "e": "nan", "f": "inf", "g": [1, 2]}

    def test_canonical_json_is_sorted_and_stable(self):
        a = report.canonical_json({"b": 1, "a": np.float64(2.0)})
        b = report.canonical_json({"a": 2.0, "b": 1})
        assert a == b
        assert a.index('"a"') < a.index('"b"')
        assert a.endswith("\n")

    def test_format_cell(self):
        assert report.format_cell(True) == "true"
        assert report.format_cell(np.bool_(False)) == "false"
        assert report.format_cell(np.int64(3)) == "3"
        assert report.format_cell(0.1) == repr(0.1)
        assert report.format_cell('say "hi", bye') == '"say ""hi"", bye"'

    def test_csv_text_round_trip(self):
        text = report.csv_text(("k", "value"), [(0, 1.5), (1, 2.25)])
        lines = text.strip().splitlines()
        assert lines[0] == "k,value"
        assert [float(x) for x in lines[2].split(",")] == [1.0, 2.25]

    def test_check_result_expectation_logic(self):
        hit = report.CheckResult(name="x", kind="x", verdict=False, expect="fail")
        miss = report.CheckResult(name="x", kind="x", verdict=True, expect="fail")
        assert hit.ok and not miss.ok

    def test_write_report_layout(self, tmp_path):
        res = report.CheckResult(name="demo", kind="demo", verdict=True,
                                 summary={"value": 1.0},
                                 tables={"plot_series": (("t", "m"), [(0.0, 1.0)])})
        written = report.write_report(tmp_path, {"schema": 1}, [res], {"note": "meta"})
        payload = json.loads((tmp_path / report.REPORT_FILENAME).read_text())
        assert payload["all_ok"] is True
        assert payload["checks"][0]["summary"] == {"value": 1.0}
        assert (tmp_path / "demo_plot_series.csv").exists()
        assert (tmp_path / report.META_FILENAME).exists()
        assert set(written) == {"report", "demo_plot_series.csv", "meta"}


class TestConfigValidation:
    def test_unknown_top_key(self):
        with pytest.raises(ConfigError, match="wat"):
            validate_config({"schema": 1, "wat": 1})

    def test_unknown_nested_key_names_the_path(self):
        cfg = {"schema": 1, "model": {"kind": "lattice", "wat": 1}}
        with pytest.raises(ConfigError, match=r"model\.wat"):
            validate_config(cfg)

    def test_unknown_check_name(self):
        cfg = {"schema": 1, "checks": [{"name": "nope"}]}
        with pytest.raises(ConfigError, match=r"checks\[0\]"):
            validate_config(cfg)

    def test_schema_version_required(self):
        with pytest.raises(ConfigError, match="schema"):
            validate_config({"model": {}})

    def test_json_errors_carry_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"schema": 1,,}')
        with pytest.raises(ConfigError, match="line 1 column 14"):
            load_config(str(path))


class TestCli:
    def test_run_writes_reports_and_exits_zero(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE_CONFIG)
        out = tmp_path / "out"
        assert main(["--out", str(out), "run", cfg]) == 0
        payload = json.loads((out / "report.json").read_text())
        assert payload["all_ok"] is True
        assert [c["name"] for c in payload["checks"]] == ["spectrum", "sule", "ledger"]
        assert (out / "run_meta.json").exists()
        stdout = capsys.readouterr().out
        assert "ok   sule" in stdout

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, BASE_CONFIG)
        out = tmp_path / "out"
        assert main(["--out", str(out), "run", cfg]) == 0
        first = (out / "report.json").read_bytes()
        tables_first = (out / "spectrum_plot_eigenvalues.csv").read_bytes()
        assert main(["--out", str(out), "run", cfg]) == 0
        assert (out / "report.json").read_bytes() == first
        assert (out / "spectrum_plot_eigenvalues.csv").read_bytes() == tables_first

    def test_unknown_key_is_exit_two(self, tmp_path, capsys):
        bad = dict(BASE_CONFIG, model=dict(BASE_CONFIG["model"], wat=1))
        cfg = write_config(tmp_path, bad)
        assert main(["run", cfg]) == 2
        assert "model.wat" in capsys.readouterr().err

    def test_missing_config_is_exit_two(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "nope.json")]) == 2
        assert "cannot read" in capsys.readouterr().err

    def test_threads_must_be_positive(self, tmp_path):
        cfg = write_config(tmp_path, BASE_CONFIG)
        assert main(["--threads", "0", "run", cfg]) == 2

    def test_threads_run_matches_serial(self, tmp_path):
        cfg = write_config(tmp_path, BASE_CONFIG)
        serial, threaded = tmp_path / "s", tmp_path / "t"
        assert main(["--out", str(serial), "run", cfg]) == 0
        assert main(["--out", str(threaded), "--threads", "2", "run", cfg]) == 0
        assert (serial / "report.json").read_bytes() == (threaded / "report.json").read_bytes()

    def test_spectrum_writes_npz(self, tmp_path):
        cfg = write_config(tmp_path, BASE_CONFIG)
        out = tmp_path / "out"
        assert main(["--out", str(out), "spectrum", cfg]) == 0
        with np.load(out / "spectral.npz", allow_pickle=True) as data:
            assert len(data["eigenvalues"]) == 24

    def test_moments_subcommand(self, tmp_path):
        cfg = write_config(tmp_path, BASE_CONFIG)
        out = tmp_path / "out"
        assert main(["--out", str(out), "moments", cfg]) == 0
        series = (out / "moments_plot_series.csv").read_text().splitlines()
        assert series[0].startswith("t,")
        assert len(series) == 202

    def test_diagnose_requires_checks(self, tmp_path, capsys):
        cfg = write_config(tmp_path, dict(BASE_CONFIG, checks=[]))
        assert main(["diagnose", cfg]) == 2
        assert "at least one check" in capsys.readouterr().err

    def test_missed_expectation_is_exit_one(self, tmp_path, capsys):
        # the free chain has no uniform cross-site decay, so a plain sudec
        # check expecting a positive certified rate must fail
        cfg = write_config(tmp_path, {
            "schema": 1,
            "model": {"kind": "chain", "length": 32},
            "params": {"sigma": 0.1, "zeta": 1.0},
            "weight": {"kind": "polynomial", "kappa": 1.0},
            "checks": [{"name": "sudec", "zeta_grid": [1.0]}],
        })
        assert main(["--out", str(tmp_path / "out"), "run", cfg]) == 1
        assert "failed checks: sudec" in capsys.readouterr().err

    def test_landau_counterexample_expects_the_break(self, tmp_path):
        out = tmp_path / "out"
        assert main(["--out", str(out), "counterexample", "landau"]) == 0
        payload = json.loads((out / "report.json").read_text())
        chk = payload["checks"][0]
        assert chk["kind"] == "landau_violation"
        assert chk["verdict"] is False and chk["expect"] == "fail" and chk["ok"] is True
        assert chk["summary"]["n_star"] == 5447

    def test_ensemble_subcommand(self, tmp_path):
        cfg = write_config(tmp_path, {
            "schema": 1,
            "model": {"kind": "lattice", "dimension": 1, "length": 32,
                      "disorder": 4.0, "seed": 5},
            "params": {"sigma": 0.1, "zeta": 1.0},
            "ensemble": {"realizations": 5, "master_seed": 11, "translate_to": 8},
        })
        out = tmp_path / "out"
        assert main(["--out", str(out), "ensemble", cfg]) == 0
        payload = json.loads((out / "report.json").read_text())
        names = [c["name"] for c in payload["checks"]]
        assert names == ["ensemble_moments", "ensemble_kernel", "translation"]
        assert payload["all_ok"] is True
        trans = payload["checks"][2]["summary"]
        assert trans["rel_sigma_diff"] < trans["tolerance"]

    def test_seed_override_changes_the_model(self, tmp_path):
        cfg = write_config(tmp_path, BASE_CONFIG)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["--out", str(a), "run", cfg]) == 0
        assert main(["--out", str(b), "--seed", "99", "run", cfg]) == 0
        ra = json.loads((a / "report.json").read_text())
        rb = json.loads((b / "report.json").read_text())
        assert ra["checks"][0]["summary"]["spectrum_lo"] != rb["checks"][0]["summary"]["spectrum_lo"]
