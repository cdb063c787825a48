import os
import re
from dataclasses import replace

import numpy as np
import pytest

from nlcombine.errors import ConfigError, ParseError, SizeError
from nlcombine.forecasters import Forecaster
from nlcombine.harness import (
    ExperimentError,
    bundled_config_path,
    emit_forecast_diagram,
    emit_report,
    load_config,
    load_dataset,
    read_report_csv,
    resolve_config,
    run_experiment,
)
from nlcombine.harness.cli import main
from nlcombine.harness.config import parse_combiner
from nlcombine.harness.output import write_atomic
from nlcombine.harness.runner import ENSEMBLE_LABEL, MODEL_NAMES


class PerfectForecaster(Forecaster):
    """Looks the next value up in the full series it was given."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    @property
    def min_history(self):
        return 1

    def predict_next(self, z):
        return float(self.values[len(z)])

    def params(self):
        return {}


@pytest.fixture(scope="module")
def lynx_cfg():
    # fewer epochs and a small grid keep the pipeline tests quick
    cfg = load_config(bundled_config_path("lynx"))
    return replace(cfg, mlp_epochs=200, mlp_restarts=1, svr_grid=((10.0, 1.0, 0.01),))


@pytest.fixture(scope="module")
def lynx_report(lynx_cfg):
    return run_experiment(lynx_cfg)


class TestLoad:
    def test_lynx(self):
        cfg = load_config(bundled_config_path("lynx"))
        series = load_dataset(cfg.path, cfg)
        assert len(series) == 114
        assert series.transform_log and series.values.max() < 4

    def test_airline(self):
        cfg = load_config(bundled_config_path("airline"))
        series = load_dataset(cfg.path, cfg)
        assert len(series) == 144 and series.period == 12

    def test_sunspots(self):
        cfg = load_config(bundled_config_path("sunspots"))
        assert len(load_dataset(cfg.path, cfg)) == 288

    def test_parse_error_names_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x\n1\n2\noops\n")
        cfg = replace(load_config(bundled_config_path("lynx")), path=p, total=None)
        with pytest.raises(ParseError, match=":4"):
            load_dataset(p, cfg)

    def test_length_mismatch(self, tmp_path):
        p = tmp_path / "short.csv"
        p.write_text("\n".join(str(v) for v in range(1, 50)))
        cfg = replace(load_config(bundled_config_path("lynx")), path=p)
        with pytest.raises(SizeError):
            load_dataset(p, cfg)


class TestConfig:
    def test_bundled_defaults(self):
        lynx = load_config(bundled_config_path("lynx"))
        assert (lynx.ar_order, lynx.mlp_layout, lynx.transform) == (12, (7, 5, 1), "log10")
        sun = load_config(bundled_config_path("sunspots"))
        assert (sun.ar_order, sun.mlp_layout) == (9, (4, 4, 1))
        air = load_config(bundled_config_path("airline"))
        assert air.arima_kind == "sarima" and air.mlp_layout == (12, 1, 12)
        assert air.sarima_order == (0, 1, 1) and air.sarima_seasonal == (0, 1, 1)

    def test_parse_combiner(self):
        assert parse_combiner("trimmed(10)").param == 10.0
        assert parse_combiner("winsorized(2)").param == 2
        assert parse_combiner("nonlinear_ensemble") == "nonlinear_ensemble"
        with pytest.raises(ConfigError):
            parse_combiner("bagging")

    def test_relative_paths_and_overrides(self, tmp_path):
        (tmp_path / "d.csv").write_text("\n".join(str(v) for v in range(1, 41)))
        ini = tmp_path / "c.ini"
        ini.write_text("[dataset]\npath = d.csv\ntest_len = 5\n[combiners]\nuse = median, "
                       "trimmed(20)  ; comment\n[run]\nmode = iterated\n")
        cfg = load_config(ini)
        assert cfg.path == tmp_path / "d.csv"
        assert cfg.combiners == ("median", "trimmed(20)")
        assert cfg.with_overrides(seed=4, mode=None).seed == 4
        assert cfg.with_overrides(mode=None).mode == "iterated"

    def test_bad_values(self, tmp_path):
        ini = tmp_path / "c.ini"
        ini.write_text("[dataset]\npath = d.csv\ntest_len = 5\n[run]\nmode = sideways\n")
        with pytest.raises(ConfigError):
            load_config(ini)
        with pytest.raises(ConfigError):
            resolve_config("no-such-config")


class TestRun:
    def test_row_structure(self, lynx_report):
        kinds = [r.kind for r in lynx_report.rows]
        assert kinds.count("model") == 3 and kinds.count("combiner") >= 4
        assert [r.name for r in lynx_report.rows[:3]] == list(MODEL_NAMES)
        for row in lynx_report.rows:
            assert row.ok, row.status
            assert all(np.isfinite(v) for v in row.errors.as_dict().values())

    def test_nesting_in_report(self, lynx_report):
        ens = lynx_report.row(ENSEMBLE_LABEL).validation_sse
        for name in MODEL_NAMES:
            assert ens <= lynx_report.row(name).validation_sse + 1e-9

    def test_perfect_forecaster(self, lynx_cfg):
        series = load_dataset(lynx_cfg.path, lynx_cfg)
        cfg = replace(lynx_cfg, combiners=("nonlinear_ensemble",))
        report = run_experiment(cfg, extra_models={"oracle": PerfectForecaster(series.values)})
        assert report.row(ENSEMBLE_LABEL).errors.mape < 1e-8
        assert report.row("oracle").errors.mape == 0.0

    def test_empty_combiner_list(self, lynx_cfg):
        report = run_experiment(replace(lynx_cfg, combiners=()))
        assert [r.name for r in report.rows] == list(MODEL_NAMES)
        assert report.ensemble is None

    def test_failing_combiner_does_not_abort(self, lynx_cfg):
        series = load_dataset(lynx_cfg.path, lynx_cfg)
        cfg = replace(lynx_cfg, combiners=("error_based(mape)", "median"))
        report = run_experiment(cfg, extra_models={"oracle": PerfectForecaster(series.values)})
        failed = report.row("error_based(mape)")
        assert not failed.ok and "PerfectModelError" in failed.status
        assert report.row("median").ok

    def test_stage_named_on_failure(self, lynx_cfg):
        with pytest.raises(ExperimentError) as info:
            run_experiment(replace(lynx_cfg, ar_order=90))
        assert info.value.stage == "train"

    def test_original_scale_option(self, lynx_cfg):
        cfg = replace(lynx_cfg, metrics_scale="original", combiners=("median",))
        report = run_experiment(cfg)
        series = load_dataset(cfg.path, cfg)
        np.testing.assert_allclose(report.test_actual, 10 ** series.values[-14:])


class TestOutput:
    def test_csv_round_trip(self, lynx_report, tmp_path):
        path = emit_report(lynx_report, tmp_path / "r.csv", "csv")
        assert path.read_text().splitlines()[0] == "model,MAPE,MSE,ARV"
        parsed = read_report_csv(path)
        for row in lynx_report.rows:
            e = row.errors
            assert parsed[row.name] == (e.mape, e.mse, e.arv)

    def test_text_table_is_aligned(self, lynx_report, tmp_path):
        text = emit_report(lynx_report, tmp_path / "r.txt", "table").read_text()
        body = [ln for ln in text.splitlines() if re.match(r"^(ARIMA|SVM|ANN) ", ln)]
        assert len(body) == 3
        assert len({ln.index(ln.split()[1]) + len(ln.split()[1]) for ln in body}) == 1

    def test_airline_footnote(self):
        cfg = load_config(bundled_config_path("airline"))
        cfg = replace(cfg, mlp_epochs=100, mlp_restarts=1, svr_grid=((10.0, 1.0, 0.01),),
                      combiners=("simple_average",))
        report = run_experiment(cfg)
        assert any("1e4" in note for note in report.notes)

    def test_diagram(self, tmp_path):
        rng = np.random.default_rng(0)
        actual, ens = rng.normal(size=14), rng.normal(size=14)
        csv_path, svg_path = emit_forecast_diagram(actual, {"ensemble": ens}, tmp_path / "fd")
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "index,series,value" and len(lines) == 1 + 28
        svg = svg_path.read_text()
        assert svg.count("<polyline") == 2
        assert 'data-series="actual"' in svg and 'data-series="ensemble"' in svg
        again = emit_forecast_diagram(actual, {"ensemble": ens}, tmp_path / "fd2")
        assert again[1].read_bytes() == svg_path.read_bytes()

    def test_diagram_length_mismatch(self, tmp_path):
        with pytest.raises(SizeError):
            emit_forecast_diagram([1.0, 2.0], {"x": [1.0]}, tmp_path / "fd")

    def test_atomic_write_leaves_no_temp_files(self, tmp_path):
        target = tmp_path / "out.txt"
        target.write_text("old")
        write_atomic(target, "new")
        assert target.read_text() == "new"
        assert os.listdir(tmp_path) == ["out.txt"]


class TestCli:
    def fast_config(self, tmp_path):
        src = bundled_config_path("lynx")
        text = src.read_text().replace("path = lynx.csv", f"path = {src.parent / 'lynx.csv'}")
        text += "\n"
        ini = tmp_path / "lynx.ini"
        ini.write_text(text)
        cfg = load_config(ini)
        assert cfg.path == src.parent / "lynx.csv"
        return ini

    def test_run_writes_outputs_and_is_deterministic(self, tmp_path, capsys):
        ini = self.fast_config(tmp_path)
        outs = [tmp_path / "a", tmp_path / "b"]
        for out in outs:
            assert main(["run", str(ini), "--out", str(out), "--format", "csv"]) == 0
        names = sorted(os.listdir(outs[0]))
        assert names == sorted(["report.csv", "ensemble_weights.txt", "models.txt",
                                "forecast_diagram.csv", "forecast_diagram.svg",
                                "all_forecasts.csv", "all_forecasts.svg"])
        for name in names:
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
        assert "model,MAPE,MSE,ARV" in capsys.readouterr().out

    def test_config_error_exit_code(self, capsys):
        assert main(["run", "definitely-missing.ini"]) == 2
        assert "config" in capsys.readouterr().err

    def test_stage_error_exit_code(self, tmp_path, capsys):
        ini = self.fast_config(tmp_path)
        ini.write_text(ini.read_text().replace("order = 12", "order = 90"))
        assert main(["run", str(ini), "--out", str(tmp_path / "o")]) == 1
        assert "stage 'train'" in capsys.readouterr().err
