"""
Tests for the experiment harness.

Covers:
  - INI parse/emit and the validation table (ConfigError keys)
  - RowBuilder rows, CSV rendering and the manifest
  - aggregate reports and report.md
  - msgpack artifacts
  - run_experiment / write_outputs on small instances
  - the CLI entry point and its exit codes
"""

import json

import numpy as np
import pytest

from harness import (
    CSV_HEADER,
    ConfigError,
    ExperimentConfig,
    RowBuilder,
    aggregate,
    all_passed,
    emit_config,
    parse_config,
    render_csv,
    save_report,
)
from harness.artifacts import load_artifact, save_artifact
from harness.experiments import replot, run_experiment, write_outputs
from harness.report import read_csv, write_csv, write_manifest
from harness.run import main, output_root
from transport2d import PotentialField

LIOUVILLE_INI = """\
[experiment]
id = liouville
alpha = 2.0
beta = 1.0
seed = 3

[analysis]
noise = 0.001
"""


def _write(path, text: str):
    path.write_text(text, encoding="utf-8")
    return path


def _rows() -> RowBuilder:
    rows = RowBuilder("exp1d", "alpha=2.0;beta=0.0;seed=0")
    rows.check_close("gamma_fit", 3.01, 3.0, 0.01, "1D exponent", rel=True)
    rows.check_at_most("mass_balance_error", 1e-3, 1e-8, "mass balance")
    rows.report_only("gamma_fit_stderr", 0.002, "1D exponent")
    return rows


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

class TestConfig:
    def test_parse_defaults(self):
        cfg = parse_config(LIOUVILLE_INI)
        assert cfg.experiment == "liouville"
        assert cfg.alpha == 2.0 and cfg.beta == 1.0 and cfg.seed == 3
        assert cfg.gamma == pytest.approx(1.5)
        assert cfg.solver.grushin_grids == (64, 128, 256)
        assert cfg.analysis.fit_window == (1e-4, 0.1)
        assert cfg.params == "alpha=2.0;beta=1.0;seed=3"

    def test_emit_is_canonical(self):
        cfg = parse_config(LIOUVILLE_INI)
        text = emit_config(cfg)
        again = parse_config(text)
        assert again == cfg
        assert emit_config(again) == text

    def test_vectors_and_polygons(self):
        text = (
            "[experiment]\nid = flat2d\n\n"
            "[source]\nkind = polygon\nvertices = 0 0; 1 0; 0 1\n\n"
            "[solver]\ngrushin_grids = 8 16\n"
        )
        cfg = parse_config(text)
        assert cfg.source.vertices == ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))
        assert cfg.solver.grushin_grids == (8, 16)
        assert parse_config(emit_config(cfg)).source.vertices == cfg.source.vertices

    def test_grid_shape(self):
        cfg = parse_config("[experiment]\nid = flat2d\n[solver]\ngrid_shape = 21 95\n")
        assert cfg.solver.grid_shape == (21, 95)
        assert parse_config(emit_config(cfg)).solver.grid_shape == (21, 95)
        assert parse_config(LIOUVILLE_INI).solver.grid_shape == ()

    def test_from_dict_roundtrip(self):
        cfg = parse_config(LIOUVILLE_INI)
        assert ExperimentConfig.from_dict(json.loads(cfg.to_json())) == cfg

    @pytest.mark.parametrize("text,key", [
        ("[experiment]\nid = exp1d\nalpha = -1\n", "alpha"),
        ("[experiment]\nid = nope\n", "experiment.id"),
        ("[experiment]\nalpha = 1\n", "experiment.id"),
        ("[solver]\ngrid_n = 64\n", "experiment"),
        ("[experiment]\nid = exp1d\ncolor = red\n", "experiment.color"),
        ("[experiment]\nid = exp1d\n[extras]\nx = 1\n", "extras"),
        ("[experiment]\nid = exp1d\n[solver]\nspeed = 3\n", "solver.speed"),
        ("[experiment]\nid = exp1d\n[solver]\ngrid_n = many\n", "solver.grid_n"),
        ("[experiment]\nid = exp1d\n[source]\nkind = star\n", "source.kind"),
        ("[experiment]\nid = grushin\n[solver]\ngrushin_grids = 32 16\n", "solver.grushin_grids"),
        ("[experiment]\nid = curved2d\n[source]\nkind = box\n", "source.kind"),
        ("[experiment]\nid = flat2d\n[solver]\ngrid_shape = 4 4 4\n", "solver.grid_shape"),
    ])
    def test_error_names_key(self, text, key):
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert exc.value.key == key
        assert str(exc.value).startswith(f"{key}: ")

    def test_unparsable_value_message(self):
        with pytest.raises(ConfigError, match="cannot parse"):
            parse_config("[experiment]\nid = exp1d\nseed = x\n")

    def test_bad_coefficient(self):
        with pytest.raises(ConfigError, match="radial coefficient power"):
            parse_config("[experiment]\nid = doubling\n[source]\ncoeff = radial\ncoeff_params = 1 1 2\n")

    def test_strip_distance_body(self):
        cfg = parse_config("[experiment]\nid = flat2d\n[source]\nkind = strip\nbounds = -1 0 1 1\n")
        body = cfg.source.distance_body()
        xmin, ymin, xmax, ymax = body.bounds
        assert (ymin, ymax) == (0.0, 1.0)
        assert xmax - xmin > 1e3


# ---------------------------------------------------------------------------
# Rows and files
# ---------------------------------------------------------------------------

class TestReportRows:
    def test_row_flags(self):
        rows = _rows().rows
        assert [r.csv_fields()[-1] for r in rows] == ["pass", "FAIL", "info"]
        assert rows[0].target == "3" and rows[0].tol == "0.01 rel"
        assert rows[1].target == "<= 1e-08"
        assert not all_passed(rows)
        assert all_passed([rows[0], rows[2]])

    def test_between_and_failure(self):
        rows = RowBuilder("doubling", "p")
        assert rows.check_between("d", 2.0, 1.0, 4.0, "prov").target == "[1, 4]"
        failed = rows.failure("d_run", "ValueError: boom", "prov")
        assert not failed.passed and failed.diagnostic == "ValueError: boom"
        assert failed.csv_fields()[3] == "nan"

    def test_nonfinite_value_fails(self):
        row = RowBuilder("e", "p").check_at_least("x", float("nan"), 0.0, "prov")
        assert not row.passed

    def test_csv_layout(self, tmp_path):
        rows = _rows().rows
        text = render_csv(rows)
        assert text.splitlines()[0] == ",".join(CSV_HEADER)
        assert text.splitlines()[1] == "exp1d,alpha=2.0;beta=0.0;seed=0,gamma_fit,3.01,3,0.01 rel,pass"
        back = read_csv(write_csv(rows, tmp_path / "results.csv"))
        assert [r["metric"] for r in back] == ["gamma_fit", "mass_balance_error", "gamma_fit_stderr"]

    def test_manifest(self, tmp_path):
        rows = _rows().rows
        path = write_manifest(rows, tmp_path / "manifest.json", extra={"experiment": "exp1d"})
        data = json.loads(path.read_text())
        assert data["experiment"] == "exp1d"
        assert data["metrics"]["gamma_fit"] == {"provenance": "1D exponent", "asserted": True}
        assert data["metrics"]["gamma_fit_stderr"]["asserted"] is False
        assert list(data["failures"]) == ["mass_balance_error"]


class TestAggregate:
    def test_report_counts_and_markdown(self, tmp_path):
        write_csv(_rows().rows, tmp_path / "a" / "results.csv")
        ok = RowBuilder("grushin", "p")
        ok.check_at_most("gmres_residual", 1e-10, 1e-8, "prov")
        write_csv(ok.rows, tmp_path / "b" / "results.csv")

        report = save_report(tmp_path)
        assert report["n_runs"] == 2
        assert report["n_asserted"] == 3 and report["n_passed"] == 2
        assert report["per_experiment"]["grushin"] == {"n_runs": 1, "n_asserted": 1, "n_passed": 1}
        md = (tmp_path / "report.md").read_text()
        assert md.startswith("# Experiment Report")
        assert "✅" in md and "❌" in md
        assert json.loads((tmp_path / "report.json").read_text())["n_runs"] == 2

    def test_empty_root(self, tmp_path):
        report = aggregate(tmp_path)
        assert report["n_runs"] == 0 and report["pass_rate"] == 0.0


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------

class TestArtifacts:
    def test_numpy_values_are_stored_plain(self, tmp_path):
        path = save_artifact({"t": np.linspace(0.0, 1.0, 3), "n": np.int64(4), "nested": {"x": (1, 2)}},
                             tmp_path / "sub" / "map.msgpack")
        data = load_artifact(path)
        assert data == {"t": [0.0, 0.5, 1.0], "n": 4, "nested": {"x": [1, 2]}}

    def test_non_mapping_rejected(self, tmp_path):
        with pytest.raises(TypeError, match="mapping"):
            save_artifact([1, 2, 3], tmp_path / "x.msgpack")

    def test_missing_artifact(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_artifact(tmp_path / "absent.msgpack")


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

class TestExperiments:
    def test_liouville_rows_and_outputs(self, tmp_path):
        result = run_experiment(parse_config(LIOUVILLE_INI))
        by_metric = {r.metric: r for r in result.report_rows}
        assert by_metric["liouville_exact_error"].passed
        assert by_metric["ma_identity_residual"].passed
        assert by_metric["profile_mass_balance_variation"].passed
        assert not by_metric["holder_mu"].asserted

        written = write_outputs(result, tmp_path)
        names = {p.name for p in written}
        assert {"results.csv", "manifest.json", "liouville.msgpack"} <= names
        assert load_artifact(tmp_path / "liouville.msgpack")["model"]

    def test_grushin_small_grids(self, tmp_path):
        cfg = parse_config("[experiment]\nid = grushin\nalpha = 1.0\nbeta = 1.0\n"
                           "[solver]\ngrushin_grids = 8 16\n")
        result = run_experiment(cfg)
        by_metric = {r.metric: r for r in result.report_rows}
        assert "richardson_ratio_8_16" in by_metric
        assert by_metric["kernel_poly_residual"].passed
        assert by_metric["constant_data_error"].passed
        assert by_metric["max_principle_excess"].passed
        assert by_metric["gmres_residual"].passed

    def test_grushin_unequal_exponents_assert_residual_order(self):
        cfg = parse_config("[experiment]\nid = grushin\nalpha = 2.0\nbeta = 0.0\n"
                           "[solver]\ngrushin_grids = 16 32 64\n")
        by_metric = {r.metric: r for r in run_experiment(cfg).report_rows}
        assert "kernel_poly_residual" not in by_metric
        for metric in ("kernel_residual_order_16_32", "kernel_residual_order_32_64"):
            assert by_metric[metric].asserted and by_metric[metric].passed
            assert by_metric[metric].target == "2"

    def test_flat2d_anchor_and_floor_on_small_strip(self):
        cfg = parse_config(
            "[experiment]\nid = flat2d\nalpha = 2.0\nbeta = 0.0\n"
            "[source]\nkind = strip\nbounds = -0.5 0 0.5 1\n"
            "[target]\nkind = strip\nbounds = -0.5 0 0.5 1\n"
            "[solver]\nn_cells = 168\ngrid_shape = 7 24\n"
            "[analysis]\nn_heights = 4\nh_max = 0.06\nbias_factor = 15.0\n"
        )
        result = run_experiment(cfg)
        by_metric = {r.metric: r for r in result.report_rows}
        # the floor follows the cell size across the boundary, not the coarser tangential one
        assert by_metric["h_floor"].value == pytest.approx(15.0 / 24 ** 2)
        assert by_metric["cyclical_monotonicity_violation"].passed

        u = PotentialField.from_dict(result.artifacts["potential"])
        assert u.meta["anchor"] == pytest.approx([0.0, 0.0])
        assert u.meta["potential"] == "midrange"
        edge = np.array([[-1.0 / 7, 0.0], [0.0, 0.0], [1.0 / 7, 0.0]])
        np.testing.assert_allclose(u.evaluate(edge), [0.5 / 49, 0.0, 0.5 / 49], atol=1e-9)

    def test_exp1d_plot_and_replot(self, tmp_path):
        cfg = parse_config("[experiment]\nid = exp1d\nalpha = 2.0\nbeta = 0.0\n")
        result = run_experiment(cfg)
        write_outputs(result, tmp_path)
        svg = tmp_path / "gamma_fit.svg"
        assert svg.exists()
        svg.unlink()
        assert [p.name for p in replot(tmp_path)] == ["gamma_fit.svg"]
        assert replot(tmp_path / "nowhere") == []

    def test_runner_failure_becomes_row(self, monkeypatch):
        import harness.experiments as experiments

        def boom(result):
            raise RuntimeError("solver diverged")

        monkeypatch.setitem(experiments.RUNNERS, "exp1d", boom)
        result = run_experiment(ExperimentConfig("exp1d"))
        assert not result.passed
        row = result.report_rows[-1]
        assert row.metric == "exp1d_run"
        assert "solver diverged" in row.diagnostic


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

class TestCLI:
    def test_output_root_precedence(self, monkeypatch, tmp_path):
        monkeypatch.setenv("OTLAB_OUTPUT_ROOT", str(tmp_path / "env"))
        assert output_root(str(tmp_path / "cli")) == tmp_path / "cli"
        assert output_root(None) == tmp_path / "env"
        monkeypatch.delenv("OTLAB_OUTPUT_ROOT")
        assert str(output_root(None)) == "results"

    def test_run_writes_run_directory(self, tmp_path):
        cfg = _write(tmp_path / "liou.ini", LIOUVILLE_INI)
        root = tmp_path / "out"
        code = main(["--output-root", str(root), "run", str(cfg)])
        assert code in (0, 1)
        run_dir = root / "liou"
        for name in ("results.csv", "manifest.json", "run.log", "command.txt"):
            assert (run_dir / name).exists()
        assert "params: alpha=2.0;beta=1.0;seed=3" in (run_dir / "command.txt").read_text()
        assert (root / "report.md").exists()

    def test_bad_config_exit_code(self, tmp_path):
        cfg = _write(tmp_path / "bad.ini", "[experiment]\nid = exp1d\nalpha = -1\n")
        assert main(["--output-root", str(tmp_path), "--log-to-terminal", "run", str(cfg)]) == 2

    def test_suite_needs_configs(self, tmp_path):
        assert main(["--output-root", str(tmp_path), "suite", str(tmp_path)]) == 2

    def test_report_missing_directory(self, tmp_path):
        assert main(["report", str(tmp_path / "missing")]) == 2
