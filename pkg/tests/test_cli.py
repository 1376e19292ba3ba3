import json
import math

import numpy as np
import pytest

from fiegarch.cli import Config, ingest, main
from fiegarch.model import FiegarchSpec, simulate
from fiegarch.montecarlo import table41_models
from fiegarch.reporting import kv_loads, panel_dumps
from fiegarch.risk import maxloss


@pytest.fixture()
def returns_csv(tmp_path):
    rng = np.random.default_rng(42)
    path = simulate(table41_models()["M1"], 400, burn_in=200, M=2000, seed=7)
    mat = np.column_stack([path.x * 0.01])
    f = tmp_path / "returns.csv"
    f.write_text(panel_dumps(["asset"], mat))
    return f


@pytest.fixture()
def panel_csv(tmp_path):
    rng = np.random.default_rng(43)
    base = rng.standard_normal((3, 3))
    cov = 1e-4 * (base @ base.T + 3 * np.eye(3))
    mat = rng.multivariate_normal(np.zeros(3), cov, size=500)
    f = tmp_path / "panel.csv"
    f.write_text(panel_dumps(["a1", "a2", "a3"], mat))
    return f


def run(args):
    return main([str(a) for a in args])


class TestIngest:
    def test_prices_to_returns(self, tmp_path):
        f = tmp_path / "prices.csv"
        f.write_text("index,a\n0,100.0\n1,110.0\n2,121.0\n")
        panel = ingest(str(f), "csv-prices")
        np.testing.assert_allclose(panel.returns[:, 0], math.log(1.1), rtol=1e-12)
        assert panel.prices is not None

    def test_negative_price_is_load_error(self, tmp_path, capsys):
        f = tmp_path / "prices.csv"
        f.write_text("index,a\n0,100.0\n1,-1.0\n")
        code = run(["fit", "--data", f, "--format", "csv-prices"])
        assert code == 3
        assert "error[input" in capsys.readouterr().err

    def test_round_trip_ingest_emit_ingest(self, tmp_path):
        rng = np.random.default_rng(3)
        mat = rng.standard_normal((1729, 4))
        f = tmp_path / "p.csv"
        f.write_text(panel_dumps(list("wxyz"), mat))
        panel = ingest(str(f))
        emitted = panel_dumps(list(panel.assets), panel.returns,
                              index=panel.index)
        panel2 = ingest_text(tmp_path, emitted)
        assert np.array_equal(panel2.returns, panel.returns)
        assert panel2.assets == panel.assets

    def test_missing_file(self, capsys):
        assert run(["fit", "--data", "/nonexistent.csv"]) == 3


def ingest_text(tmp_path, text):
    f = tmp_path / "again.csv"
    f.write_text(text)
    return ingest(str(f))


class TestSimulateCommand:
    def test_deterministic_outputs(self, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        for out in (out1, out2):
            assert run(["simulate", "--model", "M1", "-n", 300, "--burnin", 100,
                        "--truncation", 2000, "--seed", 5, "--out", out]) == 0
        for name in ("simulate_path.csv", "simulate_result.kv",
                     "simulate_table.txt"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_seed_changes_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(["simulate", "-n", 200, "--burnin", 50, "--truncation", 1000,
             "--seed", 1, "--out", a])
        run(["simulate", "-n", 200, "--burnin", 50, "--truncation", 1000,
             "--seed", 2, "--out", b])
        assert (a / "simulate_path.csv").read_text() != (b / "simulate_path.csv").read_text()

    def test_unknown_model(self, tmp_path, capsys):
        assert run(["simulate", "--model", "M9", "--out", tmp_path]) == 4

    def test_metadata_declared(self, tmp_path):
        run(["simulate", "-n", 200, "--burnin", 50, "--truncation", 500,
             "--seed", 5, "--out", tmp_path])
        meta = kv_loads((tmp_path / "simulate_result.kv").read_text())
        for key in ("meta.library_version", "meta.sign_convention", "meta.seed",
                    "meta.level", "meta.horizon", "meta.approach"):
            assert key in meta


class TestFitForecastCommands:
    def test_fit_then_forecast(self, tmp_path, returns_csv):
        out = tmp_path / "fit"
        assert run(["fit", "--data", returns_csv, "--orders", "0,0,0,1,1",
                    "--truncation", 300, "--out", out]) == 0
        kv = kv_loads((out / "fit_result.kv").read_text())
        assert "params.d" in kv and "fit.bic" in kv
        assert isinstance(kv["fit.converged"], bool)
        fout = tmp_path / "fc"
        assert run(["forecast", "--data", returns_csv, "--model-file",
                    out / "fit_result.kv", "--horizon", 10, "--out", fout]) == 0
        fkv = kv_loads((fout / "forecast_result.kv").read_text())
        sigmas = [fkv[f"forecast.h{h}.sigma"] for h in range(1, 11)]
        assert all(s > 0 for s in sigmas)
        table = (fout / "forecast_table.txt").read_text()
        assert table.splitlines()[1].split() == ["h", "mean", "sigma"]
        assert len(table.splitlines()) == 13  # title + header + rule + 10 rows

    def test_fit_table_lists_params(self, tmp_path, returns_csv):
        out = tmp_path / "fit"
        run(["fit", "--data", returns_csv, "--orders", "0,0,0,1,1",
             "--truncation", 300, "--out", out])
        text = (out / "fit_table.txt").read_text()
        assert "omega" in text and "bic" in text


class TestRiskCommand:
    def test_univariate_all_rows_es_dominates(self, tmp_path, returns_csv):
        out = tmp_path / "risk"
        assert run(["risk", "--data", returns_csv, "--approach", "all",
                    "--truncation", 300, "--out", out]) == 0
        kv = kv_loads((out / "risk_result.kv").read_text())
        rows = 0
        for approach in ("empirical", "normal", "riskmetrics", "egarch",
                         "fiegarch"):
            for p in (0.95, 0.99):
                v = kv[f"risk.portfolio.{approach}.{p}.var"]
                e = kv[f"risk.portfolio.{approach}.{p}.es"]
                assert e >= v
                rows += 1
        assert rows == 10

    def test_multivariate_panel(self, tmp_path, panel_csv):
        out = tmp_path / "risk"
        assert run(["risk", "--data", panel_csv, "--weights", "0.5,0.3,0.2",
                    "--out", out]) == 0
        kv = kv_loads((out / "risk_result.kv").read_text())
        # multivariate normal equals the univariate portfolio-series value
        assert kv["risk.multivariate.normal.0.95.var"] == pytest.approx(
            kv["risk.portfolio.normal.0.95.var"], rel=1e-10)
        assert "risk.asset.a1.normal.0.95.var" in kv
        ws = kv["risk.weighted_sum.normal.0.95.var"]
        assert kv["risk.portfolio.normal.0.95.var"] <= ws + 1e-12

    def test_panel_without_weights_rejected(self, tmp_path, panel_csv):
        assert run(["risk", "--data", panel_csv, "--out", tmp_path]) == 4


class TestMaxlossCommand:
    def test_matches_library_and_layout(self, tmp_path):
        rng = np.random.default_rng(44)
        base = rng.standard_normal((4, 4))
        cov = 1e-4 * (base @ base.T + 4 * np.eye(4))
        covf = tmp_path / "cov.csv"
        covf.write_text(panel_dumps(["b", "t", "g", "p"], cov))
        out = tmp_path / "ml"
        weights = "0.3381,0.1813,0.3087,0.1719"
        assert run(["maxloss", "--cov", covf, "--weights", weights,
                    "--out", out]) == 0
        kv = kv_loads((out / "maxloss_result.kv").read_text())
        w = np.array([0.3381, 0.1813, 0.3087, 0.1719])
        for p in (0.5, 0.55, 0.65, 0.75, 0.85, 0.95, 0.99):
            est = maxloss(w, cov, p)
            assert kv[f"maxloss.{p}.value"] == est.value
            assert kv[f"maxloss.{p}.value"] < 0
            for j, name in enumerate(["b", "t", "g", "p"]):
                assert kv[f"maxloss.{p}.scenario.{name}"] == est.scenario[j]
        table = (out / "maxloss_table.txt").read_text()
        header = table.splitlines()[1].split()
        assert header == ["p", "MaxLoss", "r_b", "r_t", "r_g", "r_p"]
        assert len(table.splitlines()) == 10  # title + header + rule + 7 levels

    def test_monotone_in_level(self, tmp_path):
        cov = np.eye(2) * 1e-4
        covf = tmp_path / "cov.csv"
        covf.write_text(panel_dumps(["x", "y"], cov))
        out = tmp_path / "ml"
        run(["maxloss", "--cov", covf, "--weights", "0.5,0.5", "--out", out])
        kv = kv_loads((out / "maxloss_result.kv").read_text())
        vals = [kv[f"maxloss.{p}.value"]
                for p in (0.5, 0.55, 0.65, 0.75, 0.85, 0.95, 0.99)]
        assert all(b < a for a, b in zip(vals, vals[1:]))  # more negative


class TestExperimentCommand:
    def test_small_var_experiment(self, tmp_path):
        out = tmp_path / "exp"
        assert run(["experiment", "--models", "M1", "-n", 300, "--burnin", 100,
                    "--replications", 3, "--approach", "normal,empirical",
                    "--truncation", 2000, "--seed", 99, "--out", out]) == 0
        kv = kv_loads((out / "experiment_result.kv").read_text())
        assert kv["plan.replications"] == 3
        assert kv["cell.M1.normal.0.95.n_used"] == 3
        assert kv["true_var.M1.0.95"] > 0
        assert (out / "experiment_table.txt").exists()

    def test_forecast_kind(self, tmp_path):
        out = tmp_path / "exp"
        assert run(["experiment", "--kind", "forecast", "--models", "M1",
                    "-n", 300, "--burnin", 100, "--replications", 2,
                    "--no-refit", "--truncation", 2000, "--seed", 99,
                    "--out", out]) == 0
        kv = kv_loads((out / "experiment_result.kv").read_text())
        assert "cell.M1.h10.mse_sigma" in kv

    def test_experiment_bit_identical_across_runs(self, tmp_path):
        outs = []
        for name in ("e1", "e2"):
            out = tmp_path / name
            run(["experiment", "--models", "M1", "-n", 250, "--burnin", 50,
                 "--replications", 2, "--approach", "normal",
                 "--truncation", 1000, "--seed", 7, "--out", out])
            outs.append((out / "experiment_result.kv").read_bytes())
        assert outs[0] == outs[1]


class TestConfigPrecedence:
    def test_file_overrides_defaults_flags_override_file(self, tmp_path,
                                                         monkeypatch):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({"seed": 123, "levels": [0.9],
                                       "ewma_lambda": 0.9}))
        cfg = Config.load(str(cfgfile))
        assert cfg.seed == 123 and cfg.levels == (0.9,)
        # env variable picks up the same file
        monkeypatch.setenv("FIEGARCH_CONFIG", str(cfgfile))
        cfg2 = Config.load(None)
        assert cfg2.seed == 123

        class Flags:
            seed = 777
            level = "0.95,0.99"
            horizon = None
            lam = None
            out = None
            replications = None
            full = False
            workers = None
            n = None
            burnin = None

        cfg3 = Config.load(str(cfgfile)).apply_flags(Flags())
        assert cfg3.seed == 777
        assert cfg3.levels == (0.95, 0.99)
        assert cfg3.ewma_lambda == 0.9  # untouched by flags

    def test_unknown_config_key_rejected(self, tmp_path):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({"sede": 1}))
        with pytest.raises(Exception):
            Config.load(str(cfgfile))

    def test_full_flag_sets_1000_replications(self, tmp_path):
        class Flags:
            seed = None
            level = None
            horizon = None
            lam = None
            out = None
            replications = None
            full = True
            workers = None
            n = None
            burnin = None

        cfg = Config().apply_flags(Flags())
        assert cfg.replications == 1000
