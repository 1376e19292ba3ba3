"""Batch command-line frontend.

Subcommands: simulate | fit | forecast | risk | maxloss | experiment.
Each writes a structured result file (key-value format) plus a derived
human-readable table into the output directory.  All randomness is seeded
from the configuration, so reruns with the same config are bit-identical.

Configuration precedence: built-in defaults < JSON config file (--config or
$FIEGARCH_CONFIG) < command-line flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, risk
from .arma import ArmaSpec, arma_filter, arma_forecast
from .errors import DomainError, FiegarchError, PanelError
from .estimation import (
    FitResult,
    JointSpec,
    OptimizerConfig,
    fit,
    ljung_box,
    standardized_residuals,
)
from .model import FiegarchSpec, filter_volatility, forecast_volatility, simulate
from .montecarlo import (
    VAR_APPROACHES,
    ExperimentPlan,
    forecast_experiment,
    run_experiment,
    table41_models,
)
from .reporting import (
    experiment_report_kv,
    forecast_report_kv,
    format_table,
    kv_dumps,
    kv_loads,
    panel_dumps,
    panel_loads,
    prices_to_returns,
)

CONFIG_ENV_VAR = "FIEGARCH_CONFIG"

EXIT_OK = 0
EXIT_UNEXPECTED = 1
# argparse reserves 2 for usage errors
EXIT_INPUT = 3
EXIT_NUMERIC = 4


@dataclass
class Config:
    """Run configuration; every field has a documented default."""

    seed: int = 1729
    levels: tuple[float, ...] = (0.95, 0.99)
    horizon: int = 1
    forecast_horizon: int = 10
    ewma_lambda: float = 0.94
    sim_truncation: int = 50_000
    fit_truncation: int = 1000
    burn_in: int = 2000
    n: int = 2000
    out_dir: str = "."
    replications: int = 200
    full: bool = False
    workers: int = 1
    min_obs: int = 20
    holdout: int = 10
    opt_max_iter: int = 500
    opt_gtol: float = 1e-5
    # (p1, q1, p2, d_flag, q2) defaults for the two econometric arms
    fiegarch_orders: tuple[int, ...] = (0, 1, 0, 1, 1)
    egarch_orders: tuple[int, ...] = (0, 1, 1, 0, 1)

    @classmethod
    def load(cls, path: Optional[str]) -> "Config":
        cfg = cls()
        if path is None:
            path = os.environ.get(CONFIG_ENV_VAR) or None
        if path is None:
            return cfg
        try:
            payload = json.loads(Path(path).read_text())
        except OSError as exc:
            raise PanelError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise PanelError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise PanelError("config file must hold a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        for key, value in payload.items():
            if key not in known:
                raise PanelError(f"unknown config key {key!r}")
            if isinstance(value, list):
                value = tuple(value)
            setattr(cfg, key, value)
        return cfg

    def apply_flags(self, args: argparse.Namespace) -> "Config":
        if getattr(args, "seed", None) is not None:
            self.seed = args.seed
        if getattr(args, "level", None):
            self.levels = tuple(float(p) for p in args.level.split(","))
        if getattr(args, "horizon", None) is not None:
            self.horizon = args.horizon
            self.forecast_horizon = args.horizon
        if getattr(args, "lam", None) is not None:
            self.ewma_lambda = args.lam
        if getattr(args, "out", None) is not None:
            self.out_dir = args.out
        if getattr(args, "replications", None) is not None:
            self.replications = args.replications
        if getattr(args, "full", False):
            self.full = True
            self.replications = 1000
        if getattr(args, "workers", None) is not None:
            self.workers = args.workers
        if getattr(args, "n", None) is not None:
            self.n = args.n
        if getattr(args, "burnin", None) is not None:
            self.burn_in = args.burnin
        return self


def _apply_truncation(cfg: Config, args: argparse.Namespace, command: str) -> None:
    # --truncation sets the order relevant to the command at hand.
    m = getattr(args, "truncation", None)
    if m is None:
        return
    if command == "simulate":
        cfg.sim_truncation = m
    elif command == "experiment":
        cfg.sim_truncation = m
    else:
        cfg.fit_truncation = m


# ---------------------------------------------------------------------------
# Panel ingestion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReturnPanel:
    """Validated log-return panel, one named column per asset."""

    assets: tuple[str, ...]
    index: np.ndarray
    returns: np.ndarray
    prices: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.returns.shape[0]

    @property
    def m(self) -> int:
        return self.returns.shape[1]


def ingest(path: str, format: str = "csv-returns") -> ReturnPanel:
    """Load a delimited file of prices or log-returns.

    ``csv-prices`` derives log-returns as ln(P_t) - ln(P_{t-1}); any
    non-positive price is a load error naming its row and column.
    """
    if format not in ("csv-prices", "csv-returns"):
        raise PanelError(f"unknown panel format {format!r}")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise PanelError(f"cannot read {path}: {exc}") from exc
    names, index, matrix = panel_loads(text)
    if format == "csv-prices":
        returns = prices_to_returns(names, matrix)
        return ReturnPanel(assets=tuple(names), index=index[1:], returns=returns,
                           prices=matrix)
    return ReturnPanel(assets=tuple(names), index=index, returns=matrix)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _meta(cfg: Config, approach: str = "na", level: str = "na",
          horizon: str = "na") -> dict[str, object]:
    return {
        "meta.library_version": __version__,
        "meta.sign_convention": "loss_positive; maxloss loss_negative",
        "meta.seed": cfg.seed,
        "meta.approach": approach,
        "meta.level": level,
        "meta.horizon": horizon,
    }


def _write(out_dir: str, name: str, text: str) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    target = path / name
    target.write_text(text)
    return target


def _parse_weights(arg: Optional[str], m: int) -> Optional[np.ndarray]:
    if arg is None:
        return None
    w = np.asarray([float(v) for v in arg.split(",")], dtype=float)
    if w.shape[0] != m:
        raise DomainError(f"{w.shape[0]} weights supplied for {m} assets")
    return w


def _parse_orders(arg: str) -> tuple[int, ...]:
    vals = tuple(int(v) for v in arg.split(","))
    if len(vals) != 5:
        raise DomainError("orders must be p1,q1,p2,d_flag,q2")
    return vals


def _spec_to_kv(spec: JointSpec, prefix: str = "params") -> dict[str, object]:
    out: dict[str, object] = {}
    if spec.arma is not None:
        out[f"{prefix}.mean"] = spec.arma.mean
        for i, v in enumerate(spec.arma.ar, start=1):
            out[f"{prefix}.ar.{i}"] = v
        for i, v in enumerate(spec.arma.ma, start=1):
            out[f"{prefix}.ma.{i}"] = v
    vol = spec.vol
    out[f"{prefix}.omega"] = vol.omega
    for i, v in enumerate(vol.alpha, start=1):
        out[f"{prefix}.alpha.{i}"] = v
    for i, v in enumerate(vol.beta, start=1):
        out[f"{prefix}.beta.{i}"] = v
    out[f"{prefix}.theta"] = vol.theta
    out[f"{prefix}.gamma"] = vol.gamma
    out[f"{prefix}.d"] = vol.d
    return out


def _kv_to_spec(mapping: dict[str, object], prefix: str = "params") -> JointSpec:
    def seq(stem: str) -> tuple[float, ...]:
        vals = []
        i = 1
        while f"{prefix}.{stem}.{i}" in mapping:
            vals.append(float(mapping[f"{prefix}.{stem}.{i}"]))
            i += 1
        return tuple(vals)

    arma = None
    if f"{prefix}.mean" in mapping:
        arma = ArmaSpec(mean=float(mapping[f"{prefix}.mean"]),
                        ar=seq("ar"), ma=seq("ma"))
    vol = FiegarchSpec(
        omega=float(mapping[f"{prefix}.omega"]),
        alpha=seq("alpha"),
        beta=seq("beta"),
        theta=float(mapping[f"{prefix}.theta"]),
        gamma=float(mapping[f"{prefix}.gamma"]),
        d=float(mapping[f"{prefix}.d"]),
    )
    return JointSpec(vol=vol, arma=arma)


def _select_series(panel: ReturnPanel, column: Optional[str]) -> np.ndarray:
    if column is None:
        if panel.m != 1:
            raise DomainError("panel has several columns; pass --column")
        return panel.returns[:, 0]
    if column in panel.assets:
        return panel.returns[:, panel.assets.index(column)]
    raise DomainError(f"no column named {column!r} in {panel.assets}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: Config, args: argparse.Namespace) -> int:
    models = table41_models()
    if args.model_file:
        spec = _kv_to_spec(kv_loads(Path(args.model_file).read_text())).vol
        name = args.model_file
    else:
        if args.model not in models:
            raise DomainError(f"unknown model {args.model!r}; pick from {sorted(models)}")
        spec = models[args.model]
        name = args.model
    path = simulate(spec, cfg.n, burn_in=cfg.burn_in, M=cfg.sim_truncation,
                    seed=cfg.seed)
    meta = _meta(cfg)
    meta.update({
        "simulate.model": name,
        "simulate.n": cfg.n,
        "simulate.burn_in": cfg.burn_in,
        "simulate.truncation": cfg.sim_truncation,
        "simulate.generator": path.generator,
        "simulate.mean_x": float(np.mean(path.x)),
        "simulate.var_x": float(np.var(path.x)),
        "simulate.mean_ln_sigma2": float(np.mean(np.log(path.sigma2))),
    })
    comments = [f"{k} = {v}" for k, v in _meta(cfg).items()]
    _write(cfg.out_dir, "simulate_path.csv",
           panel_dumps(["x", "sigma2", "z"],
                       np.column_stack([path.x, path.sigma2, path.z]),
                       comments=comments))
    _write(cfg.out_dir, "simulate_result.kv", kv_dumps(meta))
    table = format_table(
        ["statistic", "value"],
        [["n", cfg.n],
         ["mean(x)", f"{np.mean(path.x):.6f}"],
         ["var(x)", f"{np.var(path.x):.6f}"],
         ["mean(ln sigma^2)", f"{np.mean(np.log(path.sigma2)):.6f}"]],
        title=f"simulated {name} path",
    )
    _write(cfg.out_dir, "simulate_table.txt", table)
    return EXIT_OK


def _fit_series(cfg: Config, r: np.ndarray, orders: tuple[int, ...]) -> FitResult:
    opt = OptimizerConfig(truncation=cfg.fit_truncation,
                          max_iter=cfg.opt_max_iter, gtol=cfg.opt_gtol)
    return fit(orders, r, opt)


def cmd_fit(cfg: Config, args: argparse.Namespace) -> int:
    panel = ingest(args.data, args.format)
    r = _select_series(panel, args.column)
    orders = _parse_orders(args.orders) if args.orders else tuple(cfg.fiegarch_orders)
    result = _fit_series(cfg, r, orders)
    z = standardized_residuals(result, r)
    lb_stat, lb_pvalue = ljung_box(z**2, lags=20)
    out = _meta(cfg)
    out.update(_spec_to_kv(result.spec))
    out.update({
        "fit.orders": ",".join(str(v) for v in result.orders),
        "fit.loglik": result.loglik,
        "fit.aic": result.aic,
        "fit.bic": result.bic,
        "fit.n_used": result.n_used,
        "fit.n_params": result.n_params,
        "fit.converged": result.converged,
        "fit.iterations": result.iterations,
        "fit.gradient_norm": result.gradient_norm,
        "fit.truncation": result.truncation,
        "fit.skip": result.skip,
        "fit.lb20_squared_stat": lb_stat,
        "fit.lb20_squared_pvalue": lb_pvalue,
    })
    _write(cfg.out_dir, "fit_result.kv", kv_dumps(out))
    rows = [[k.split(".", 1)[1], f"{v:.6f}" if isinstance(v, float) else v]
            for k, v in sorted(out.items()) if k.startswith("params.")]
    rows += [["loglik", f"{result.loglik:.4f}"], ["aic", f"{result.aic:.4f}"],
             ["bic", f"{result.bic:.4f}"], ["converged", result.converged]]
    _write(cfg.out_dir, "fit_table.txt",
           format_table(["parameter", "value"], rows, title="fitted model"))
    if not result.converged:
        print("warning: fit did not converge", file=sys.stderr)
    return EXIT_OK


def cmd_forecast(cfg: Config, args: argparse.Namespace) -> int:
    panel = ingest(args.data, args.format)
    r = _select_series(panel, args.column)
    mapping = kv_loads(Path(args.model_file).read_text())
    spec = _kv_to_spec(mapping)
    trunc = int(mapping.get("fit.truncation", cfg.fit_truncation))
    h = cfg.forecast_horizon
    x = arma_filter(spec.arma, r) if spec.arma is not None else r
    r_hat = (arma_forecast(spec.arma, r, x, h) if spec.arma is not None
             else np.zeros(h))
    state = filter_volatility(spec.vol, x, trunc)
    sigma_hat = np.sqrt(forecast_volatility(spec.vol, state, h))
    out = _meta(cfg, horizon=str(h))
    for j in range(h):
        out[f"forecast.h{j + 1}.mean"] = float(r_hat[j])
        out[f"forecast.h{j + 1}.sigma"] = float(sigma_hat[j])
    _write(cfg.out_dir, "forecast_result.kv", kv_dumps(out))
    rows = [[j + 1, f"{r_hat[j]:.4f}", f"{sigma_hat[j]:.4f}"] for j in range(h)]
    _write(cfg.out_dir, "forecast_table.txt",
           format_table(["h", "mean", "sigma"], rows,
                        title="conditional mean and volatility forecasts"))
    return EXIT_OK


def _parse_approaches(arg: Optional[str]) -> tuple[str, ...]:
    if arg is None:
        return ("empirical", "normal", "riskmetrics")
    if arg == "all":
        return VAR_APPROACHES
    requested = tuple(a.strip() for a in arg.split(","))
    unknown = set(requested) - set(VAR_APPROACHES)
    if unknown:
        raise DomainError(f"unknown approaches {sorted(unknown)}")
    return requested


def _risk_pair(cfg: Config, approach: str, r: np.ndarray, p: float,
               h: int, fitted: dict) -> tuple[float, float]:
    """(VaR, ES) for one series under one approach."""
    losses = -r
    if approach == "empirical":
        return (risk.var_empirical(losses, p, min_obs=cfg.min_obs).value,
                risk.es_empirical(losses, p, min_obs=cfg.min_obs).value)
    if approach == "normal":
        mu = float(np.mean(losses))
        sd = float(np.std(losses, ddof=1))
        return (risk.var_normal(mu, sd, p, h).value,
                risk.es_normal(mu, sd, p, h).value)
    if approach == "riskmetrics":
        return (risk.var_riskmetrics(r, p, h, lam=cfg.ewma_lambda).value,
                risk.es_riskmetrics(r, p, h, lam=cfg.ewma_lambda).value)
    result = fitted[approach]
    return (risk.var_econometric(result, r, p, h, allow_unconverged=True,
                                 approach=approach).value,
            risk.es_econometric(result, r, p, h, allow_unconverged=True,
                                approach=approach).value)


def _fit_arms(cfg: Config, r: np.ndarray, approaches: Sequence[str]) -> dict:
    fitted = {}
    if "egarch" in approaches:
        fitted["egarch"] = _fit_series(cfg, r, tuple(cfg.egarch_orders))
    if "fiegarch" in approaches:
        fitted["fiegarch"] = _fit_series(cfg, r, tuple(cfg.fiegarch_orders))
    return fitted


def cmd_risk(cfg: Config, args: argparse.Namespace) -> int:
    panel = ingest(args.data, args.format)
    approaches = _parse_approaches(args.approach)
    h = cfg.horizon
    if args.column is not None:
        panel = ReturnPanel(assets=(args.column,), index=panel.index,
                            returns=_select_series(panel, args.column)[:, None])
    weights = _parse_weights(args.weights, panel.m)
    if panel.m == 1:
        r_p = panel.returns[:, 0]
    else:
        if weights is None:
            raise DomainError("a multi-asset panel needs --weights or --column")
        r_p = panel.returns @ weights
    out = _meta(cfg, approach=",".join(approaches),
                level=",".join(repr(p) for p in cfg.levels), horizon=str(h))
    fitted_p = _fit_arms(cfg, r_p, approaches)
    rows = []
    for approach in approaches:
        for p in cfg.levels:
            v, e = _risk_pair(cfg, approach, r_p, p, h, fitted_p)
            out[f"risk.portfolio.{approach}.{p}.var"] = v
            out[f"risk.portfolio.{approach}.{p}.es"] = e
            rows.append([approach, p, f"{v:.4f}", f"{e:.4f}"])
    sections = [format_table(["approach", "level", "VaR", "ES"], rows,
                             title="portfolio log-returns (univariate)")]
    if panel.m > 1:
        mrows = []
        losses_mu = -panel.returns.mean(axis=0) @ weights
        cov = np.cov(panel.returns, rowvar=False, ddof=1)
        sd = float(np.sqrt(weights @ cov @ weights))
        for p in cfg.levels:
            pairs = {
                "normal": (risk.var_normal(float(losses_mu), sd, p, h).value,
                           risk.es_normal(float(losses_mu), sd, p, h).value),
                "riskmetrics": (
                    risk.var_riskmetrics(panel.returns, p, h, lam=cfg.ewma_lambda,
                                         weights=weights).value,
                    risk.es_riskmetrics(panel.returns, p, h, lam=cfg.ewma_lambda,
                                        weights=weights).value),
            }
            for approach, (v, e) in pairs.items():
                out[f"risk.multivariate.{approach}.{p}.var"] = v
                out[f"risk.multivariate.{approach}.{p}.es"] = e
                mrows.append([approach, p, f"{v:.4f}", f"{e:.4f}"])
        sections.append(format_table(["approach", "level", "VaR", "ES"], mrows,
                                     title="risk-factor changes (multivariate)"))
        arows = []
        for approach in approaches:
            per_asset = {}
            for j, name in enumerate(panel.assets):
                rj = panel.returns[:, j]
                fitted_j = _fit_arms(cfg, rj, [approach]) \
                    if approach in ("egarch", "fiegarch") else {}
                for p in cfg.levels:
                    per_asset[(name, p)] = _risk_pair(cfg, approach, rj, p, h,
                                                      fitted_j)
            for p in cfg.levels:
                vsum = float(sum(weights[j] * per_asset[(nm, p)][0]
                                 for j, nm in enumerate(panel.assets)))
                esum = float(sum(weights[j] * per_asset[(nm, p)][1]
                                 for j, nm in enumerate(panel.assets)))
                for name in panel.assets:
                    v, e = per_asset[(name, p)]
                    out[f"risk.asset.{name}.{approach}.{p}.var"] = v
                    out[f"risk.asset.{name}.{approach}.{p}.es"] = e
                out[f"risk.weighted_sum.{approach}.{p}.var"] = vsum
                out[f"risk.weighted_sum.{approach}.{p}.es"] = esum
                arows.append([approach, p] +
                             [f"{per_asset[(nm, p)][0]:.4f}" for nm in panel.assets] +
                             [f"{vsum:.4f}"])
        sections.append(format_table(
            ["approach", "level"] + list(panel.assets) + ["weighted sum"],
            arows, title="per-asset VaR"))
    _write(cfg.out_dir, "risk_result.kv", kv_dumps(out))
    _write(cfg.out_dir, "risk_table.txt", "\n".join(sections))
    return EXIT_OK


MAXLOSS_DEFAULT_GRID = (0.50, 0.55, 0.65, 0.75, 0.85, 0.95, 0.99)


def cmd_maxloss(cfg: Config, args: argparse.Namespace) -> int:
    names, _, cov = panel_loads(Path(args.cov).read_text())
    if cov.shape[0] != cov.shape[1]:
        raise DomainError(f"covariance file must be square, got {cov.shape}")
    weights = _parse_weights(args.weights, cov.shape[0])
    if weights is None:
        raise DomainError("maxloss requires --weights")
    levels = cfg.levels if args.level else MAXLOSS_DEFAULT_GRID
    out = _meta(cfg, approach="maxloss",
                level=",".join(repr(p) for p in levels))
    rows = []
    for p in levels:
        est = risk.maxloss(weights, cov, p)
        out[f"maxloss.{p}.value"] = est.value
        for name, zval in zip(names, est.scenario):
            out[f"maxloss.{p}.scenario.{name}"] = float(zval)
        rows.append([p, f"{est.value:.4f}"] +
                    [f"{v:.4f}" for v in est.scenario])
    _write(cfg.out_dir, "maxloss_result.kv", kv_dumps(out))
    _write(cfg.out_dir, "maxloss_table.txt",
           format_table(["p", "MaxLoss"] + [f"r_{n}" for n in names], rows,
                        title="portfolio maximum loss and worst scenario"))
    return EXIT_OK


def cmd_experiment(cfg: Config, args: argparse.Namespace) -> int:
    models = table41_models()
    if args.models:
        chosen = []
        for name in args.models.split(","):
            if name not in models:
                raise DomainError(f"unknown model {name!r}")
            chosen.append((name, models[name]))
    else:
        chosen = list(models.items())
    approaches = _parse_approaches(args.approach) if args.approach else VAR_APPROACHES
    plan = ExperimentPlan(
        models=tuple(chosen),
        n=cfg.n,
        replications=cfg.replications,
        holdout=cfg.holdout,
        levels=cfg.levels,
        approaches=approaches,
        master_seed=cfg.seed,
        sim_truncation=cfg.sim_truncation,
        fit_truncation=cfg.fit_truncation,
        burn_in=cfg.burn_in,
        ewma_lambda=cfg.ewma_lambda,
        workers=cfg.workers,
        refit=not args.no_refit,
    )
    if args.kind == "forecast":
        report = forecast_experiment(plan)
        out = forecast_report_kv(report, __version__)
        rows = [[name, h, f"{cell.mse_sigma:.4f}", f"{cell.mse_x2:.4f}",
                 cell.n_used, cell.n_failed]
                for (name, h), cell in sorted(report.cells.items())]
        table = format_table(["model", "h", "mse sigma", "mse X^2",
                              "used", "failed"], rows,
                             title="volatility-forecast experiment")
    else:
        report = run_experiment(plan)
        out = experiment_report_kv(report, __version__)
        rows = []
        for name, _ in plan.models:
            for approach in plan.approaches:
                row = [name, approach]
                for p in plan.levels:
                    cell = report.cells[(name, approach, p)]
                    row += [f"{cell.mean_estimate:.4f}", f"{cell.mse_true:.4f}",
                            f"{cell.mse_realized:.4f}"]
                rows.append(row)
        headers = ["model", "approach"]
        for p in plan.levels:
            headers += [f"mean@{p}", f"mse_true@{p}", f"mse_real@{p}"]
        title_bits = [
            f"{name}: true VaR " + " ".join(
                f"{p}={report.true_var_mean[(name, p)]:.4f}" for p in plan.levels)
            for name, _ in plan.models
        ]
        table = format_table(headers, rows,
                             title="replication experiment\n" + "\n".join(title_bits))
    _write(cfg.out_dir, "experiment_result.kv", kv_dumps(out))
    _write(cfg.out_dir, "experiment_table.txt", table)
    print(f"experiment finished in {report.runtime_seconds:.1f}s", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON config file (default: $FIEGARCH_CONFIG)")
    sp.add_argument("--seed", type=int, help="master seed")
    sp.add_argument("--level", help="comma-separated confidence levels")
    sp.add_argument("--horizon", type=int, help="forecast/risk horizon in days")
    sp.add_argument("--lambda", dest="lam", type=float, help="EWMA decay")
    sp.add_argument("--truncation", type=int, help="series truncation order")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--replications", type=int, help="replication count")
    sp.add_argument("--full", action="store_true",
                    help="full 1000-replication mode")
    sp.add_argument("--workers", type=int, help="parallel replication workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fiegarch",
        description="Long-memory volatility modelling and risk measurement",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="simulate a benchmark or fitted model")
    sp.add_argument("--model", default="M1", help="benchmark model name (M1..M5)")
    sp.add_argument("--model-file", help="kv file with model parameters")
    sp.add_argument("-n", "--n", type=int, help="sample size")
    sp.add_argument("--burnin", type=int, help="burn-in length")
    _add_common(sp)

    sp = sub.add_parser("fit", help="fit an ARMA + FIEGARCH model to a series")
    sp.add_argument("--data", required=True, help="input panel file")
    sp.add_argument("--format", default="csv-returns",
                    choices=["csv-returns", "csv-prices"])
    sp.add_argument("--column", help="column to fit (default: single column)")
    sp.add_argument("--orders", help="p1,q1,p2,d_flag,q2")
    _add_common(sp)

    sp = sub.add_parser("forecast", help="forecast mean and volatility")
    sp.add_argument("--data", required=True)
    sp.add_argument("--format", default="csv-returns",
                    choices=["csv-returns", "csv-prices"])
    sp.add_argument("--column")
    sp.add_argument("--model-file", required=True, help="fit_result.kv")
    _add_common(sp)

    sp = sub.add_parser("risk", help="VaR and ES under several approaches")
    sp.add_argument("--data", required=True)
    sp.add_argument("--format", default="csv-returns",
                    choices=["csv-returns", "csv-prices"])
    sp.add_argument("--column", help="analyze one named column of the panel")
    sp.add_argument("--approach", help="all or comma list")
    sp.add_argument("--weights", help="comma-separated portfolio weights")
    _add_common(sp)

    sp = sub.add_parser("maxloss", help="scenario-based maximum loss")
    sp.add_argument("--cov", required=True, help="covariance panel file")
    sp.add_argument("--weights", required=True)
    _add_common(sp)

    sp = sub.add_parser("experiment", help="replication study")
    sp.add_argument("--kind", default="var", choices=["var", "forecast"])
    sp.add_argument("--models", help="comma list of benchmark models")
    sp.add_argument("--approach", help="all or comma list")
    sp.add_argument("--no-refit", action="store_true",
                    help="forecast experiment: use generating parameters")
    sp.add_argument("-n", "--n", type=int, help="sample size")
    sp.add_argument("--burnin", type=int)
    _add_common(sp)
    return parser


_HANDLERS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "forecast": cmd_forecast,
    "risk": cmd_risk,
    "maxloss": cmd_maxloss,
    "experiment": cmd_experiment,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = Config.load(args.config).apply_flags(args)
        _apply_truncation(cfg, args, args.command)
        return _HANDLERS[args.command](cfg, args)
    except PanelError as exc:
        print(f"error[input.{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FiegarchError as exc:
        print(f"error[numeric.{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error[unexpected.{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    raise SystemExit(main())
