"""Replication harness for the simulation study.

For each model and replication: simulate a path, hold out the final
``holdout`` observations, estimate next-period VaR on the retained window
under each approach, and score it against both the known (simulated)
conditional volatility and the realized loss.  Replication seeds are spawned
from a master seed (numpy SeedSequence), so streams are independent by
construction and the whole experiment is reproducible bit for bit.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtri

from . import risk
from .errors import DomainError, EstimationError
from .estimation import OptimizerConfig, fit
from .model import GENERATOR, FiegarchSpec, filter_volatility, forecast_volatility, simulate

__all__ = [
    "VAR_APPROACHES",
    "table41_models",
    "ExperimentPlan",
    "CellStats",
    "ExperimentReport",
    "ForecastCell",
    "ForecastReport",
    "mse",
    "run_experiment",
    "forecast_experiment",
]

VAR_APPROACHES = ("empirical", "normal", "riskmetrics", "egarch", "fiegarch")

# Exclusion rate above which an aggregate is flagged unreliable.
MAX_FAILURE_SHARE = 0.10


def table41_models() -> dict[str, FiegarchSpec]:
    """The five benchmark parameter sets used throughout the study."""
    return {
        "M1": FiegarchSpec(omega=0.0, beta=(0.45,), theta=-0.14, gamma=0.38, d=0.45),
        "M2": FiegarchSpec(omega=0.0, alpha=(0.80,), beta=(0.90,), theta=0.04,
                           gamma=0.38, d=0.45),
        "M3": FiegarchSpec(omega=0.0, beta=(0.22, 0.18, 0.47, -0.45), theta=-0.04,
                           gamma=0.40, d=0.26),
        "M4": FiegarchSpec(omega=0.0, beta=(0.58,), theta=-0.11, gamma=0.33, d=0.42),
        "M5": FiegarchSpec(omega=0.0, beta=(0.71,), theta=-0.17, gamma=0.28, d=0.34),
    }


def mse(errors) -> float:
    """Mean of squared errors over replications."""
    arr = np.asarray(errors, dtype=float)
    if arr.size == 0:
        raise DomainError("mse of an empty error sequence")
    return float(np.mean(arr**2))


@dataclass(frozen=True)
class ExperimentPlan:
    """Configuration of one replication experiment."""

    models: tuple[tuple[str, FiegarchSpec], ...] = field(
        default_factory=lambda: tuple(table41_models().items())
    )
    n: int = 2000
    replications: int = 200
    holdout: int = 10
    levels: tuple[float, ...] = (0.95, 0.99)
    approaches: tuple[str, ...] = VAR_APPROACHES
    master_seed: int = 1729
    sim_truncation: int = 50_000
    fit_truncation: int = 1000
    burn_in: int = 2000
    ewma_lambda: float = 0.94
    egarch_orders: tuple[int, int] = (1, 1)
    workers: int = 1
    refit: bool = True

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise DomainError("replications must be >= 1")
        if not 0 < self.holdout < self.n:
            raise DomainError("holdout must be in (0, n)")
        unknown = set(self.approaches) - set(VAR_APPROACHES)
        if unknown:
            raise DomainError(f"unknown approaches {sorted(unknown)}")
        for p in self.levels:
            if not 0.0 < p < 1.0:
                raise DomainError(f"level {p} outside (0, 1)")
        if not self.models:
            raise DomainError("no models in the plan")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")


@dataclass(frozen=True)
class CellStats:
    """Aggregate for one (model, approach, level) cell."""

    mean_estimate: float
    mse_true: float
    mse_realized: float
    n_used: int
    n_failed: int

    @property
    def unreliable(self) -> bool:
        total = self.n_used + self.n_failed
        return total == 0 or self.n_failed > MAX_FAILURE_SHARE * total


@dataclass(frozen=True)
class ExperimentReport:
    """Aggregated replication results plus run metadata.

    ``runtime_seconds`` is informational and deliberately left out of the
    serialized form so identical runs produce identical files.
    """

    plan: ExperimentPlan
    true_var_mean: dict[tuple[str, float], float]
    realized_loss_mean: dict[str, float]
    cells: dict[tuple[str, str, float], CellStats]
    generator: str = GENERATOR
    runtime_seconds: float = 0.0


def _fit_config(plan: ExperimentPlan) -> OptimizerConfig:
    return OptimizerConfig(truncation=plan.fit_truncation)


def _one_var_replication(args) -> dict:
    """Worker for one replication; returns raw per-approach estimates."""
    (spec, plan, seed_seq) = args
    n_est = plan.n - plan.holdout
    path = simulate(spec, plan.n, burn_in=plan.burn_in, M=plan.sim_truncation,
                    seed=seed_seq)
    r_est = path.x[:n_est]
    losses = -r_est
    sigma_next = float(np.sqrt(path.sigma2[n_est]))
    out = {
        "true_sigma": sigma_next,
        "realized_loss": float(-path.x[n_est]),
        "estimates": {},
        "failures": {},
    }
    cfg = _fit_config(plan)
    fitted: dict[str, object] = {}
    for approach in plan.approaches:
        try:
            if approach == "egarch":
                p2, q2 = plan.egarch_orders
                fitted[approach] = fit((0, 0, p2, 0, q2), r_est, cfg)
            elif approach == "fiegarch":
                fitted[approach] = fit((0, 0, spec.p, 1, spec.q), r_est, cfg)
        except (EstimationError, DomainError) as exc:
            out["failures"][approach] = str(exc)
    for approach in plan.approaches:
        if approach in out["failures"]:
            continue
        values = {}
        try:
            for p in plan.levels:
                if approach == "empirical":
                    values[p] = risk.var_empirical(losses, p).value
                elif approach == "normal":
                    mu = float(np.mean(losses))
                    sd = float(np.std(losses, ddof=1))
                    values[p] = risk.var_normal(mu, sd, p).value
                elif approach == "riskmetrics":
                    values[p] = risk.var_riskmetrics(
                        r_est, p, lam=plan.ewma_lambda).value
                else:
                    values[p] = risk.var_econometric(
                        fitted[approach], r_est, p, allow_unconverged=True,
                        approach=approach).value
            out["estimates"][approach] = values
        except (EstimationError, DomainError) as exc:
            out["failures"][approach] = str(exc)
    return out


def _map_replications(worker, arglist, workers: int):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(worker, arglist))
    return [worker(a) for a in arglist]


def run_experiment(plan: ExperimentPlan) -> ExperimentReport:
    """Run the full replication protocol of the plan.

    Fit failures are excluded from the affected cells and counted; they are
    never silently dropped.  Identical plans produce identical reports.
    """
    t0 = time.perf_counter()
    root = np.random.SeedSequence(plan.master_seed)
    model_seqs = root.spawn(len(plan.models))
    true_var_mean: dict[tuple[str, float], float] = {}
    realized_mean: dict[str, float] = {}
    cells: dict[tuple[str, str, float], CellStats] = {}
    for (name, spec), mseq in zip(plan.models, model_seqs):
        rep_seqs = mseq.spawn(plan.replications)
        arglist = [(spec, plan, s) for s in rep_seqs]
        results = _map_replications(_one_var_replication, arglist, plan.workers)
        sigmas = np.array([res["true_sigma"] for res in results])
        realized = np.array([res["realized_loss"] for res in results])
        realized_mean[name] = float(np.mean(realized))  # mean of -r_{t+1}
        for p in plan.levels:
            true_var = float(ndtri(p)) * sigmas
            true_var_mean[(name, p)] = float(np.mean(true_var))
        for approach in plan.approaches:
            ok = np.array([approach in res["estimates"] for res in results])
            n_failed = int((~ok).sum())
            for p in plan.levels:
                est = np.array([
                    res["estimates"][approach][p]
                    for res in results if approach in res["estimates"]
                ])
                true_var = float(ndtri(p)) * sigmas[ok]
                cells[(name, approach, p)] = CellStats(
                    mean_estimate=float(np.mean(est)) if est.size else float("nan"),
                    mse_true=mse(est - true_var) if est.size else float("nan"),
                    mse_realized=mse(est - realized[ok]) if est.size else float("nan"),
                    n_used=int(est.size),
                    n_failed=n_failed,
                )
    return ExperimentReport(
        plan=plan,
        true_var_mean=true_var_mean,
        realized_loss_mean=realized_mean,
        cells=cells,
        runtime_seconds=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Volatility-forecast experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ForecastCell:
    """Aggregate for one (model, horizon) cell of the forecast experiment."""

    mse_sigma: float
    mse_x2: float
    n_used: int
    n_failed: int


@dataclass(frozen=True)
class ForecastReport:
    plan: ExperimentPlan
    horizons: tuple[int, ...]
    cells: dict[tuple[str, int], ForecastCell]
    generator: str = GENERATOR
    runtime_seconds: float = 0.0


def _one_forecast_replication(args) -> dict:
    (spec, plan, horizons, seed_seq) = args
    n_est = plan.n - plan.holdout
    hmax = max(horizons)
    if n_est + hmax > plan.n:
        raise DomainError("holdout shorter than the forecast horizon")
    path = simulate(spec, plan.n, burn_in=plan.burn_in, M=plan.sim_truncation,
                    seed=seed_seq)
    r_est = path.x[:n_est]
    out = {"failed": None, "sigma_err": None, "x2_err": None}
    try:
        if plan.refit:
            fitted = fit((0, 0, spec.p, 1, spec.q), r_est, _fit_config(plan))
            vol = fitted.spec.vol
            trunc = fitted.truncation
        else:
            vol = spec
            trunc = plan.fit_truncation
        state = filter_volatility(vol, r_est, trunc)
        sig2_hat = forecast_volatility(vol, state, hmax)
    except (EstimationError, DomainError) as exc:
        out["failed"] = str(exc)
        return out
    idx = n_est + np.asarray(horizons) - 1
    sig_true = np.sqrt(path.sigma2[idx])
    x2_true = path.x[idx] ** 2
    sig_hat = np.sqrt(sig2_hat[np.asarray(horizons) - 1])
    out["sigma_err"] = sig_true - sig_hat
    out["x2_err"] = x2_true - sig_hat**2
    return out


def forecast_experiment(plan: ExperimentPlan,
                        horizons: tuple[int, ...] = tuple(range(1, 11)),
                        ) -> ForecastReport:
    """Score h-step volatility forecasts against the simulated truth.

    Per model and horizon, reports the mse of the sigma forecast and of the
    squared-return prediction (its conditional mean, sigma^2).  With
    ``plan.refit`` false the generating parameters are used directly, which
    isolates filtering/forecasting error from estimation error.
    """
    t0 = time.perf_counter()
    horizons = tuple(int(h) for h in horizons)
    if not horizons or min(horizons) < 1:
        raise DomainError("horizons must be positive")
    if max(horizons) > plan.holdout:
        raise DomainError("horizons cannot exceed the holdout window")
    root = np.random.SeedSequence(plan.master_seed)
    model_seqs = root.spawn(len(plan.models))
    cells: dict[tuple[str, int], ForecastCell] = {}
    for (name, spec), mseq in zip(plan.models, model_seqs):
        rep_seqs = mseq.spawn(plan.replications)
        arglist = [(spec, plan, horizons, s) for s in rep_seqs]
        results = _map_replications(_one_forecast_replication, arglist, plan.workers)
        good = [res for res in results if res["failed"] is None]
        n_failed = len(results) - len(good)
        for j, h in enumerate(horizons):
            if good:
                sig_err = np.array([res["sigma_err"][j] for res in good])
                x2_err = np.array([res["x2_err"][j] for res in good])
                cells[(name, h)] = ForecastCell(
                    mse_sigma=mse(sig_err), mse_x2=mse(x2_err),
                    n_used=len(good), n_failed=n_failed,
                )
            else:
                cells[(name, h)] = ForecastCell(
                    mse_sigma=float("nan"), mse_x2=float("nan"),
                    n_used=0, n_failed=n_failed,
                )
    return ForecastReport(
        plan=plan,
        horizons=horizons,
        cells=cells,
        runtime_seconds=time.perf_counter() - t0,
    )
