"""File formats: delimiter-separated panels and flat key-value reports.

Two formats cover all structured output:

* Panel CSV: ``#``-prefixed metadata comment lines, then a header row
  ``index,<name>,...``, then one row per period.  Floats are written with
  ``repr`` so a read-write-read cycle is bit-identical.
* Report KV: lines ``key = value`` with dotted keys, sorted lexically.
  Values are int, float, bool or bare strings; floats again use ``repr``.

Pretty text tables are derived views; the structured file is the source of
truth.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import PanelError
from .montecarlo import ExperimentReport, ForecastReport

__all__ = [
    "kv_dumps",
    "kv_loads",
    "panel_dumps",
    "panel_loads",
    "prices_to_returns",
    "format_table",
    "experiment_report_kv",
    "forecast_report_kv",
]

KV_HEADER = "# fiegarch report-kv v1"
PANEL_HEADER = "# fiegarch panel-csv v1"


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    s = str(v)
    if "\n" in s or "\r" in s:
        raise PanelError("string values must not contain newlines")
    return s


def kv_dumps(mapping: Mapping[str, object], comments: Sequence[str] = ()) -> str:
    """Serialize a flat mapping; keys are emitted in sorted order."""
    lines = [KV_HEADER]
    for c in comments:
        lines.append(f"# {c}")
    for key in sorted(mapping):
        if not key or any(ch in key for ch in " =\n\r"):
            raise PanelError(f"invalid key {key!r}")
        lines.append(f"{key} = {_format_value(mapping[key])}")
    return "\n".join(lines) + "\n"


def _parse_value(s: str):
    if s == "true":
        return True
    if s == "false":
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    return s


def kv_loads(text: str) -> dict[str, object]:
    """Parse the key-value report format back into a mapping."""
    out: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if " = " not in line:
            raise PanelError(f"line {lineno}: expected 'key = value'")
        key, val = line.split(" = ", 1)
        if key in out:
            raise PanelError(f"line {lineno}: duplicate key {key!r}")
        out[key] = _parse_value(val)
    return out


# ---------------------------------------------------------------------------
# Panels
# ---------------------------------------------------------------------------

def panel_dumps(names: Sequence[str], matrix, index: Optional[Sequence[int]] = None,
                comments: Sequence[str] = ()) -> str:
    """Serialize a numeric panel (one named column per series)."""
    mat = np.asarray(matrix, dtype=float)
    if mat.ndim == 1:
        mat = mat[:, None]
    n, m = mat.shape
    if len(names) != m:
        raise PanelError("header names do not match the number of columns")
    for name in names:
        if not name or any(ch in name for ch in ",\n\r"):
            raise PanelError(f"invalid column name {name!r}")
    if index is None:
        index = range(n)
    idx = [int(i) for i in index]
    if len(idx) != n:
        raise PanelError("index length does not match the number of rows")
    lines = [PANEL_HEADER]
    for c in comments:
        lines.append(f"# {c}")
    lines.append("index," + ",".join(names))
    for i, row in zip(idx, mat):
        lines.append(str(i) + "," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def panel_loads(text: str) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Parse a panel: returns (names, index, matrix).

    Every defect is reported with its row and column; missing cells are an
    error, never silently filled.
    """
    names: list[str] = []
    rows: list[list[float]] = []
    index: list[int] = []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if not header_seen:
            if parts[0] != "index" or len(parts) < 2:
                raise PanelError(f"line {lineno}: header must be 'index,<name>,...'")
            names = [p.strip() for p in parts[1:]]
            if any(not n for n in names):
                raise PanelError(f"line {lineno}: empty column name")
            header_seen = True
            continue
        if len(parts) != len(names) + 1:
            raise PanelError(
                f"line {lineno}: expected {len(names) + 1} cells, got {len(parts)}"
            )
        try:
            index.append(int(parts[0]))
        except ValueError:
            raise PanelError(f"line {lineno}: bad index cell {parts[0]!r}") from None
        row = []
        for col, cell in zip(names, parts[1:]):
            try:
                v = float(cell)
            except ValueError:
                raise PanelError(
                    f"line {lineno}, column {col!r}: non-numeric cell {cell!r}"
                ) from None
            if not math.isfinite(v):
                raise PanelError(f"line {lineno}, column {col!r}: non-finite cell")
            row.append(v)
        rows.append(row)
    if not header_seen:
        raise PanelError("no header row found")
    if not rows:
        raise PanelError("panel has no data rows")
    return names, np.asarray(index, dtype=int), np.asarray(rows, dtype=float)


def prices_to_returns(names: Sequence[str], prices: np.ndarray) -> np.ndarray:
    """Log-returns ln(P_t) - ln(P_{t-1}); prices must be strictly positive."""
    prices = np.asarray(prices, dtype=float)
    if prices.ndim == 1:
        prices = prices[:, None]
    if prices.shape[0] < 2:
        raise PanelError("need at least two price rows to form returns")
    bad = np.argwhere(prices <= 0)
    if bad.size:
        r, c = bad[0]
        raise PanelError(
            f"row {int(r)}, column {names[int(c)]!r}: non-positive price "
            f"{prices[r, c]!r} has no logarithm"
        )
    logp = np.log(prices)
    return np.diff(logp, axis=0)


# ---------------------------------------------------------------------------
# Pretty tables
# ---------------------------------------------------------------------------

def format_table(headers: Sequence[str], rows: Iterable[Sequence[object]],
                 title: str = "") -> str:
    """Fixed-width text table (derived view of the structured output)."""
    srows = [[str(c) for c in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in srows:
        for j, cell in enumerate(row):
            widths[j] = max(widths[j], len(cell))
    def fmt(row):
        return "  ".join(cell.rjust(widths[j]) for j, cell in enumerate(row))
    lines = []
    if title:
        lines.append(title)
    lines.append(fmt(headers))
    lines.append("  ".join("-" * w for w in widths))
    lines.extend(fmt(row) for row in srows)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Report serializers
# ---------------------------------------------------------------------------

def _plan_kv(plan) -> dict[str, object]:
    out = {
        "meta.format": "report-kv.v1",
        "meta.generator": "numpy.random.PCG64",
        "meta.sign_convention": "loss_positive; maxloss loss_negative",
        "meta.seed": plan.master_seed,
        "meta.level": ",".join(repr(p) for p in plan.levels),
        "meta.horizon": 1,
        "meta.approach": ",".join(plan.approaches),
        "plan.models": ",".join(name for name, _ in plan.models),
        "plan.n": plan.n,
        "plan.replications": plan.replications,
        "plan.holdout": plan.holdout,
        "plan.levels": ",".join(repr(p) for p in plan.levels),
        "plan.approaches": ",".join(plan.approaches),
        "plan.master_seed": plan.master_seed,
        "plan.sim_truncation": plan.sim_truncation,
        "plan.fit_truncation": plan.fit_truncation,
        "plan.burn_in": plan.burn_in,
        "plan.ewma_lambda": plan.ewma_lambda,
    }
    return out


def experiment_report_kv(report: ExperimentReport, version: str) -> dict[str, object]:
    """Flatten an experiment report (runtime excluded for reproducibility)."""
    out = _plan_kv(report.plan)
    out["meta.library_version"] = version
    for (name, p), v in report.true_var_mean.items():
        out[f"true_var.{name}.{p}"] = v
    for name, v in report.realized_loss_mean.items():
        out[f"realized_loss_mean.{name}"] = v
    for (name, approach, p), cell in report.cells.items():
        base = f"cell.{name}.{approach}.{p}"
        out[f"{base}.mean_estimate"] = cell.mean_estimate
        out[f"{base}.mse_true"] = cell.mse_true
        out[f"{base}.mse_realized"] = cell.mse_realized
        out[f"{base}.n_used"] = cell.n_used
        out[f"{base}.n_failed"] = cell.n_failed
        out[f"{base}.unreliable"] = cell.unreliable
    return out


def forecast_report_kv(report: ForecastReport, version: str) -> dict[str, object]:
    out = _plan_kv(report.plan)
    out["meta.library_version"] = version
    out["plan.horizons"] = ",".join(str(h) for h in report.horizons)
    for (name, h), cell in report.cells.items():
        base = f"cell.{name}.h{h}"
        out[f"{base}.mse_sigma"] = cell.mse_sigma
        out[f"{base}.mse_x2"] = cell.mse_x2
        out[f"{base}.n_used"] = cell.n_used
        out[f"{base}.n_failed"] = cell.n_failed
    return out
