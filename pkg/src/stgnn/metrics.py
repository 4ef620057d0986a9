"""Error metrics for forecast evaluation: MSE, RMSE, MAE, MAPE.

MAPE is reported in percent and computed only over targets with
|y| >= 1e-8; the number of excluded points is carried in the report (NaN
when every target is near zero). Metrics are meant to be computed in raw
target space, after inverting any feature scaling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ValidationError

MAPE_FLOOR = 1e-8

CSV_HEADER = "method,mse,rmse,mape,mae"


@dataclass
class MetricReport:
    mse: float
    rmse: float
    mae: float
    mape_percent: float
    n_points: int
    mape_excluded: int
    per_horizon: list["MetricReport"] = field(default_factory=list)

    def __post_init__(self):
        # power-mean inequality; tolerance only for float rounding
        if self.mae > self.rmse + 1e-12:
            raise ValidationError(
                f"mae {self.mae} exceeds rmse {self.rmse}; metrics are inconsistent"
            )

    def to_dict(self) -> dict:
        doc = {
            "mse": self.mse,
            "rmse": self.rmse,
            "mae": self.mae,
            "mape_percent": self.mape_percent,
            "n_points": self.n_points,
            "mape_excluded": self.mape_excluded,
        }
        if self.per_horizon:
            doc["per_horizon"] = [h.to_dict() for h in self.per_horizon]
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def csv_row(self, method: str) -> str:
        """One row in the comparison-table column order: method,mse,rmse,mape,mae."""
        return f"{method},{self.mse!r},{self.rmse!r},{self.mape_percent!r},{self.mae!r}"


def compute_metrics(pred, truth) -> MetricReport:
    """All four metrics over flat, equal-length sequences."""
    p = np.asarray(pred, dtype=np.float64).ravel()
    y = np.asarray(truth, dtype=np.float64).ravel()
    if p.shape != y.shape:
        raise DimensionError(f"pred has {p.size} points but truth has {y.size}")
    if p.size == 0:
        raise ValidationError("metrics need at least one point")
    err = p - y
    mse = float(np.mean(err * err))
    rmse = math.sqrt(mse)
    abs_err = np.abs(err)
    mae = float(np.mean(abs_err))
    included = np.abs(y) >= MAPE_FLOOR
    n_excluded = int(np.sum(~included))
    if n_excluded == y.size:
        mape = float("nan")
    else:
        mape = 100.0 * float(np.mean(abs_err[included] / np.abs(y[included])))
    return MetricReport(mse=mse, rmse=rmse, mae=mae, mape_percent=mape,
                        n_points=int(p.size), mape_excluded=n_excluded)


def compute_horizon_metrics(preds: np.ndarray, truths: np.ndarray) -> MetricReport:
    """Overall report plus a per-horizon-step breakdown.

    ``preds`` and ``truths`` are stacked as (n_samples, horizon, N, d_out).
    """
    p = np.asarray(preds, dtype=np.float64)
    y = np.asarray(truths, dtype=np.float64)
    if p.shape != y.shape or p.ndim != 4:
        raise DimensionError(
            f"expected matching (samples, horizon, N, d_out) stacks, "
            f"got {p.shape} and {y.shape}"
        )
    overall = compute_metrics(p, y)
    overall.per_horizon = [
        compute_metrics(p[:, j], y[:, j]) for j in range(p.shape[1])
    ]
    return overall
