"""Rate-series agreement metrics and the JSON report format."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .series import RateSeries


@dataclass(frozen=True)
class MetricReport:
    """MAE/RMSE/CorrCoef/R2 over joined timestamps.

    corrcoef and r2 are None when the truth has zero variance (both
    are undefined there). breakdown holds per-key sub-reports when a
    report aggregates several clips.
    """

    mae: float
    rmse: float
    corrcoef: float | None
    r2: float | None
    n: int
    breakdown: dict[str, "MetricReport"] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("report: need at least one point")
        if self.mae < 0 or self.rmse < self.mae - 1e-12:
            raise ValueError(f"report: bad mae/rmse pair ({self.mae}, {self.rmse})")
        if self.corrcoef is not None and not -1.0 - 1e-12 <= self.corrcoef <= 1.0 + 1e-12:
            raise ValueError(f"report: corrcoef {self.corrcoef} outside [-1, 1]")
        if self.r2 is not None and self.r2 > 1.0 + 1e-12:
            raise ValueError(f"report: r2 {self.r2} > 1")

    def to_dict(self) -> dict:
        d = {
            "mae": self.mae,
            "rmse": self.rmse,
            "corrcoef": self.corrcoef,
            "r2": self.r2,
            "n": self.n,
        }
        if self.breakdown:
            d["breakdown"] = {k: v.to_dict() for k, v in self.breakdown.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(
            mae=d["mae"],
            rmse=d["rmse"],
            corrcoef=d["corrcoef"],
            r2=d["r2"],
            n=d["n"],
            breakdown={k: cls.from_dict(v) for k, v in d.get("breakdown", {}).items()},
        )


def metrics(pred: RateSeries, truth: RateSeries) -> MetricReport:
    """Compare two rate series on their common timestamps."""
    common, pi, ti = np.intersect1d(pred.t_sec, truth.t_sec, return_indices=True)
    if common.size == 0:
        raise ValueError("metrics: no common timestamps between pred and truth")
    p = pred.bpm[pi]
    t = truth.bpm[ti]
    diff = p - t
    mae = float(np.mean(np.abs(diff)))
    rmse = float(np.sqrt(np.mean(diff * diff)))
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    if ss_tot == 0.0 or np.std(p) == 0.0:
        corr = None
    else:
        corr = float(np.corrcoef(p, t)[0, 1])
    if ss_tot == 0.0:
        r2 = None
    else:
        r2 = float(1.0 - np.sum(diff * diff) / ss_tot)
    return MetricReport(mae=mae, rmse=rmse, corrcoef=corr, r2=r2, n=int(common.size))


def combine_reports(parts: dict[str, MetricReport]) -> MetricReport:
    """Pool per-clip reports into one, keeping the parts as breakdown.

    Pooling is over points (weighted by each part's n), not a mean of
    the per-clip metrics; corrcoef/r2 are not poolable from summaries
    and are reported only when every part defines them, as the
    n-weighted mean.
    """
    if not parts:
        raise ValueError("metrics: nothing to combine")
    ns = np.array([r.n for r in parts.values()], dtype=np.float64)
    maes = np.array([r.mae for r in parts.values()])
    rmses = np.array([r.rmse for r in parts.values()])
    total = ns.sum()
    mae = float((maes * ns).sum() / total)
    rmse = float(np.sqrt((rmses**2 * ns).sum() / total))
    if any(r.corrcoef is None for r in parts.values()):
        corr = None
    else:
        corr = float(sum(r.corrcoef * r.n for r in parts.values()) / total)
    if any(r.r2 is None for r in parts.values()):
        r2 = None
    else:
        r2 = float(sum(r.r2 * r.n for r in parts.values()) / total)
    return MetricReport(mae=mae, rmse=rmse, corrcoef=corr, r2=r2, n=int(total),
                        breakdown=dict(parts))


def write_report(path: str | os.PathLike, report: MetricReport) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_report(path: str | os.PathLike) -> MetricReport:
    with open(path) as fh:
        return MetricReport.from_dict(json.load(fh))
