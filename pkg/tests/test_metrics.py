import numpy as np
import pytest

from vitalcam.metrics import (
    MetricReport,
    combine_reports,
    metrics,
    read_report,
    write_report,
)
from vitalcam.series import RateSeries


def series(bpm, t0=5.0):
    bpm = np.asarray(bpm, dtype=np.float64)
    return RateSeries(t_sec=t0 + np.arange(bpm.size), bpm=bpm)


def test_perfect_prediction():
    truth = series([70.0, 72.0, 75.0, 71.0])
    rep = metrics(truth, truth)
    assert rep.mae == 0.0
    assert rep.rmse == 0.0
    assert rep.corrcoef == pytest.approx(1.0)
    assert rep.r2 == pytest.approx(1.0)
    assert rep.n == 4


def test_constant_offset_closed_form():
    truth = series([70.0, 72.0, 75.0, 71.0, 66.0])
    pred = series(truth.bpm + 2.0)
    rep = metrics(pred, truth)
    assert rep.mae == pytest.approx(2.0)
    assert rep.rmse == pytest.approx(2.0)
    assert rep.corrcoef == pytest.approx(1.0)
    var = float(np.mean((truth.bpm - truth.bpm.mean()) ** 2))
    assert rep.r2 == pytest.approx(1.0 - 4.0 / var)


def test_constant_truth_yields_null_corr():
    truth = series([70.0] * 6)
    pred = series([70.0, 71.0, 69.0, 70.5, 70.0, 70.2])
    rep = metrics(pred, truth)
    assert rep.corrcoef is None
    assert rep.r2 is None
    assert rep.mae > 0


def test_constant_prediction_yields_null_corr_but_r2():
    truth = series([70.0, 72.0, 74.0, 76.0])
    pred = series([73.0] * 4)
    rep = metrics(pred, truth)
    assert rep.corrcoef is None
    assert rep.r2 is not None


def test_inner_join_on_timestamps():
    truth = RateSeries(t_sec=[5.0, 6.0, 7.0, 8.0], bpm=[70.0, 71.0, 72.0, 73.0])
    pred = RateSeries(t_sec=[7.0, 8.0, 9.0], bpm=[72.0, 70.0, 99.0])
    rep = metrics(pred, truth)
    assert rep.n == 2
    assert rep.mae == pytest.approx(1.5)


def test_disjoint_timestamps_rejected():
    truth = RateSeries(t_sec=[5.0, 6.0], bpm=[70.0, 71.0])
    pred = RateSeries(t_sec=[50.0, 60.0], bpm=[70.0, 71.0])
    with pytest.raises(ValueError, match="common"):
        metrics(pred, truth)


def test_rmse_dominates_mae():
    rng = np.random.default_rng(0)
    for _ in range(10):
        truth = series(rng.uniform(60, 90, size=20))
        pred = series(truth.bpm + rng.normal(scale=3.0, size=20))
        rep = metrics(pred, truth)
        assert rep.rmse >= rep.mae


def test_report_validation():
    with pytest.raises(ValueError):
        MetricReport(mae=3.0, rmse=2.0, corrcoef=0.5, r2=0.5, n=4)
    with pytest.raises(ValueError):
        MetricReport(mae=1.0, rmse=2.0, corrcoef=1.5, r2=0.5, n=4)
    with pytest.raises(ValueError):
        MetricReport(mae=1.0, rmse=2.0, corrcoef=0.5, r2=0.5, n=0)


def test_combine_reports_pools_by_count():
    r1 = MetricReport(mae=1.0, rmse=1.0, corrcoef=1.0, r2=1.0, n=10)
    r2 = MetricReport(mae=4.0, rmse=4.0, corrcoef=0.0, r2=0.0, n=30)
    combined = combine_reports({"a": r1, "b": r2})
    assert combined.n == 40
    assert combined.mae == pytest.approx((1.0 * 10 + 4.0 * 30) / 40)
    assert combined.rmse == pytest.approx(np.sqrt((1.0 * 10 + 16.0 * 30) / 40))
    assert combined.corrcoef == pytest.approx(0.25)
    assert set(combined.breakdown) == {"a", "b"}


def test_combine_propagates_null_corr():
    r1 = MetricReport(mae=1.0, rmse=1.0, corrcoef=None, r2=None, n=10)
    r2 = MetricReport(mae=4.0, rmse=4.0, corrcoef=0.5, r2=0.5, n=30)
    combined = combine_reports({"a": r1, "b": r2})
    assert combined.corrcoef is None
    assert combined.r2 is None


def test_report_json_round_trip(tmp_path):
    rep = MetricReport(mae=1.25, rmse=2.5, corrcoef=None, r2=-0.5, n=7,
                       breakdown={"cam_a": MetricReport(mae=1.0, rmse=1.5,
                                                        corrcoef=0.9, r2=0.8, n=3)})
    path = tmp_path / "r.json"
    write_report(path, rep)
    back = read_report(path)
    assert back == rep
