import json

import numpy as np
import pytest

from oda.core import OdaConfig, OdaModel
from oda.metrics import f1_macro, metric_accuracy, metric_distortion, metric_f1
from oda.exceptions import NotClassifier
from oda.report import LevelRecord, RunReport


def cfg():
    return OdaConfig(t_max=1.0, t_min=0.01, eps_c=1e-4, eps_n=1e-3, delta=0.01)


def test_distortion_zero_when_codevectors_cover_data():
    X = np.array([[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]])
    m = OdaModel.init(cfg(), list(X))
    assert metric_distortion(m, X) == 0.0


def test_perfect_predictor():
    m = OdaModel.init(cfg(), [((0.0,), 0), ((10.0,), 1)])
    X = np.array([[0.0], [0.5], [9.0], [10.0]])
    y = np.array([0, 0, 1, 1])
    assert metric_accuracy(m, X, y) == 1.0
    assert metric_f1(m, X, y) == 1.0


def test_constant_predictor_on_imbalanced_set():
    y = np.array([0] * 90 + [1] * 10)
    pred = np.zeros(100, dtype=int)
    # per-class F1 from the confusion matrix: 2 * 0.9 * 1 / 1.9 and 0
    assert f1_macro(y, pred) == pytest.approx((2 * 0.9 / 1.9 + 0.0) / 2, abs=1e-12)
    assert f1_macro(y, pred) == pytest.approx(0.4737, abs=5e-5)
    assert np.mean(pred == y) == 0.9


def test_label_metrics_need_classifier():
    m = OdaModel.init(cfg(), [(0.0, 0.0)])
    with pytest.raises(NotClassifier):
        metric_accuracy(m, np.zeros((2, 2)), np.zeros(2))
    with pytest.raises(NotClassifier):
        metric_f1(m, np.zeros((2, 2)), np.zeros(2))


def make_report():
    rep = RunReport(config={"a": 1}, rng_seed=3, algorithm="oda")
    rep.append(LevelRecord(2.0, 1, 100, 0.5, 0.9, 0.8, wall_time_ms=12.5))
    rep.append(LevelRecord(1.6, 2, 250, 0.3, None, None, wall_time_ms=7.0, forced_advance=True))
    rep.summary = {"k_final": 2}
    return rep


def test_report_dict_round_trip():
    rep = make_report()
    back = RunReport.from_dict(json.loads(json.dumps(rep.to_dict(include_timing=True))))
    assert back.to_dict(include_timing=True) == rep.to_dict(include_timing=True)
    assert back.k_trace == [1, 2] and back.temperature_trace == [2.0, 1.6]


def test_report_serializations_exclude_timing():
    rep = make_report()
    lines = [json.loads(s) for s in rep.to_jsonl().splitlines()]
    assert lines[0]["record"] == "run" and lines[0]["format_version"] == 1
    assert [ln["record"] for ln in lines[1:]] == ["level", "level"]
    assert all("wall_time_ms" not in ln for ln in lines)
    header = rep.to_csv().splitlines()[0].split(",")
    assert "temperature" in header and "wall_time_ms" not in header
    assert "wall_time_ms" in rep.to_csv(include_timing=True).splitlines()[0]
