import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wellsvm.metrics import (
    EvalReport,
    accuracy,
    clustering_accuracy,
    roi_success_rates,
)


def test_accuracy_basic_and_errors():
    assert accuracy([1, -1, 1], [1, 1, 1]) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        accuracy([1], [1, -1])
    with pytest.raises(ValueError):
        accuracy([], [])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=50), st.data())
def test_clustering_accuracy_flip_invariant(pred, data):
    truth = data.draw(st.lists(st.sampled_from([-1, 1]),
                               min_size=len(pred), max_size=len(pred)))
    p = np.asarray(pred)
    t = np.asarray(truth)
    a = clustering_accuracy(p, t)
    assert a == clustering_accuracy(-p, t)
    assert 0.5 <= a <= 1.0 or len(pred) == 1


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 100), st.integers(1, 100), st.data())
def test_roi_harmonic_identity(n_rel, n_pred, data):
    n_succ = data.draw(st.integers(1, min(n_rel, n_pred)))
    r1, r2, sr = roi_success_rates(n_succ, n_rel, n_pred)
    assert abs(1.0 / sr - 0.5 * (1.0 / r1 + 1.0 / r2)) <= 1e-12


def test_roi_zero_conventions_and_errors():
    assert roi_success_rates(0, 0, 0) == (0.0, 0.0, 0.0)
    assert roi_success_rates(0, 5, 0) == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        roi_success_rates(-1, 1, 1)
    with pytest.raises(ValueError):
        roi_success_rates(3, 2, 5)


def test_eval_report_stats_and_validation():
    rep = EvalReport(task="ssl")
    rep.add_run({"accuracy": 0.9})
    rep.add_run({"accuracy": 0.8})
    assert rep.mean("accuracy") == pytest.approx(0.85)
    assert rep.std("accuracy") == pytest.approx(np.std([0.9, 0.8], ddof=1))
    with pytest.raises(ValueError):
        rep.add_run({"accuracy": 1.5})


def test_eval_report_csv_deterministic():
    rep = EvalReport(task="clustering")
    rep.add_run({"clustering_accuracy": 0.975})
    assert rep.to_csv() == EvalReport(task="clustering",
                                      runs=dict(rep.runs)).to_csv()
    assert "clustering_accuracy" in rep.to_csv()
    assert "0.975" in rep.to_csv()


def test_eval_report_single_run_std_zero():
    rep = EvalReport(task="mil")
    rep.add_run({"bag_accuracy": 1.0})
    assert rep.std("bag_accuracy") == 0.0
