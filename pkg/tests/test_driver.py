import numpy as np
import pytest
import scipy.sparse as sp

from wellsvm.data import Bag, BagDataset, Dataset, SparseVector, make_two_gaussians
from wellsvm.driver import (
    TaskConfig,
    WellsvmModel,
    initialize_clustering,
    initialize_mil,
    initialize_ssl,
    train,
)
from wellsvm.kernel import KernelSpec, cross_gram
from wellsvm.metrics import accuracy
from wellsvm.svm_dual import BoxBounds, solve_box_qp
from wellsvm.verify import trace_monotone


def _cfg(task, **kw):
    kw.setdefault("kernel", KernelSpec("linear"))
    return TaskConfig(task=task, **kw)


def test_ssl_all_labeled_terminates_immediately_as_supervised():
    d = make_two_gaussians(10, 4.0, seed=0)  # fully labeled
    model, trace = train(d, _cfg("ssl", c1=1.0, seed=0))
    assert len(trace) == 1 and model.converged
    assert len(model.candidates) == 1
    assert np.array_equal(np.asarray(model.candidates[0].assignment), d.label_vector())
    y = d.label_vector().astype(float)
    X = np.asarray(d.X.todense())
    ref = solve_box_qp((X @ X.T) * np.outer(y, y), BoxBounds.constant(1.0, 10))
    assert model.alpha == pytest.approx(ref.alpha, abs=1e-8)


def test_ssl_beats_or_matches_supervised_baseline_n60():
    d = make_two_gaussians(60, 6.0, seed=1)
    labels = [None] * 60
    for i in (0, 1, 2):
        labels[i] = 1
    for i in (30, 31, 32):
        labels[i] = -1
    train_d = Dataset(d.X, labels)
    test_d = make_two_gaussians(200, 6.0, seed=99)
    model, trace = train(train_d, _cfg("ssl", seed=1))
    truth = test_d.label_vector()
    well = accuracy(np.where(model.decision_values(test_d.X) >= 0, 1, -1), truth)
    y = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
    Xl = np.asarray(train_d.X[[0, 1, 2, 30, 31, 32]].todense())
    st = solve_box_qp((Xl @ Xl.T) * np.outer(y, y), BoxBounds.constant(1.0, 6))
    svm = accuracy(
        np.where(np.asarray(test_d.X.todense()) @ Xl.T @ (st.alpha * y) >= 0, 1, -1), truth
    )
    assert well >= svm
    assert trace_monotone(trace)


def test_traces_monotone_over_random_instances():
    rng = np.random.default_rng(0)
    for k in range(5):
        X = rng.standard_normal((20, 2))
        X[:10] += 2.0
        labels = [None] * 20
        labels[0], labels[10] = 1, -1
        d = Dataset(sp.csr_matrix(X), labels)
        _, trace = train(d, _cfg("ssl", seed=k))
        assert trace_monotone(trace, tol=1e-8)
        assert len(trace) <= 50


def test_clustering_candidates_respect_balance():
    d = make_two_gaussians(30, 4.0, seed=2)
    hidden = Dataset(d.X, [None] * 30)
    model, _ = train(hidden, _cfg("clustering", c=0.1, beta=2, seed=2))
    for cand in model.candidates:
        assert abs(int(np.sum(np.asarray(cand.assignment, dtype=int)))) <= 2


def test_max_outer_iters_cap_flags_not_converged():
    d = make_two_gaussians(40, 2.0, seed=3)
    labels = [None] * 40
    labels[0], labels[20] = 1, -1
    hidden = Dataset(d.X, labels)
    model, trace = train(hidden, _cfg("ssl", seed=3, max_outer_iters=1,
                                      epsilon=1e-12, obj_decrease_threshold=1e-12))
    assert len(trace) == 1
    assert not model.converged


def test_model_json_roundtrip_byte_identical():
    d = make_two_gaussians(20, 4.0, seed=4)
    labels = list(d.labels)
    for i in range(20):
        if i not in (0, 10):
            labels[i] = None
    model, _ = train(Dataset(d.X, labels), _cfg("ssl", seed=4))
    doc = model.to_json()
    again = WellsvmModel.from_json(doc)
    assert again.to_json() == doc
    X = np.asarray(d.X.todense())
    assert np.array_equal(model.decision_values(X), again.decision_values(X))


def test_predict_handles_extra_dimensions_as_zero():
    d = make_two_gaussians(10, 4.0, seed=5)
    model, _ = train(d, _cfg("ssl", seed=5))
    v_base = model.predict(SparseVector(entries=((0, 1.0),)))
    # feature index beyond the training dimensionality contributes nothing
    # under the linear kernel
    v_ext = model.predict(SparseVector(entries=((0, 1.0), (7, 3.0))))
    assert v_ext == pytest.approx(v_base, abs=1e-12)


def test_initialize_ssl_matches_truth_on_separable_data():
    d = make_two_gaussians(40, 8.0, seed=6)
    labels = list(d.labels)
    unl = [i for i in range(40) if i not in (0, 1, 20, 21)]
    for i in unl:
        labels[i] = None
    dt = Dataset(d.X, labels)
    cand = initialize_ssl(dt, _cfg("ssl", seed=6))
    y = np.asarray(cand.assignment)
    agree = np.mean(y[unl] == d.label_vector()[unl])
    assert agree >= 0.9


def test_initialize_clustering_feasible_and_seeded():
    d = make_two_gaussians(12, 3.0, seed=7)
    hidden = Dataset(d.X, [None] * 12)
    cfg = _cfg("clustering", beta=2, seed=7)
    c1 = initialize_clustering(hidden, cfg)
    c2 = initialize_clustering(hidden, cfg)
    assert c1 == c2
    assert abs(int(np.sum(np.asarray(c1.assignment, dtype=int)))) <= 2


def test_mil_train_and_bag_predict():
    rng = np.random.default_rng(8)
    rows, bags = [], []
    start = 0
    for label in (1, 1, -1, -1):
        block = rng.standard_normal((3, 2)) + (2.0 if label == 1 else -2.0)
        rows.append(block)
        bags.append(Bag(start, start + 3, label))
        start += 3
    bd = BagDataset(Dataset(sp.csr_matrix(np.vstack(rows)), [None] * start), bags)
    model, trace = train(bd, _cfg("mil", seed=8))
    assert trace_monotone(trace)
    X = np.asarray(bd.instances.X.todense())
    for b in bags:
        score = model.mil_bag_predict(X[b.start:b.end])
        assert (1 if score >= 0 else -1) == b.label
    mcand = initialize_mil(bd, _cfg("mil", seed=8))
    assert len(mcand.selector) == 2
    with pytest.raises(ValueError):
        model.mil_bag_predict(X[0:0])


def test_unknown_task_rejected():
    d = make_two_gaussians(4, 2.0, seed=0)
    with pytest.raises(ValueError):
        train(d, _cfg("regression"))
