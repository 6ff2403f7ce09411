import numpy as np
import pytest

from wellsvm.mlkl import (
    LabelCandidate,
    WorkingSet,
    mlkl_objective,
    mlkl_solve,
    mu_update,
)
from wellsvm.svm_dual import BoxBounds, solve_box_qp


def _psd(rng, n):
    A = rng.standard_normal((n, n))
    return A @ A.T / n


def test_label_candidate_validation():
    with pytest.raises(ValueError):
        LabelCandidate()
    with pytest.raises(ValueError):
        LabelCandidate(assignment=(1, 0, -1))
    with pytest.raises(ValueError):
        LabelCandidate(assignment=(1, -1), selector=(0,))


def test_working_set_add_rescales_mu():
    ws = WorkingSet([LabelCandidate.from_assignment([1, -1])])
    assert np.allclose(ws.mu, [1.0])
    ws.add(LabelCandidate.from_assignment([-1, 1]))
    assert np.allclose(ws.mu, [0.5, 0.5])
    ws.add(LabelCandidate.from_assignment([1, 1]))
    assert np.allclose(ws.mu, [1 / 3, 1 / 3, 1 / 3])
    with pytest.raises(ValueError):
        ws.add(LabelCandidate.from_assignment([1, 1]))  # duplicate


def test_mu_update_closed_form_example():
    # norms 3 and 1 -> weights 0.75 / 0.25
    mu = np.array([0.5, 0.5])
    quads = np.array([36.0, 4.0])  # mu^2*quad = 9, 1 -> norms 3, 1
    new, degenerate = mu_update(mu, quads)
    assert not degenerate
    assert np.allclose(new, [0.75, 0.25])


def test_mu_update_degenerate():
    mu = np.array([0.6, 0.4])
    new, degenerate = mu_update(mu, np.zeros(2))
    assert degenerate and np.array_equal(new, mu)


def test_single_candidate_reduces_to_box_qp():
    rng = np.random.default_rng(0)
    K = _psd(rng, 6)
    y = np.array([1, -1, 1, -1, 1, 1], dtype=float)
    Q = K * np.outer(y, y)
    bounds = BoxBounds.constant(1.0, 6)
    res = mlkl_solve(WorkingSet([LabelCandidate.from_assignment(y.astype(int))]),
                     lambda c: Q, bounds)
    ref = solve_box_qp(Q, bounds)
    assert np.array_equal(res.state.alpha, ref.alpha)
    assert res.state.objective == ref.objective
    assert np.array_equal(res.ws.mu, [1.0])


def test_duplicate_kernels_match_single_candidate_objective():
    rng = np.random.default_rng(1)
    K = _psd(rng, 5)
    y = np.where(rng.random(5) < 0.5, -1, 1)
    Q = K * np.outer(y, y)
    bounds = BoxBounds.constant(1.0, 5)
    single = solve_box_qp(Q, bounds, tol=1e-8)
    # two distinct candidates whose label kernels coincide (y and -y)
    ws = WorkingSet([
        LabelCandidate.from_assignment(y),
        LabelCandidate.from_assignment(-y),
    ])
    res = mlkl_solve(ws, lambda c: K * np.outer(c.vector(), c.vector()), bounds, qp_tol=1e-8)
    assert res.state.objective == pytest.approx(single.objective, abs=1e-6)


def test_mlkl_beats_every_vertex():
    # the saddle value min_mu max_alpha is <= the value at any vertex
    rng = np.random.default_rng(2)
    n = 7
    K = _psd(rng, n)
    cands = []
    while len(cands) < 3:
        y = np.where(rng.random(n) < 0.5, -1, 1)
        c = LabelCandidate.from_assignment(y)
        if c not in cands:
            cands.append(c)
    bounds = BoxBounds.constant(1.0, n)
    gram_for = lambda c: K * np.outer(c.vector(), c.vector())
    res = mlkl_solve(WorkingSet(cands), gram_for, bounds, qp_tol=1e-8)
    for c in cands:
        vertex = solve_box_qp(gram_for(c), bounds, tol=1e-8)
        assert res.state.objective <= vertex.objective + 1e-6
    assert res.ws.mu.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(res.ws.mu >= -1e-12)


def test_mlkl_objective_formula():
    rng = np.random.default_rng(3)
    kernels = [_psd(rng, 4), _psd(rng, 4)]
    mu = np.array([0.25, 0.75])
    alpha = rng.uniform(0, 1, 4)
    expected = alpha.sum() - 0.5 * sum(
        m * alpha @ K @ alpha for K, m in zip(kernels, mu)
    )
    assert mlkl_objective(kernels, mu, alpha) == pytest.approx(expected, rel=1e-12)


def test_empty_working_set_rejected():
    with pytest.raises(ValueError):
        mlkl_solve(WorkingSet(), lambda c: np.eye(2), BoxBounds.constant(1.0, 2))
