"""Brute-force reference implementations for tests and acceptance.

Exhaustive enumeration of the candidate set, exhaustive mixed-integer solve
(min over candidates of the box-QP max), exhaustive linear-integer-program
solve, and an independent projected-gradient QP solver that cross-checks
the coordinate-ascent path.
"""

from __future__ import annotations

from itertools import combinations, product
from typing import Sequence, Union

import numpy as np

from .labelgen import BalanceSpec, ClusteringBalance, SslBalance, selector_indicator
from .mlkl import LabelCandidate
from .svm_dual import BoxBounds, solve_box_qp

ENUMERATION_GUARD = 2**20


def enumerate_feasible(spec: Union[BalanceSpec, Sequence[int]]) -> list[LabelCandidate]:
    """All members of the candidate set.

    ``spec`` is an SslBalance, a ClusteringBalance, or a sequence of positive
    bag sizes (MIL). Guarded at 2^20 members.
    """
    if isinstance(spec, SslBalance):
        return _enumerate_ssl(spec)
    if isinstance(spec, ClusteringBalance):
        return _enumerate_clustering(spec)
    return _enumerate_mil(list(spec))


def _enumerate_ssl(balance: SslBalance) -> list[LabelCandidate]:
    n_u = balance.n_total - balance.l
    k_neg = balance.negatives_needed()
    from math import comb

    if comb(n_u, k_neg) > ENUMERATION_GUARD:
        raise ValueError("candidate set too large to enumerate")
    labeled = set(balance.labeled_indices)
    unlabeled = [i for i in range(balance.n_total) if i not in labeled]
    base = np.zeros(balance.n_total, dtype=int)
    for i, yl in zip(balance.labeled_indices, balance.y_labeled):
        base[i] = yl
    out = []
    for neg_set in combinations(range(n_u), k_neg):
        y = base.copy()
        negs = set(neg_set)
        for pos, i in enumerate(unlabeled):
            y[i] = -1 if pos in negs else +1
        out.append(LabelCandidate.from_assignment(y))
    return out


def _enumerate_clustering(balance: ClusteringBalance) -> list[LabelCandidate]:
    n = balance.n_total
    if 2**n > ENUMERATION_GUARD:
        raise ValueError("candidate set too large to enumerate")
    out = []
    for bits in product((-1, +1), repeat=n):
        if abs(sum(bits)) <= balance.beta:
            out.append(LabelCandidate.from_assignment(bits))
    return out


def _enumerate_mil(bag_sizes: list[int]) -> list[LabelCandidate]:
    total = 1
    for m in bag_sizes:
        if m <= 0:
            raise ValueError("empty positive bag")
        total *= m
    if total > ENUMERATION_GUARD:
        raise ValueError("candidate set too large to enumerate")
    offsets = np.concatenate([[0], np.cumsum(bag_sizes)])[:-1]
    out = []
    for choice in product(*(range(m) for m in bag_sizes)):
        out.append(LabelCandidate.from_selector([int(o + c) for o, c in zip(offsets, choice)]))
    return out


def mip_solve(
    gram_for,
    bounds: BoxBounds,
    feasible: Sequence[LabelCandidate],
    qp_tol: float = 1e-6,
) -> tuple[LabelCandidate, float]:
    """min over the enumerated set of max_a G(a, y); ties go to the first.

    ``gram_for`` maps a candidate to its effective kernel Q (as in mlkl).
    """
    best_cand, best_val = None, np.inf
    for cand in feasible:
        Q = np.asarray(gram_for(cand), dtype=float)
        state = solve_box_qp(Q, bounds, tol=qp_tol)
        if state.objective < best_val:
            best_cand, best_val = cand, state.objective
    return best_cand, best_val


def lp_solve_exhaustive(
    r: np.ndarray,
    feasible: Sequence[LabelCandidate],
    unlabeled_only: Sequence[int] | None = None,
) -> tuple[LabelCandidate, float]:
    """argmax of r'y (or r's) by exhaustive scan; ties go to the first.

    For SSL candidates ``r`` may cover only the unlabeled coordinates, in
    which case ``unlabeled_only`` gives those coordinate positions.
    """
    r = np.asarray(r, dtype=float)
    best_cand, best_val = None, -np.inf
    for cand in feasible:
        if cand.selector is not None:
            total = len(r)
            v = float(r @ selector_indicator(cand, total))
        else:
            y = cand.vector()
            if unlabeled_only is not None:
                y = y[list(unlabeled_only)]
            v = float(r @ y)
        if v > best_val:
            best_cand, best_val = cand, v
    return best_cand, best_val


def projected_gradient_solve(
    Q: np.ndarray,
    bounds: BoxBounds,
    max_iters: int = 100_000,
    grad_tol: float = 1e-10,
) -> tuple[np.ndarray, float]:
    """Independent fixed-step projected-gradient reference for the box QP.

    Step size 1/trace(Q); early exit once the projected gradient vanishes.
    Kept deliberately separate from the coordinate-ascent solver.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    C = bounds.upper
    tr = float(np.trace(Q))
    step = 1.0 / tr if tr > 0 else 1.0
    alpha = np.zeros(n)
    for _ in range(max_iters):
        grad = 1.0 - Q @ alpha
        new = np.clip(alpha + step * grad, 0.0, C)
        if np.max(np.abs(new - alpha)) < grad_tol * step:
            alpha = new
            break
        alpha = new
    obj = float(alpha.sum()) - 0.5 * float(alpha @ Q @ alpha)
    return alpha, obj
