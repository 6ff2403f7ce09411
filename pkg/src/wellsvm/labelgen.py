"""Violated-candidate generation by sorting / per-bag argmax, and certification.

The linear integer program max r'y over the balanced candidate set is solved
exactly: sort the unlabeled scores ascending, assign the first k coordinates
-1 and the rest +1 (the counts pinned by the balance rule). All ties break by
ascending original index for cross-run determinism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .mlkl import LabelCandidate, WorkingSet

CERTIFY_TOL = 1e-9


@dataclass(frozen=True)
class SslBalance:
    """SSL balance data: the known labels pinned on the labeled coordinates."""

    y_labeled: tuple[int, ...]
    labeled_indices: tuple[int, ...]
    n_total: int

    @property
    def l(self) -> int:
        return len(self.y_labeled)

    def negatives_needed(self) -> int:
        """Number of -1 assignments among the N - l unlabeled coordinates.

        k = ceil(0.5 * (N - l) * (1 - (1/l) * sum(y_L))), the integer
        rounding of the label-mean balance constraint.
        """
        n_u = self.n_total - self.l
        k = math.ceil(0.5 * n_u * (1.0 - sum(self.y_labeled) / self.l))
        return k

    def __post_init__(self):
        if self.l < 1:
            raise ValueError("need at least one labeled example")
        if len(self.labeled_indices) != self.l:
            raise ValueError("labeled index/label length mismatch")
        if any(v not in (+1, -1) for v in self.y_labeled):
            raise ValueError("labels must be ±1")
        if len(set(self.labeled_indices)) != self.l:
            raise ValueError("duplicate labeled index")
        if any(not 0 <= i < self.n_total for i in self.labeled_indices):
            raise ValueError("labeled index out of range")
        k = self.negatives_needed()
        if not (0 <= k <= self.n_total - self.l):
            raise ValueError("infeasible balance constraint")


@dataclass(frozen=True)
class ClusteringBalance:
    """Clustering balance: |1'y| <= beta."""

    beta: int
    n_total: int

    def __post_init__(self):
        if not (0 <= self.beta <= self.n_total):
            raise ValueError("beta must be in [0, N]")


BalanceSpec = Union[SslBalance, ClusteringBalance]


def satisfies_balance(y: np.ndarray, balance: BalanceSpec) -> bool:
    y = np.asarray(y, dtype=int)
    if isinstance(balance, ClusteringBalance):
        return abs(int(y.sum())) <= balance.beta
    lab = list(balance.labeled_indices)
    if any(int(y[i]) != yl for i, yl in zip(lab, balance.y_labeled)):
        return False
    unlabeled = [i for i in range(balance.n_total) if i not in set(lab)]
    k_neg = sum(1 for i in unlabeled if y[i] == -1)
    return k_neg == balance.negatives_needed()


def _stable_ascending(r: np.ndarray) -> np.ndarray:
    return np.argsort(r, kind="stable")


def generate_ssl(r: np.ndarray, balance: SslBalance) -> LabelCandidate:
    """Maximize r'y over the SSL candidate set by sorting.

    ``r`` holds the scores of the unlabeled coordinates only, in their
    original dataset order. The smallest k scores get -1, the rest +1,
    with k fixed by the balance rule; labeled coordinates are copied.
    """
    r = np.asarray(r, dtype=float)
    n_u = balance.n_total - balance.l
    if r.shape != (n_u,):
        raise ValueError("score length must equal the unlabeled count")
    k_neg = balance.negatives_needed()
    order = _stable_ascending(r)
    y_u = np.ones(n_u, dtype=int)
    y_u[order[:k_neg]] = -1
    y = np.zeros(balance.n_total, dtype=int)
    labeled = set(balance.labeled_indices)
    for i, yl in zip(balance.labeled_indices, balance.y_labeled):
        y[i] = yl
    u_pos = 0
    for i in range(balance.n_total):
        if i not in labeled:
            y[i] = y_u[u_pos]
            u_pos += 1
    cand = LabelCandidate.from_assignment(y)
    assert satisfies_balance(y, balance)
    return cand


def generate_clustering(r: np.ndarray, beta: int) -> LabelCandidate:
    """Maximize r'y subject to |1'y| <= beta by sorting.

    After the ascending sort, the first ceil((N-beta)/2) coordinates get -1,
    the last ceil((N-beta)/2) get +1, and the middle block follows the sign
    of its score (>= 0 maps to +1). The ceil on both fixed blocks keeps
    |1'y| <= beta for every sign outcome of the middle block.
    """
    r = np.asarray(r, dtype=float)
    n = len(r)
    balance = ClusteringBalance(beta=beta, n_total=n)
    k = max(-((beta - n) // 2), 0)  # ceil((n - beta) / 2)
    if 2 * k > n:
        raise ValueError(f"no feasible ±1 assignment for n={n}, beta={beta}")
    order = _stable_ascending(r)
    y = np.zeros(n, dtype=int)
    y[order[:k]] = -1
    y[order[n - k:]] = +1
    middle = order[k:n - k]
    y[middle] = np.where(r[middle] >= 0, 1, -1)
    cand = LabelCandidate.from_assignment(y)
    assert satisfies_balance(y, balance)
    return cand


def generate_mil(r: np.ndarray, bag_sizes: Sequence[int]) -> LabelCandidate:
    """Per positive bag, pick the instance with the largest score.

    ``r`` is indexed over the J_p positive-bag instances in bag order;
    the selector holds one index into r per bag. Ties go to the lowest index.
    """
    r = np.asarray(r, dtype=float)
    if any(m <= 0 for m in bag_sizes):
        raise ValueError("empty positive bag")
    if len(r) != sum(bag_sizes):
        raise ValueError("score length must equal total positive-bag size")
    selector = []
    start = 0
    for m in bag_sizes:
        seg = r[start:start + m]
        selector.append(start + int(np.argmax(seg)))
        start += m
    return LabelCandidate.from_selector(selector)


def selector_indicator(cand: LabelCandidate, total: int) -> np.ndarray:
    """The 0/1 vector over positive-bag instance slots picked by a selector."""
    s = np.zeros(total)
    for idx in cand.selector:
        s[idx] = 1.0
    return s


def _quad_score(cand: LabelCandidate, H: np.ndarray, tau: np.ndarray | None) -> float:
    if cand.selector is not None:
        s = selector_indicator(cand, H.shape[0])
        val = float(s @ H @ s)
        if tau is not None:
            val += float(tau @ s)
        return val
    y = cand.vector()
    return float(y @ H @ y)


def pick_incumbent(ws: WorkingSet, H: np.ndarray, tau: np.ndarray | None = None) -> LabelCandidate:
    """The working-set member with the largest quadratic score; ties go to
    the earliest insertion."""
    if len(ws) == 0:
        raise ValueError("working set is empty")
    best, best_val = None, -np.inf
    for cand in ws.candidates:
        val = _quad_score(cand, H, tau)
        if val > best_val:
            best, best_val = cand, val
    return best


def certify_violation(
    candidate: LabelCandidate,
    incumbent: LabelCandidate,
    H: np.ndarray,
    tau: np.ndarray | None = None,
) -> bool:
    """True iff the generated candidate strictly beats the incumbent's
    cross score, implying a strict increase of the quadratic score.

    SSL/clustering: ybar'H y* > ybar'H ybar. MIL: (s*)'H sbar + tau's*/2 >
    sbar'H sbar + tau'sbar/2. Strictness uses an absolute 1e-9 margin.
    """
    if candidate.selector is not None:
        sbar = selector_indicator(incumbent, H.shape[0])
        sstar = selector_indicator(candidate, H.shape[0])
        lhs = float(sstar @ H @ sbar) + 0.5 * float(tau @ sstar)
        rhs = float(sbar @ H @ sbar) + 0.5 * float(tau @ sbar)
    else:
        ybar = incumbent.vector()
        ystar = candidate.vector()
        lhs = float(ybar @ H @ ystar)
        rhs = float(ybar @ H @ ybar)
    return lhs > rhs + CERTIFY_TOL
