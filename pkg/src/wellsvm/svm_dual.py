"""Box-constrained SVM dual without offset.

Maximizes 1'a - 0.5 a'Qa over 0 <= a_i <= C_i by deterministic dual
coordinate ascent (ascending index order, active-set shrinking, no RNG).
Q is either an explicit psd ndarray (kernel mode) or a LinearLabelOperator
(linear mode, never materialized).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

DEFAULT_TOL = 1e-4
_MAX_SWEEPS = 100_000


@dataclass(frozen=True)
class BoxBounds:
    """Per-example upper bounds C_i > 0 (lower bound is 0 everywhere)."""

    upper: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.upper, dtype=float)
        if u.ndim != 1 or not np.all(np.isfinite(u)) or np.any(u <= 0):
            raise ValueError("bounds must be finite and > 0")
        object.__setattr__(self, "upper", u)

    @staticmethod
    def constant(C: float, n: int) -> "BoxBounds":
        return BoxBounds(np.full(n, float(C)))

    @staticmethod
    def two_level(c1: float, c2: float, n1: int, n2: int) -> "BoxBounds":
        return BoxBounds(np.concatenate([np.full(n1, float(c1)), np.full(n2, float(c2))]))


@dataclass
class DualState:
    """Solver output: dual variables, objective, optional per-kernel norms."""

    alpha: np.ndarray
    objective: float
    per_candidate_norms: Optional[np.ndarray] = None
    sweeps: int = 0


class LinearLabelOperator:
    """Implicit Q for the linear kernel: Q_ij = (x_i.x_j) * sum_t mu_t y_ti y_tj.

    Keeps the per-candidate accumulators o_t = X'(alpha ⊙ y_t) so that a
    coordinate gradient costs O(T * nnz(x_i)).
    """

    def __init__(self, X: sp.csr_matrix, candidates: Sequence[np.ndarray], mu: np.ndarray):
        self.X = sp.csr_matrix(X)
        self.signs = np.vstack([np.asarray(y, dtype=float) for y in candidates])  # T x n
        self.mu = np.asarray(mu, dtype=float)
        if self.signs.shape[1] != self.X.shape[0] or self.signs.shape[0] != len(self.mu):
            raise ValueError("dimension mismatch")
        sq = self.X.multiply(self.X)
        self._diag = np.asarray(sq.sum(axis=1)).ravel()

    @property
    def shape(self):
        n = self.X.shape[0]
        return (n, n)

    def diag(self) -> np.ndarray:
        return self._diag

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.X.shape[0])
        for m, y in zip(self.mu, self.signs):
            o = self.X.T @ (v * y)
            out += m * y * (self.X @ o)
        return out

    def accumulators(self, alpha: np.ndarray) -> np.ndarray:
        """o_t = X'(alpha ⊙ y_t), stacked as a T x d dense array."""
        return np.vstack([self.X.T @ (alpha * y) for y in self.signs])


def _is_operator(Q) -> bool:
    return isinstance(Q, LinearLabelOperator)


def dual_objective(Q: Union[np.ndarray, LinearLabelOperator], alpha: np.ndarray) -> float:
    """1'a - 0.5 a'Qa."""
    alpha = np.asarray(alpha, dtype=float)
    if _is_operator(Q):
        quad = float(alpha @ Q.matvec(alpha))
    else:
        quad = float(alpha @ Q @ alpha)
    return float(alpha.sum()) - 0.5 * quad


def projected_gradient(Q, alpha: np.ndarray, bounds: BoxBounds) -> np.ndarray:
    """Per-coordinate projected gradient of the maximization problem."""
    grad = 1.0 - (Q.matvec(alpha) if _is_operator(Q) else Q @ alpha)
    pg = grad.copy()
    pg[(alpha <= 0) & (grad < 0)] = 0.0
    at_upper = alpha >= bounds.upper
    pg[at_upper & (grad > 0)] = 0.0
    return pg


def _lbfgsb_warm(Q, C: np.ndarray, alpha: np.ndarray, tol: float) -> np.ndarray:
    from scipy.optimize import minimize

    def neg_obj(a):
        qa = Q.matvec(a) if _is_operator(Q) else Q @ a
        return -(a.sum() - 0.5 * float(a @ qa)), qa - 1.0

    res = minimize(
        neg_obj,
        alpha,
        jac=True,
        method="L-BFGS-B",
        bounds=[(0.0, c) for c in C],
        options={"maxiter": 500, "ftol": 1e-14, "gtol": 0.1 * tol},
    )
    return np.clip(res.x, 0.0, C)


def _projected_newton(Q: np.ndarray, C: np.ndarray, alpha: np.ndarray, tol: float) -> np.ndarray:
    """Bertsekas-style projected Newton ascent on the box."""
    n = Q.shape[0]
    a = alpha.copy()
    ridge = 1e-12 * max(float(np.trace(Q)), 1.0)
    obj = a.sum() - 0.5 * float(a @ Q @ a)
    for _ in range(60):
        g = 1.0 - Q @ a
        eps_a = 1e-10 * (1.0 + np.abs(C))
        binding = ((a <= eps_a) & (g < 0)) | ((a >= C - eps_a) & (g > 0))
        pg = np.where(binding, 0.0, g)
        if np.max(np.abs(pg)) <= 0.5 * tol:
            break
        free = np.flatnonzero(~binding)
        Qff = Q[np.ix_(free, free)] + ridge * np.eye(len(free))
        try:
            d_free = np.linalg.solve(Qff, g[free])
        except np.linalg.LinAlgError:
            d_free = g[free]
        d = np.zeros(n)
        d[free] = d_free
        step = 1.0
        improved = False
        for _ in range(30):
            trial = np.clip(a + step * d, 0.0, C)
            t_obj = trial.sum() - 0.5 * float(trial @ Q @ trial)
            if t_obj > obj + 1e-4 * float(g @ (trial - a)):
                a, obj = trial, t_obj
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return a


def solve_box_qp(
    Q: Union[np.ndarray, LinearLabelOperator],
    bounds: BoxBounds,
    alpha0: Optional[np.ndarray] = None,
    tol: float = DEFAULT_TOL,
) -> DualState:
    """Maximize 1'a - 0.5 a'Qa over the box [0, C] to KKT tolerance tol.

    Deterministic: fixed ascending sweep order with shrinking of coordinates
    pinned at a bound; convergence is certified by a full unshrunk pass.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    n = Q.shape[0]
    if _is_operator(Q):
        diag = Q.diag()
    else:
        Q = np.asarray(Q, dtype=float)
        if not np.all(np.isfinite(Q)):
            raise ValueError("non-finite entries in Q")
        diag = np.diag(Q).copy()
    C = bounds.upper
    if C.shape != (n,):
        raise ValueError("bounds length mismatch")
    if alpha0 is None:
        alpha = np.zeros(n)
    else:
        alpha = np.asarray(alpha0, dtype=float).copy()
        if np.any(alpha < -1e-12) or np.any(alpha > C + 1e-12):
            raise ValueError("alpha0 infeasible")
        alpha = np.clip(alpha, 0.0, C)

    # warm phase: a second-order method gets close at BLAS speed; the
    # coordinate sweeps below then certify the KKT conditions and polish
    if n >= 50:
        if _is_operator(Q):
            alpha = _lbfgsb_warm(Q, C, alpha, tol)
        else:
            alpha = _projected_newton(Q, C, alpha, tol)

    if _is_operator(Q):
        acc = Q.accumulators(alpha)  # T x d, dense

        def grad_at(i: int) -> float:
            xi = Q.X.getrow(i)
            dots = xi @ acc.T  # 1 x T
            return 1.0 - float((Q.mu * Q.signs[:, i]) @ np.asarray(dots).ravel())

        def apply_delta(i: int, delta: float) -> None:
            xi = Q.X.getrow(i)
            cols = xi.indices
            vals = xi.data
            for t in range(acc.shape[0]):
                acc[t, cols] += delta * Q.signs[t, i] * vals
    else:
        qalpha = Q @ alpha

        def grad_at(i: int) -> float:
            return 1.0 - qalpha[i]

        def apply_delta(i: int, delta: float) -> None:
            nonlocal qalpha
            qalpha += delta * Q[:, i]

    active = np.ones(n, dtype=bool)
    sweeps = 0
    while sweeps < _MAX_SWEEPS:
        sweeps += 1
        max_pg = 0.0
        for i in range(n):
            if not active[i]:
                continue
            g = grad_at(i)
            ai = alpha[i]
            if ai <= 0 and g < 0:
                pg = 0.0
                if g < -tol:
                    active[i] = False  # pinned at lower bound
            elif ai >= C[i] and g > 0:
                pg = 0.0
                if g > tol:
                    active[i] = False  # pinned at upper bound
            else:
                pg = g
            if abs(pg) > max_pg:
                max_pg = abs(pg)
            if pg == 0.0:
                continue
            if diag[i] > 0:
                new = min(max(ai + g / diag[i], 0.0), C[i])
            else:
                new = C[i] if g > 0 else 0.0
            if new != ai:
                apply_delta(i, new - ai)
                alpha[i] = new
        if max_pg <= tol:
            if active.all():
                break
            # certify against the full coordinate set before stopping
            max_pg_all = 0.0
            for i in range(n):
                g = grad_at(i)
                pg = g
                if alpha[i] <= 0 and g < 0:
                    pg = 0.0
                elif alpha[i] >= C[i] and g > 0:
                    pg = 0.0
                max_pg_all = max(max_pg_all, abs(pg))
            if max_pg_all <= tol:
                break
            active[:] = True

    return DualState(alpha=alpha, objective=dual_objective(Q, alpha), sweeps=sweeps)
