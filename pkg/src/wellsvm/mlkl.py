"""Multiple label-kernel learning over a working set of candidate labelings.

Alternates a box-QP solve on the composite kernel with the closed-form
simplex-weight update mu_t = ||w_t|| / sum ||w_t'||, where
||w_t||^2 = mu_t^2 * a'Q_t a and Q_t is the label kernel of candidate t.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .svm_dual import BoxBounds, DualState, LinearLabelOperator, solve_box_qp

MU_TOL = 1e-4
MAX_OUTER = 100


@dataclass(frozen=True)
class LabelCandidate:
    """One working-set member: a ±1 assignment, or a key-instance selector.

    SSL/clustering candidates carry ``assignment`` (length-n ±1 vector);
    MIL candidates carry ``selector`` (one global instance index per
    positive bag).
    """

    assignment: Optional[tuple[int, ...]] = None
    selector: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if (self.assignment is None) == (self.selector is None):
            raise ValueError("exactly one of assignment/selector must be set")
        if self.assignment is not None:
            if any(v not in (+1, -1) for v in self.assignment):
                raise ValueError("assignment entries must be ±1")

    @staticmethod
    def from_assignment(y: Sequence[int]) -> "LabelCandidate":
        return LabelCandidate(assignment=tuple(int(v) for v in y))

    @staticmethod
    def from_selector(s: Sequence[int]) -> "LabelCandidate":
        return LabelCandidate(selector=tuple(int(v) for v in s))

    def vector(self) -> np.ndarray:
        if self.assignment is None:
            raise ValueError("MIL candidate has no ±1 assignment")
        return np.array(self.assignment, dtype=float)


class WorkingSet:
    """Ordered candidates plus their simplex weights mu."""

    def __init__(self, candidates: Sequence[LabelCandidate] = (), mu: Optional[np.ndarray] = None):
        self.candidates: list[LabelCandidate] = list(candidates)
        if mu is None:
            t = len(self.candidates)
            self.mu = np.full(t, 1.0 / t) if t else np.zeros(0)
        else:
            self.mu = np.asarray(mu, dtype=float).copy()
        self._check()

    def _check(self):
        if len(self.mu) != len(self.candidates):
            raise ValueError("mu/candidate length mismatch")
        if len(self.candidates) != len(set(self.candidates)):
            raise ValueError("duplicate candidate in working set")
        if len(self.mu) and (abs(self.mu.sum() - 1.0) > 1e-9 or np.any(self.mu < -1e-12)):
            raise ValueError("mu must lie on the simplex")

    def __len__(self) -> int:
        return len(self.candidates)

    def __contains__(self, cand: LabelCandidate) -> bool:
        return cand in self.candidates

    def add(self, cand: LabelCandidate) -> None:
        """Append a candidate; new weight 1/|C|, old weights scaled by (|C|-1)/|C|."""
        if cand in self.candidates:
            raise ValueError("candidate already in working set")
        t = len(self.candidates) + 1
        self.mu = np.append(self.mu * (t - 1) / t, 1.0 / t)
        self.candidates.append(cand)


GramProvider = Callable[[LabelCandidate], Union[np.ndarray, sp.csr_matrix]]


@dataclass
class MlklResult:
    ws: WorkingSet
    state: DualState
    converged: bool
    degenerate: bool = False
    outer_iters: int = 0


def _composite(kernels: list[np.ndarray], mu: np.ndarray) -> np.ndarray:
    out = np.zeros_like(kernels[0])
    for K, m in zip(kernels, mu):
        if m != 0.0:
            out += m * K
    return out


def mlkl_objective(kernels: Sequence[np.ndarray], mu: np.ndarray, alpha: np.ndarray) -> float:
    """1'a - 0.5 a'(sum_t mu_t Q_t)a."""
    alpha = np.asarray(alpha, dtype=float)
    quad = sum(m * float(alpha @ K @ alpha) for K, m in zip(kernels, mu))
    return float(alpha.sum()) - 0.5 * quad


def mu_update(mu: np.ndarray, quads: np.ndarray) -> tuple[np.ndarray, bool]:
    """Closed-form simplex step: mu_t <- ||w_t|| / sum_t' ||w_t'||.

    ``quads`` holds a'Q_t a per candidate, so ||w_t||^2 = mu_t^2 * quads_t.
    Returns (new mu, degenerate); degenerate means every norm vanished and
    mu is returned unchanged.
    """
    mu = np.asarray(mu, dtype=float)
    norms = np.sqrt(np.maximum(mu**2 * np.asarray(quads, dtype=float), 0.0))
    total = norms.sum()
    if total <= 0.0:
        return mu.copy(), True
    return norms / total, False


def mlkl_solve(
    ws: WorkingSet,
    gram_for: GramProvider,
    bounds: BoxBounds,
    tol: float = MU_TOL,
    max_outer: int = MAX_OUTER,
    qp_tol: float = 1e-4,
    alpha0: Optional[np.ndarray] = None,
    linear_features: Optional[sp.csr_matrix] = None,
) -> MlklResult:
    """Solve the saddle problem over the working set's label kernels.

    ``gram_for`` maps each candidate to its (psd) label kernel; for SSL and
    clustering this is K ⊙ y y', for MIL the representative-instance Gram
    with bag signs applied. In linear mode pass ``linear_features`` and
    assignment candidates instead; no kernel is materialized.
    """
    if len(ws) == 0:
        raise ValueError("working set is empty")
    mu = ws.mu.copy()
    linear = linear_features is not None
    if linear:
        signs = [c.vector() for c in ws.candidates]
        X = sp.csr_matrix(linear_features)
        kernels: list[np.ndarray] = []
    else:
        kernels = [np.asarray(gram_for(c), dtype=float) for c in ws.candidates]

    def composite(mu_vec):
        if linear:
            return LinearLabelOperator(X, signs, mu_vec)
        return _composite(kernels, mu_vec)

    def candidate_quads(a):
        """Per-candidate quadratic forms a'Q_t a."""
        if linear:
            acc = LinearLabelOperator(X, signs, mu).accumulators(a)
            return np.einsum("td,td->t", acc, acc)
        return np.array([float(a @ K @ a) for K in kernels])

    def full_solve(mu_vec, a0):
        state = solve_box_qp(composite(mu_vec), bounds, alpha0=a0, tol=qp_tol)
        quad = candidate_quads(state.alpha)
        return (state.objective, mu_vec.copy(), state.alpha.copy(), mu_vec**2 * quad, state.sweeps)

    alpha = alpha0
    degenerate = False
    converged = False
    outer = 0

    if len(ws) == 1:
        # single label kernel: the saddle problem is one box QP
        best = full_solve(mu, alpha)
        return MlklResult(
            ws=WorkingSet(ws.candidates, best[1]),
            state=DualState(alpha=best[2], objective=best[0], per_candidate_norms=best[3], sweeps=best[4]),
            converged=True,
            degenerate=False,
            outer_iters=1,
        )

    # mu alternation with a loosely solved inner QP; accuracy comes from the
    # polished solves below
    inner_tol = max(qp_tol, 1e-2)
    for outer in range(1, max_outer + 1):
        state = solve_box_qp(composite(mu), bounds, alpha0=alpha, tol=inner_tol)
        alpha = state.alpha
        new_mu, degenerate = mu_update(mu, candidate_quads(alpha))
        if degenerate:
            converged = True
            break
        delta = float(np.max(np.abs(new_mu - mu)))
        mu = new_mu
        if delta < tol:
            converged = True
            break

    best = full_solve(mu, alpha)
    alpha = best[2]

    # the multiplicative update approaches simplex vertices only linearly, so
    # when the optimum puts all weight on one candidate the loop can stall:
    # check vertices whose value at the polished alpha leaves room to improve
    quads = candidate_quads(alpha)
    g_at_alpha = float(alpha.sum()) - 0.5 * quads
    for t in range(len(ws)):
        if g_at_alpha[t] >= best[0] - 10.0 * qp_tol:
            continue
        if linear:
            Q_t = LinearLabelOperator(X, [signs[t]], np.array([1.0]))
        else:
            Q_t = kernels[t]
        st = solve_box_qp(Q_t, bounds, alpha0=alpha, tol=qp_tol)
        if st.objective < best[0]:
            mu_v = np.zeros(len(ws))
            mu_v[t] = 1.0
            if linear:
                o = X.T @ (st.alpha * signs[t])
                quad_t = float(o @ o)
            else:
                quad_t = float(st.alpha @ kernels[t] @ st.alpha)
            norms_v = np.zeros(len(ws))
            norms_v[t] = quad_t
            best = (st.objective, mu_v, st.alpha.copy(), norms_v, st.sweeps)

    obj, best_mu, best_alpha, norms_sq, sweeps = best
    out_ws = WorkingSet(ws.candidates, best_mu)
    state = DualState(alpha=best_alpha, objective=obj, per_candidate_norms=norms_sq, sweeps=sweeps)
    return MlklResult(ws=out_ws, state=state, converged=converged, degenerate=degenerate, outer_iters=outer)
