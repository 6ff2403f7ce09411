"""Cutting-plane training driver for the three weak-label tasks, plus the
trained model object and prediction.

Each outer iteration adds one candidate labeling to the working set, solves
the restricted saddle problem (multiple label-kernel learning), derives the
quadratic score matrix from the dual variables, and generates a new candidate
by sorting. Training stops when the generated candidate is no longer an
epsilon-violated constraint, when the objective decrease falls below a
threshold, or at the iteration cap.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .data import BagDataset, Dataset, SparseVector
from .kernel import KernelSpec, cross_gram, gram, kernel_alignment
from .labelgen import (
    ClusteringBalance,
    SslBalance,
    generate_clustering,
    generate_mil,
    generate_ssl,
    selector_indicator,
)
from .mlkl import LabelCandidate, MlklResult, WorkingSet, mlkl_solve
from .oracle import enumerate_feasible
from .svm_dual import BoxBounds, solve_box_qp

# below this candidate count, the violated-label search enumerates the
# feasible set exactly instead of using the sorting heuristic
_EXACT_SEARCH_LIMIT = 4096

# with a linear kernel the Gram matrix is only materialized up to this many
# rows; above it the implicit factored operator is used instead
_LINEAR_GRAM_LIMIT = 2000

MODEL_FORMAT = "wellsvm-model"
MODEL_VERSION = 1


@dataclass
class TaskConfig:
    """Training configuration shared by the three tasks."""

    task: str  # "ssl" | "mil" | "clustering"
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec("linear"))
    c1: float = 1.0
    c2: float = 0.1
    c: float = 1.0
    beta: Optional[int] = None  # clustering only; default 0.03 * N
    epsilon: float = 1e-3
    obj_decrease_threshold: float = 1e-3
    max_outer_iters: int = 50
    seed: int = 0
    mu_tol: float = 1e-4
    qp_tol: float = 1e-4

    def __post_init__(self):
        if self.task not in ("ssl", "mil", "clustering"):
            raise ValueError(f"unknown task {self.task!r}")
        if min(self.c1, self.c2, self.c) <= 0:
            raise ValueError("C parameters must be > 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")


@dataclass
class TraceRecord:
    iteration: int
    objective: float
    ws_size: int
    violation_margin: float
    seconds: float


@dataclass
class WellsvmModel:
    """Everything needed to score a new point.

    ``support_X`` holds the rows entering the decision function; for MIL
    these are all training instances, with ``mil_meta`` mapping dual
    coordinates to instances.
    """

    task: str
    kernel: KernelSpec
    support_X: sp.csr_matrix
    alpha: np.ndarray
    candidates: list[LabelCandidate]
    mu: np.ndarray
    converged: bool
    n_features: int
    mil_meta: Optional[dict] = None  # {"p", "pos_instance_indices", "pos_bag_sizes", "neg_instance_indices", "original_order"}

    def support_coefficients(self) -> np.ndarray:
        """Per-support-row coefficient c_u with f(x) = sum_u c_u kappa(x_u, x)."""
        n_rows = self.support_X.shape[0]
        coeff = np.zeros(n_rows)
        if self.task in ("ssl", "clustering"):
            weighted = np.zeros(n_rows)
            for cand, m in zip(self.candidates, self.mu):
                weighted += m * cand.vector()
            coeff = self.alpha * weighted
        else:
            meta = self.mil_meta
            p = meta["p"]
            pos_idx = meta["pos_instance_indices"]
            neg_idx = meta["neg_instance_indices"]
            for cand, m in zip(self.candidates, self.mu):
                for bag_i, slot in enumerate(cand.selector):
                    coeff[pos_idx[slot]] += m * self.alpha[bag_i]
            for j, g in enumerate(neg_idx):
                coeff[g] -= self.alpha[p + j]
        return coeff

    def decision_values(self, X: Union[np.ndarray, sp.spmatrix]) -> np.ndarray:
        """f(x) for each row of X; missing trailing features are treated as 0."""
        if sp.issparse(X):
            X = np.asarray(X.todense())
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] < self.n_features:
            X = np.hstack([X, np.zeros((X.shape[0], self.n_features - X.shape[1]))])
        elif X.shape[1] > self.n_features:
            X = X[:, : self.n_features]
        Kx = cross_gram(self.kernel, X, np.asarray(self.support_X.todense()))
        return Kx @ self.support_coefficients()

    def predict(self, x: Union[SparseVector, np.ndarray]) -> float:
        if isinstance(x, SparseVector):
            x = x.to_dense(self.n_features)
        return float(self.decision_values(np.asarray(x, dtype=float)[None, :])[0])

    def mil_bag_predict(self, bag_rows: Union[np.ndarray, sp.spmatrix]) -> float:
        """Bag score: max over instance decision values."""
        if sp.issparse(bag_rows):
            empty = bag_rows.shape[0] == 0
        else:
            empty = len(bag_rows) == 0
        if empty:
            raise ValueError("empty bag")
        return float(self.decision_values(bag_rows).max())

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        X = self.support_X.tocsr()
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "task": self.task,
            "kernel": {"kind": self.kernel.kind, "width": self.kernel.width},
            "n_features": self.n_features,
            "converged": self.converged,
            "support": {
                "shape": list(X.shape),
                "indptr": X.indptr.tolist(),
                "indices": X.indices.tolist(),
                "data": [float(v) for v in X.data],
            },
            "alpha": [float(v) for v in self.alpha],
            "mu": [float(v) for v in self.mu],
            "candidates": [
                {"assignment": list(c.assignment)} if c.assignment is not None else {"selector": list(c.selector)}
                for c in self.candidates
            ],
            "mil_meta": self.mil_meta,
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "WellsvmModel":
        doc = json.loads(text)
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError("not a wellsvm model document")
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')}")
        sup = doc["support"]
        X = sp.csr_matrix(
            (np.array(sup["data"]), np.array(sup["indices"]), np.array(sup["indptr"])),
            shape=tuple(sup["shape"]),
        )
        kern = doc["kernel"]
        cands = []
        for c in doc["candidates"]:
            if "assignment" in c:
                cands.append(LabelCandidate.from_assignment(c["assignment"]))
            else:
                cands.append(LabelCandidate.from_selector(c["selector"]))
        meta = doc.get("mil_meta")
        return WellsvmModel(
            task=doc["task"],
            kernel=KernelSpec(kern["kind"], kern["width"]),
            support_X=X,
            alpha=np.array(doc["alpha"], dtype=float),
            candidates=cands,
            mu=np.array(doc["mu"], dtype=float),
            converged=doc["converged"],
            n_features=doc["n_features"],
            mil_meta=meta,
        )


# -- initialization -------------------------------------------------------


def initialize_ssl(d: Dataset, cfg: TaskConfig) -> LabelCandidate:
    """Supervised SVM on the labeled rows; its decision values on the
    unlabeled rows are projected onto the balanced candidate set."""
    lab = d.labeled_indices
    unl = d.unlabeled_indices
    y_l = np.array([d.labels[i] for i in lab], dtype=int)
    if len(set(y_l.tolist())) < 2 and len(unl) > 0:
        raise ValueError("need at least one labeled example per class")
    balance = SslBalance(tuple(y_l.tolist()), tuple(int(i) for i in lab), d.n)
    if len(unl) == 0:
        return generate_ssl(np.zeros(0), balance)
    Xl = np.asarray(d.X[lab].todense())
    Kll = cross_gram(cfg.kernel, Xl, Xl)
    Q = Kll * np.outer(y_l, y_l)
    state = solve_box_qp(Q, BoxBounds.constant(cfg.c1, len(lab)))
    Xu = np.asarray(d.X[unl].todense())
    f_u = cross_gram(cfg.kernel, Xu, Xl) @ (state.alpha * y_l)
    return generate_ssl(f_u, balance)


def random_balanced_assignment(n: int, beta: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform ±1 draw, then flip majority-sign coordinates until |sum| <= beta."""
    y = np.where(rng.random(n) < 0.5, -1, 1).astype(int)
    s = int(y.sum())
    while abs(s) > beta:
        sign = 1 if s > 0 else -1
        pool = np.flatnonzero(y == sign)
        pick = pool[int(rng.integers(len(pool)))]
        y[pick] = -sign
        s -= 2 * sign
    return y


def initialize_clustering(d: Dataset, cfg: TaskConfig, K: Optional[np.ndarray] = None, n_random: int = 20) -> LabelCandidate:
    """Best of n_random balance-feasible random assignments by kernel alignment."""
    beta = cfg.beta if cfg.beta is not None else int(round(0.03 * d.n))
    rng = np.random.default_rng(cfg.seed)
    if K is None:
        K = gram(d, cfg.kernel)
    best, best_align = None, -np.inf
    for _ in range(n_random):
        y = random_balanced_assignment(d.n, beta, rng)
        a = kernel_alignment(K, y)
        if a > best_align:
            best, best_align = y, a
    return LabelCandidate.from_assignment(best)


def initialize_mil(bd: BagDataset, cfg: TaskConfig) -> LabelCandidate:
    """Per positive bag, pick the instance farthest (mean feature-space
    distance) from the negative-instance centroid; deterministic."""
    pos_bags = bd.positive_bags
    neg_idx = bd.negative_instance_indices
    if not pos_bags or len(neg_idx) == 0:
        raise ValueError("need at least one positive and one negative bag")
    X = np.asarray(bd.instances.X.todense())
    Xneg = X[neg_idx]
    selector = []
    slot = 0
    for b in pos_bags:
        Xb = X[list(b.indices())]
        self_k = np.array([float(cross_gram(cfg.kernel, Xb[j : j + 1], Xb[j : j + 1])[0, 0]) for j in range(b.size)])
        mean_cross = cross_gram(cfg.kernel, Xb, Xneg).mean(axis=1)
        score = self_k - 2.0 * mean_cross  # monotone in distance to the centroid
        selector.append(slot + int(np.argmax(score)))
        slot += b.size
    return LabelCandidate.from_selector(selector)


# -- training -------------------------------------------------------------


@dataclass
class _QuadForms:
    """Quadratic forms y'Hy and scores r = H ybar with H = K ⊙ (a a'),
    computed without materializing H in linear mode."""

    alpha: np.ndarray
    K: Optional[np.ndarray]
    X: Optional[sp.csr_matrix]

    def quad(self, y: np.ndarray) -> float:
        v = self.alpha * y
        if self.K is not None:
            return float(v @ self.K @ v)
        o = self.X.T @ v
        return float(o @ o)

    def cross(self, y1: np.ndarray, y2: np.ndarray) -> float:
        v1 = self.alpha * y1
        v2 = self.alpha * y2
        if self.K is not None:
            return float(v1 @ self.K @ v2)
        return float((self.X.T @ v1) @ (self.X.T @ v2))

    def scores(self, ybar: np.ndarray) -> np.ndarray:
        v = self.alpha * ybar
        if self.K is not None:
            return self.alpha * (self.K @ v)
        return self.alpha * (self.X @ (self.X.T @ v))

    def principal_direction(self) -> np.ndarray:
        """Unit leading eigenvector of H = K ⊙ (a a'); in linear mode via
        deterministic power iteration on the d x d factor."""
        if self.K is not None:
            H = self.K * np.outer(self.alpha, self.alpha)
            _, vecs = np.linalg.eigh(H)
            return vecs[:, -1]
        Xa = sp.diags(self.alpha) @ self.X  # H = Xa Xa'
        d = Xa.shape[1]
        v = np.full(d, 1.0 / np.sqrt(d))
        for _ in range(100):
            w = Xa.T @ (Xa @ v)
            nrm = np.linalg.norm(w)
            if nrm == 0.0:
                break
            v = w / nrm
        u = Xa @ v
        nrm = np.linalg.norm(u)
        return u / nrm if nrm > 0 else np.asarray(u)


def _solve_restricted(ws, gram_for, bounds, alpha0, linear_features, prev_obj: float, cfg: TaskConfig) -> MlklResult:
    """One restricted saddle solve, retried at tighter tolerances if the
    reported value fails to stay below the previous iteration's."""
    tol = cfg.mu_tol
    # the multiplicative mu update converges only linearly near a vertex of
    # the simplex (mlkl_solve covers vertices directly), so tight tolerances
    # get a moderately higher cap only
    cap = 100 if tol >= 1e-6 else 500
    res = mlkl_solve(ws, gram_for, bounds, tol=tol, max_outer=cap, qp_tol=cfg.qp_tol,
                     alpha0=alpha0, linear_features=linear_features)
    attempts = 0
    while res.state.objective > prev_obj + 1e-10 and attempts < 3:
        tol *= 0.01
        retry = mlkl_solve(
            res.ws, gram_for, bounds, tol=tol, max_outer=max(cap, 300),
            qp_tol=min(cfg.qp_tol, 1e-6), alpha0=res.state.alpha, linear_features=linear_features,
        )
        if retry.state.objective < res.state.objective:
            res = retry
        attempts += 1
    return res


def _train_assignment_task(d: Dataset, cfg: TaskConfig) -> tuple[WellsvmModel, list[TraceRecord]]:
    """Shared SSL / clustering loop (candidates are ±1 assignments)."""
    n = d.n
    linear = cfg.kernel.kind == "linear" and n > _LINEAR_GRAM_LIMIT
    K = None if linear else gram(d, cfg.kernel)
    X = d.X if linear else None

    if cfg.task == "ssl":
        lab = d.labeled_indices
        unl = d.unlabeled_indices
        y_l = tuple(int(d.labels[i]) for i in lab)
        balance = SslBalance(y_l, tuple(int(i) for i in lab), n)
        bounds_upper = np.empty(n)
        bounds_upper[lab] = cfg.c1
        bounds_upper[unl] = cfg.c2
        bounds = BoxBounds(bounds_upper)
        cand0 = initialize_ssl(d, cfg)
    else:
        beta = cfg.beta if cfg.beta is not None else int(round(0.03 * n))
        balance = ClusteringBalance(beta, n)
        bounds = BoxBounds.constant(cfg.c, n)
        cand0 = initialize_clustering(d, cfg, K=K if K is not None else gram(d, cfg.kernel))

    def gram_for(cand: LabelCandidate) -> np.ndarray:
        y = cand.vector()
        return K * np.outer(y, y)

    def generate(r_full: np.ndarray) -> LabelCandidate:
        if cfg.task == "ssl":
            return generate_ssl(r_full[unl], balance)
        return generate_clustering(r_full, balance.beta)

    if cfg.task == "ssl":
        count = math.comb(len(unl), balance.negatives_needed())
    else:
        count = 2**n
    exact_set = enumerate_feasible(balance) if count <= _EXACT_SEARCH_LIMIT else None

    ws = WorkingSet()
    ws.add(cand0)
    trace: list[TraceRecord] = []
    alpha = None
    prev_obj = np.inf
    converged = False
    t0 = time.perf_counter()
    for it in range(1, cfg.max_outer_iters + 1):
        res = _solve_restricted(ws, gram_for if not linear else None, bounds, alpha, X, prev_obj, cfg)
        ws = res.ws
        alpha = res.state.alpha
        obj = res.state.objective

        qf = _QuadForms(alpha=alpha, K=K, X=X)
        # incumbent: working-set member with the largest quadratic score
        quads = [qf.quad(c.vector()) for c in ws.candidates]

        # candidate search: iterated re-linearization (each step exact by
        # sorting) from every working-set anchor plus a spectral anchor
        def refine(cand: LabelCandidate) -> tuple[LabelCandidate, float]:
            q = qf.quad(cand.vector())
            for _ in range(30):
                nxt = generate(qf.scores(cand.vector()))
                qn = qf.quad(nxt.vector())
                if qn <= q + 1e-12:
                    break
                cand, q = nxt, qn
            return cand, q

        if exact_set is not None:
            cand_new, best_quad = None, -np.inf
            for cand in exact_set:
                qv = qf.quad(cand.vector())
                if qv > best_quad:
                    cand_new, best_quad = cand, qv
        else:
            u = qf.principal_direction()
            cvec = ws.mu @ np.stack([c.vector() for c in ws.candidates])
            starts = list(ws.candidates) + [
                generate(u),
                generate(-u),
                generate(qf.scores(cvec)),
            ]
            # opposite-direction anchors escape sign-flipped local optima
            starts.extend(generate(-qf.scores(c.vector())) for c in ws.candidates)
            cand_new, best_quad = None, -np.inf
            for start in starts:
                cand, qv = refine(start)
                if qv > best_quad:
                    cand_new, best_quad = cand, qv

        sum_alpha = float(alpha.sum())
        min_g = sum_alpha - 0.5 * max(quads)
        g_star = sum_alpha - 0.5 * best_quad
        margin = min_g - g_star
        trace.append(TraceRecord(it, obj, len(ws), margin, time.perf_counter() - t0))

        if it >= 2 and prev_obj - obj < cfg.obj_decrease_threshold:
            converged = True
            break
        prev_obj = obj
        if margin <= cfg.epsilon:
            converged = True
            break
        if best_quad <= max(quads) + 1e-9 or cand_new in ws:
            converged = True
            break
        ws.add(cand_new)
    model = WellsvmModel(
        task=cfg.task,
        kernel=cfg.kernel,
        support_X=d.X.tocsr(),
        alpha=alpha,
        candidates=list(ws.candidates),
        mu=ws.mu.copy(),
        converged=converged,
        n_features=d.n_features,
    )
    return model, trace


def _train_mil(bd: BagDataset, cfg: TaskConfig) -> tuple[WellsvmModel, list[TraceRecord]]:
    pos_bags = bd.positive_bags
    p = len(pos_bags)
    neg_idx = bd.negative_instance_indices
    q = p + len(neg_idx)
    pos_instance_indices = [int(i) for b in pos_bags for i in b.indices()]
    pos_bag_sizes = [b.size for b in pos_bags]
    Jp = len(pos_instance_indices)

    Kinst = gram(bd.instances, cfg.kernel)
    yhat = np.concatenate([np.ones(p), -np.ones(q - p)])
    bounds = BoxBounds.two_level(cfg.c1, cfg.c2, p, q - p)
    count = math.prod(pos_bag_sizes)
    exact_set = enumerate_feasible(pos_bag_sizes) if count <= _EXACT_SEARCH_LIMIT else None

    def rep_indices(cand: LabelCandidate) -> np.ndarray:
        chosen = [pos_instance_indices[slot] for slot in cand.selector]
        return np.array(chosen + list(neg_idx), dtype=int)

    def gram_for(cand: LabelCandidate) -> np.ndarray:
        rep = rep_indices(cand)
        Ks = Kinst[np.ix_(rep, rep)]
        return Ks * np.outer(yhat, yhat)

    def g_value(alpha: np.ndarray, cand: LabelCandidate) -> float:
        v = alpha * yhat
        rep = rep_indices(cand)
        return float(alpha.sum()) - 0.5 * float(v @ Kinst[np.ix_(rep, rep)] @ v)

    ws = WorkingSet()
    ws.add(initialize_mil(bd, cfg))
    trace: list[TraceRecord] = []
    alpha = None
    prev_obj = np.inf
    converged = False
    t0 = time.perf_counter()
    for it in range(1, cfg.max_outer_iters + 1):
        res = _solve_restricted(ws, gram_for, bounds, alpha, None, prev_obj, cfg)
        ws = res.ws
        alpha = res.state.alpha
        obj = res.state.objective

        # H over positive-bag instance slots; tau from the negative side
        a_slot = np.repeat(alpha[:p], pos_bag_sizes)  # alpha_i per slot v=(i,j)
        Kpos = Kinst[np.ix_(pos_instance_indices, pos_instance_indices)]
        H = Kpos * np.outer(a_slot, a_slot)
        Kpn = Kinst[np.ix_(pos_instance_indices, neg_idx)]
        tau = -2.0 * a_slot * (Kpn @ alpha[p:])

        # candidate search on F(s) = s'Hs + tau's: iterated re-linearization
        # (per-bag argmax each step) from working-set and spectral anchors
        def f_score(cand: LabelCandidate) -> float:
            s = selector_indicator(cand, Jp)
            return float(s @ H @ s) + float(tau @ s)

        def refine(cand: LabelCandidate) -> tuple[LabelCandidate, float]:
            fv = f_score(cand)
            for _ in range(30):
                s = selector_indicator(cand, Jp)
                nxt = generate_mil(H @ s + 0.5 * tau, pos_bag_sizes)
                fn = f_score(nxt)
                if fn <= fv + 1e-12:
                    break
                cand, fv = nxt, fn
            return cand, fv

        if exact_set is not None:
            cand_new, best_f = None, -np.inf
            for cand in exact_set:
                fv = f_score(cand)
                if fv > best_f:
                    cand_new, best_f = cand, fv
        else:
            _, vecs = np.linalg.eigh(H)
            u = vecs[:, -1]
            starts = list(ws.candidates) + [
                generate_mil(u + 0.5 * tau, pos_bag_sizes),
                generate_mil(-u + 0.5 * tau, pos_bag_sizes),
                generate_mil(0.5 * tau, pos_bag_sizes),
            ]
            cand_new, best_f = None, -np.inf
            for start in starts:
                cand, fv = refine(start)
                if fv > best_f:
                    cand_new, best_f = cand, fv

        f_vals = [f_score(c) for c in ws.candidates]
        g_vals = [g_value(alpha, c) for c in ws.candidates]
        min_g = min(g_vals)
        g_star = g_value(alpha, cand_new)
        margin = min_g - g_star
        trace.append(TraceRecord(it, obj, len(ws), margin, time.perf_counter() - t0))

        if it >= 2 and prev_obj - obj < cfg.obj_decrease_threshold:
            converged = True
            break
        prev_obj = obj
        if margin <= cfg.epsilon:
            converged = True
            break
        if best_f <= max(f_vals) + 1e-9 or cand_new in ws:
            converged = True
            break
        ws.add(cand_new)

    model = WellsvmModel(
        task="mil",
        kernel=cfg.kernel,
        support_X=bd.instances.X.tocsr(),
        alpha=alpha,
        candidates=list(ws.candidates),
        mu=ws.mu.copy(),
        converged=converged,
        n_features=bd.instances.n_features,
        mil_meta={
            "p": p,
            "pos_instance_indices": pos_instance_indices,
            "pos_bag_sizes": pos_bag_sizes,
            "neg_instance_indices": [int(i) for i in neg_idx],
            "original_order": list(bd.original_order),
        },
    )
    return model, trace


def train(data: Union[Dataset, BagDataset], cfg: TaskConfig) -> tuple[WellsvmModel, list[TraceRecord]]:
    """Train a weak-label SVM; returns the model and the per-iteration trace."""
    if cfg.task == "mil":
        if not isinstance(data, BagDataset):
            raise TypeError("MIL task requires a BagDataset")
        return _train_mil(data, cfg)
    if not isinstance(data, Dataset):
        raise TypeError(f"{cfg.task} task requires a Dataset")
    return _train_assignment_task(data, cfg)
