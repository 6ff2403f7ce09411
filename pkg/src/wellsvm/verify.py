"""Seeded tiny-instance generators and property checks.

These drive the `wellsvm verify` subcommand and the acceptance test suite:
sorting-based label generation against exhaustive search, the trained
objective against the exhaustive mixed-integer value, the epsilon-global
termination certificate, and trace monotonicity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp

from .data import Bag, BagDataset, Dataset
from .driver import TaskConfig, TraceRecord, train
from .kernel import KernelSpec, gram
from .labelgen import (
    ClusteringBalance,
    SslBalance,
    generate_clustering,
    generate_mil,
    generate_ssl,
)
from .mlkl import LabelCandidate
from .oracle import enumerate_feasible, lp_solve_exhaustive, mip_solve
from .svm_dual import BoxBounds


# -- sorting exactness ------------------------------------------------------


def sorting_check(task: str, seed: int) -> tuple[float, float]:
    """One random small instance: (sorting-generated score, exhaustive score)."""
    rng = np.random.default_rng(seed)
    if task == "ssl":
        n = int(rng.integers(6, 13))
        l = int(rng.integers(2, 5))
        y_l = np.concatenate([[1, -1], np.where(rng.random(max(l - 2, 0)) < 0.5, -1, 1)])[:l]
        lab_idx = np.sort(rng.permutation(n)[:l])
        balance = SslBalance(tuple(int(v) for v in y_l), tuple(int(i) for i in lab_idx), n)
        r = rng.standard_normal(n - l)
        cand = generate_ssl(r, balance)
        unl = [i for i in range(n) if i not in set(lab_idx)]
        got = float(r @ cand.vector()[unl])
        _, best = lp_solve_exhaustive(r, enumerate_feasible(balance), unlabeled_only=unl)
        return got, best
    if task == "clustering":
        beta = int(rng.integers(0, 3))
        n = int(rng.integers(4, 13))
        if beta < n % 2:
            n += 1
        r = rng.standard_normal(n)
        cand = generate_clustering(r, beta)
        got = float(r @ cand.vector())
        _, best = lp_solve_exhaustive(r, enumerate_feasible(ClusteringBalance(beta, n)))
        return got, best
    if task == "mil":
        n_bags = int(rng.integers(1, 4))
        sizes = [int(rng.integers(1, 5)) for _ in range(n_bags)]
        r = rng.standard_normal(sum(sizes))
        cand = generate_mil(r, sizes)
        got = float(sum(r[i] for i in cand.selector))
        _, best = lp_solve_exhaustive(r, enumerate_feasible(sizes))
        return got, best
    raise ValueError(f"unknown task {task!r}")


# -- tiny end-to-end instances ---------------------------------------------


@dataclass
class TinyInstance:
    task: str
    data: Union[Dataset, BagDataset]
    cfg: TaskConfig
    gram_for: Callable[[LabelCandidate], np.ndarray]
    bounds: BoxBounds
    feasible: list[LabelCandidate]


def _tiny_kernel(rng: np.random.Generator) -> KernelSpec:
    if rng.random() < 0.5:
        return KernelSpec("linear")
    return KernelSpec("gaussian", float(rng.uniform(0.7, 2.0)))


def _tight_cfg(task: str, kernel: KernelSpec, seed: int, **kw) -> TaskConfig:
    return TaskConfig(
        task=task,
        kernel=kernel,
        seed=seed,
        epsilon=1e-7,
        obj_decrease_threshold=1e-10,
        mu_tol=1e-7,
        qp_tol=1e-9,
        **kw,
    )


def tiny_instance(task: str, seed: int) -> TinyInstance:
    """A random enumerable problem with the exact training-time kernels."""
    rng = np.random.default_rng(seed)
    kernel = _tiny_kernel(rng)
    if task == "ssl":
        n = 8
        X = rng.standard_normal((n, 2))
        X[: n // 2, 0] += 1.5
        labels: list[Optional[int]] = [None] * n
        labels[0] = +1
        labels[n // 2] = -1
        labels[int(rng.integers(n // 2 + 1, n))] = int(rng.choice([-1, 1]))
        d = Dataset(sp.csr_matrix(X), labels)
        cfg = _tight_cfg("ssl", kernel, seed, c1=1.0, c2=0.5)
        lab = d.labeled_indices
        balance = SslBalance(
            tuple(int(d.labels[i]) for i in lab), tuple(int(i) for i in lab), n
        )
        K = gram(d, kernel)
        upper = np.empty(n)
        upper[lab] = cfg.c1
        upper[d.unlabeled_indices] = cfg.c2
        bounds = BoxBounds(upper)
        gram_for = lambda c: K * np.outer(c.vector(), c.vector())
        feasible = enumerate_feasible(balance)
    elif task == "clustering":
        beta = int(rng.integers(0, 3))
        n = 6 if beta != 1 else 7
        X = rng.standard_normal((n, 2))
        X[: n // 2] += 1.2
        d = Dataset(sp.csr_matrix(X), [None] * n)
        cfg = _tight_cfg("clustering", kernel, seed, c=1.0, beta=beta)
        K = gram(d, kernel)
        bounds = BoxBounds.constant(cfg.c, n)
        gram_for = lambda c: K * np.outer(c.vector(), c.vector())
        feasible = enumerate_feasible(ClusteringBalance(beta, n))
    elif task == "mil":
        sizes_pos = [int(rng.integers(2, 4)) for _ in range(2)]
        sizes_neg = [2, 2]
        rows = []
        bags = []
        start = 0
        for m in sizes_pos:
            rows.append(rng.standard_normal((m, 2)) + [1.5, 0.0])
            bags.append(Bag(start, start + m, +1))
            start += m
        for m in sizes_neg:
            rows.append(rng.standard_normal((m, 2)) - [1.5, 0.0])
            bags.append(Bag(start, start + m, -1))
            start += m
        X = np.vstack(rows)
        inst = Dataset(sp.csr_matrix(X), [None] * len(X))
        bd = BagDataset(inst, bags)
        cfg = _tight_cfg("mil", kernel, seed, c1=1.0, c2=0.5)
        Kinst = gram(inst, kernel)
        p = len(sizes_pos)
        q = p + sum(sizes_neg)
        yhat = np.concatenate([np.ones(p), -np.ones(q - p)])
        pos_idx = [int(i) for b in bd.positive_bags for i in b.indices()]
        neg_idx = list(bd.negative_instance_indices)

        def gram_for(c: LabelCandidate) -> np.ndarray:
            rep = np.array([pos_idx[s] for s in c.selector] + neg_idx, dtype=int)
            return Kinst[np.ix_(rep, rep)] * np.outer(yhat, yhat)

        bounds = BoxBounds.two_level(cfg.c1, cfg.c2, p, q - p)
        feasible = enumerate_feasible(sizes_pos)
        return TinyInstance("mil", bd, cfg, gram_for, bounds, feasible)
    else:
        raise ValueError(f"unknown task {task!r}")
    return TinyInstance(task, d, cfg, gram_for, bounds, feasible)


@dataclass
class TinyResult:
    p_star: float
    p_mip: float
    min_g_full: float
    min_g_ws: float
    trace: list[TraceRecord]


def g_value(alpha: np.ndarray, Q: np.ndarray) -> float:
    """G(alpha, y) = 1'a - 0.5 a'Q a with Q the candidate's label kernel."""
    return float(alpha.sum()) - 0.5 * float(alpha @ Q @ alpha)


def run_tiny(inst: TinyInstance) -> TinyResult:
    """Train on a tiny instance and evaluate it against exhaustive search."""
    model, trace = train(inst.data, inst.cfg)
    p_star = trace[-1].objective
    _, p_mip = mip_solve(inst.gram_for, inst.bounds, inst.feasible)
    g_full = [g_value(model.alpha, inst.gram_for(c)) for c in inst.feasible]
    g_ws = [g_value(model.alpha, inst.gram_for(c)) for c in model.candidates]
    return TinyResult(p_star, p_mip, min(g_full), min(g_ws), trace)


def trace_monotone(trace: list[TraceRecord], tol: float = 1e-8) -> bool:
    objs = [t.objective for t in trace]
    return all(b <= a + tol for a, b in zip(objs, objs[1:]))


# -- aggregate checks for the CLI -------------------------------------------


def verify_properties(n_sorting: int = 100, n_tiny: int = 10, seed: int = 0) -> list[tuple[str, bool]]:
    """Run the scaled-down property suite; returns (name, passed) pairs."""
    sorting_ok = True
    for task in ("ssl", "clustering", "mil"):
        for k in range(n_sorting):
            got, best = sorting_check(task, seed * 100_003 + k)
            if abs(got - best) > 1e-12:
                sorting_ok = False
    sandwich_ok = certificate_ok = monotone_ok = True
    for task in ("ssl", "clustering", "mil"):
        for k in range(n_tiny):
            res = run_tiny(tiny_instance(task, seed * 100_003 + k))
            if res.p_star > res.p_mip + 1e-6:
                sandwich_ok = False
            if res.min_g_full < res.min_g_ws - 1e-3:
                certificate_ok = False
            if not trace_monotone(res.trace) or len(res.trace) > 50:
                monotone_ok = False
    return [
        ("sorting-exactness", sorting_ok),
        ("relaxation-sandwich", sandwich_ok),
        ("termination-certificate", certificate_ok),
        ("monotone-trace", monotone_ok),
    ]
