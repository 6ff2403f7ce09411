"""Command-line front end: train, eval, benchmark, verify."""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from .data import (
    BagDataset,
    Dataset,
    ParseError,
    SplitSpec,
    make_two_gaussians,
    minmax_scale,
    parse_bags,
    parse_libsvm,
    split_dataset,
)
from .driver import TaskConfig, WellsvmModel, train
from .kernel import KernelSpec, cross_gram, gamma_heuristic
from .metrics import EvalReport, accuracy, clustering_accuracy
from .svm_dual import BoxBounds, solve_box_qp
from .verify import verify_properties


def _worker_count() -> int:
    env = os.environ.get("WELLSVM_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _resolve_kernel(args, d: Dataset) -> KernelSpec:
    if args.kernel == "linear":
        return KernelSpec("linear")
    gamma = gamma_heuristic(d, seed=args.seed)
    return KernelSpec("gaussian", args.width_mult * math.sqrt(gamma))


def _resolve_beta(mode: str, n: int) -> int:
    frac = 0.03 if mode == "balanced" else 0.3
    return int(round(frac * n))


def _task_config(args, d: Dataset) -> TaskConfig:
    return TaskConfig(
        task=args.task,
        kernel=_resolve_kernel(args, d),
        c1=args.c1,
        c2=args.c2,
        c=args.c,
        beta=_resolve_beta(args.beta_mode, d.n) if args.task == "clustering" else None,
        epsilon=args.epsilon,
        obj_decrease_threshold=args.obj_threshold,
        max_outer_iters=args.max_outer_iters,
        seed=args.seed,
    )


def _load_task_data(path: str, task: str, scale: bool):
    with open(path, "rb") as fh:
        text = fh.read()
    if task == "mil":
        bd = parse_bags(text)
        if scale:
            bd = BagDataset(minmax_scale(bd.instances), bd.bags, bd.original_order)
        return bd
    d = parse_libsvm(text)
    return minmax_scale(d) if scale else d


def _write_trace(path: str, trace) -> None:
    lines = ["iter,objective,ws_size,violation_margin,seconds"]
    for t in trace:
        lines.append(f"{t.iteration},{t.objective!r},{t.ws_size},{t.violation_margin!r},{t.seconds!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_train(args) -> int:
    try:
        data = _load_task_data(args.data, args.task, args.scale)
        base = data.instances if isinstance(data, BagDataset) else data
        cfg = _task_config(args, base)
        model, trace = train(data, cfg)
        with open(args.model, "w") as fh:
            fh.write(model.to_json() + "\n")
        if args.out:
            _write_trace(args.out, trace)
    except (OSError, ParseError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0 if model.converged else 2


def _sign(values: np.ndarray) -> np.ndarray:
    return np.where(values >= 0, 1, -1)


def cmd_eval(args) -> int:
    try:
        with open(args.model) as fh:
            model = WellsvmModel.from_json(fh.read())
        data = _load_task_data(args.data, model.task, args.scale)
        report = EvalReport(task=model.task)
        if model.task == "mil":
            preds, truth = [], []
            for b in data.bags:
                rows = data.instances.X[list(b.indices())]
                preds.append(1 if model.mil_bag_predict(rows) >= 0 else -1)
                truth.append(b.label)
            report.add_run({"bag_accuracy": accuracy(preds, truth)})
        else:
            truth = data.label_vector()
            preds = _sign(model.decision_values(data.X))
            if model.task == "clustering":
                report.add_run({"clustering_accuracy": clustering_accuracy(preds, truth)})
            else:
                report.add_run({"accuracy": accuracy(preds, truth)})
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(report.to_csv())
        print(report.to_text(), end="")
    except (OSError, ParseError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


# -- baselines --------------------------------------------------------------


def supervised_svm_decision(train_d: Dataset, kernel: KernelSpec, c1: float, X_test) -> np.ndarray:
    """Standard SVM (no offset) on the labeled rows only."""
    lab = train_d.labeled_indices
    y = np.array([train_d.labels[i] for i in lab], dtype=float)
    Xl = np.asarray(train_d.X[lab].todense())
    K = cross_gram(kernel, Xl, Xl)
    state = solve_box_qp(K * np.outer(y, y), BoxBounds.constant(c1, len(lab)))
    return cross_gram(kernel, np.asarray(X_test.todense()), Xl) @ (state.alpha * y)


def kmeans_labels(X: np.ndarray, seed: int, restarts: int = 10, max_iters: int = 100) -> np.ndarray:
    """Two-means with seeded restarts; returns ±1 labels of the best run."""
    rng = np.random.default_rng(seed)
    n = len(X)
    best_labels, best_inertia = None, np.inf
    for _ in range(restarts):
        idx = rng.permutation(n)[:2]
        centers = X[idx].astype(float)
        assign = np.zeros(n, dtype=int)
        for _ in range(max_iters):
            d0 = np.sum((X - centers[0]) ** 2, axis=1)
            d1 = np.sum((X - centers[1]) ** 2, axis=1)
            new_assign = (d1 < d0).astype(int)
            for c in (0, 1):
                members = X[new_assign == c]
                if len(members):
                    centers[c] = members.mean(axis=0)
            if np.array_equal(new_assign, assign):
                assign = new_assign
                break
            assign = new_assign
        inertia = float(np.sum(np.minimum(
            np.sum((X - centers[0]) ** 2, axis=1), np.sum((X - centers[1]) ** 2, axis=1)
        )))
        if inertia < best_inertia:
            best_inertia, best_labels = inertia, assign
    return np.where(best_labels == 0, 1, -1)


# -- benchmark ---------------------------------------------------------------


def _benchmark_ssl_run(base: Dataset, frac: float, rep_seed: int, args) -> dict[str, float]:
    train_d, test_d = split_dataset(base, SplitSpec(0.5, frac, rep_seed))
    run_args = argparse.Namespace(**vars(args))
    run_args.seed = rep_seed
    cfg = _task_config(run_args, train_d)
    model, _ = train(train_d, cfg)
    truth = test_d.label_vector()
    well = accuracy(_sign(model.decision_values(test_d.X)), truth)
    svm = accuracy(_sign(supervised_svm_decision(train_d, cfg.kernel, cfg.c1, test_d.X)), truth)
    return {"wellsvm": well, "svm": svm}


def _benchmark_clustering_run(base: Optional[Dataset], rep_seed: int, args) -> dict[str, float]:
    d = base if base is not None else make_two_gaussians(100, 4.1, rep_seed)
    truth = d.label_vector()
    hidden = Dataset(d.X, [None] * d.n)
    run_args = argparse.Namespace(**vars(args))
    run_args.seed = rep_seed
    cfg = _task_config(run_args, hidden)
    model, _ = train(hidden, cfg)
    well = clustering_accuracy(_sign(model.decision_values(hidden.X)), truth)
    km = clustering_accuracy(kmeans_labels(np.asarray(d.X.todense()), rep_seed), truth)
    return {"wellsvm": well, "kmeans": km}


def cmd_benchmark(args) -> int:
    try:
        if args.task == "mil":
            print("error: benchmark supports tasks ssl and clustering", file=sys.stderr)
            return 1
        base = None
        if args.data:
            base = _load_task_data(args.data, args.task, args.scale)
        fracs = [float(f) for f in str(args.labeled_frac).split(",")] if args.task == "ssl" else [1.0]
        if args.task == "ssl" and base is None:
            base = make_two_gaussians(400, 4.1, args.seed)

        jobs = []
        for fi, frac in enumerate(fracs):
            for rep in range(args.repeats):
                jobs.append((fi, frac, args.seed + 1000 * fi + rep))

        def run_job(job):
            _, frac, s = job
            if args.task == "ssl":
                return _benchmark_ssl_run(base, frac, s, args)
            return _benchmark_clustering_run(base, s, args)

        with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
            results = list(pool.map(run_job, jobs))

        by_key: dict[tuple[float, str], list[float]] = {}
        for job, res in zip(jobs, results):
            for method, val in res.items():
                by_key.setdefault((job[1], method), []).append(val)

        lines = ["task,labeled_frac,method,mean,std,n"]
        text = []
        for (frac, method) in sorted(by_key):
            vals = by_key[(frac, method)]
            mean = float(np.mean(vals))
            std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            lines.append(f"{args.task},{frac!r},{method},{mean!r},{std!r},{len(vals)}")
            text.append(f"frac={frac:<6g} {method:<8} {mean:.4f} ± {std:.4f} (n={len(vals)})")
        if args.out:
            with open(args.out, "w") as fh:
                fh.write("\n".join(lines) + "\n")
        print("\n".join(text))
    except (OSError, ParseError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_verify(args) -> int:
    results = verify_properties(n_sorting=args.n_sorting, n_tiny=args.n_tiny, seed=args.seed)
    all_ok = True
    for name, ok in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        all_ok = all_ok and ok
    return 0 if all_ok else 1


# -- argument parsing ---------------------------------------------------------


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--task", required=True, choices=["ssl", "mil", "clustering"])
    p.add_argument("--kernel", default="linear", choices=["linear", "gaussian"])
    p.add_argument("--width-mult", type=float, default=1.0, dest="width_mult")
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=0.1)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--beta-mode", default="balanced", choices=["balanced", "imbalanced"], dest="beta_mode")
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--obj-threshold", type=float, default=1e-3, dest="obj_threshold")
    p.add_argument("--max-outer-iters", type=int, default=50, dest="max_outer_iters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", action="store_true", help="min-max scale features to [0,1]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wellsvm", description="Weak-label SVM toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model")
    _add_train_flags(p_train)
    p_train.add_argument("--data", required=True)
    p_train.add_argument("--model", required=True, help="output model path")
    p_train.add_argument("--out", default=None, help="trace CSV path")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a model on a labeled file")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--out", default=None, help="report CSV path")
    p_eval.add_argument("--scale", action="store_true")
    p_eval.set_defaults(func=cmd_eval)

    p_bench = sub.add_parser("benchmark", help="seeded repetitions vs. a baseline")
    _add_train_flags(p_bench)
    p_bench.add_argument("--data", default=None)
    p_bench.add_argument("--out", default=None, help="report CSV path")
    p_bench.add_argument("--repeats", type=int, default=10)
    p_bench.add_argument("--labeled-frac", default="0.1", dest="labeled_frac",
                         help="comma-separated labeled fractions (ssl only)")
    p_bench.set_defaults(func=cmd_benchmark)

    p_verify = sub.add_parser("verify", help="run the tiny-instance property suite")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--n-sorting", type=int, default=100, dest="n_sorting")
    p_verify.add_argument("--n-tiny", type=int, default=10, dest="n_tiny")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
