"""Evaluation measures: accuracy, clustering accuracy, ROI success rates,
and a small report container with CSV / text serialization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def accuracy(pred, truth) -> float:
    pred = np.asarray(pred, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError("prediction/truth length mismatch")
    if len(pred) == 0:
        raise ValueError("empty vectors")
    return float(np.mean(pred == truth))


def clustering_accuracy(pred, truth) -> float:
    """Binary clustering is invariant to which cluster is called positive.

    Computed from the integer match count so that flipping ``pred`` yields
    exactly the same float.
    """
    pred = np.asarray(pred, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError("prediction/truth length mismatch")
    if len(pred) == 0:
        raise ValueError("empty vectors")
    matches = int(np.sum(pred == truth))
    return max(matches, len(pred) - matches) / len(pred)


def roi_success_rates(n_successes: int, n_relevant: int, n_predicted_relevant: int) -> tuple[float, float, float]:
    """(rate over relevant images, rate over predicted ROIs, combined rate).

    The combined rate is 2*successes / (relevant + predicted), the harmonic
    mean of the first two when both are positive. 0/0 is taken as 0.
    """
    if min(n_successes, n_relevant, n_predicted_relevant) < 0:
        raise ValueError("counts must be nonnegative")
    if n_successes > min(n_relevant, n_predicted_relevant):
        raise ValueError("successes cannot exceed either count")

    def ratio(a: float, b: float) -> float:
        return a / b if b > 0 else 0.0

    rate_relevant = ratio(n_successes, n_relevant)
    rate_roi = ratio(n_successes, n_predicted_relevant)
    success_rate = ratio(2.0 * n_successes, n_relevant + n_predicted_relevant)
    return rate_relevant, rate_roi, success_rate


@dataclass
class EvalReport:
    """Named metrics with per-run values across repeated trials."""

    task: str
    runs: dict[str, list[float]] = field(default_factory=dict)

    def add_run(self, values: dict[str, float]) -> None:
        for name, v in values.items():
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"metric {name} out of [0, 1]: {v}")
            self.runs.setdefault(name, []).append(float(v))

    def mean(self, name: str) -> float:
        return float(np.mean(self.runs[name]))

    def std(self, name: str) -> float:
        vals = self.runs[name]
        if len(vals) < 2:
            return 0.0
        return float(np.std(vals, ddof=1))

    def to_csv(self) -> str:
        lines = ["task,metric,mean,std,n_runs," + ",".join(
            f"run{i}" for i in range(max((len(v) for v in self.runs.values()), default=0))
        )]
        for name in sorted(self.runs):
            vals = self.runs[name]
            row = [self.task, name, repr(self.mean(name)), repr(self.std(name)), str(len(vals))]
            row.extend(repr(v) for v in vals)
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        if not self.runs:
            return f"task: {self.task}\n(no metrics)\n"
        width = max(len(n) for n in self.runs)
        lines = [f"task: {self.task}"]
        for name in sorted(self.runs):
            lines.append(f"{name.ljust(width)}  {self.mean(name):.4f} ± {self.std(name):.4f}  (n={len(self.runs[name])})")
        return "\n".join(lines) + "\n"
