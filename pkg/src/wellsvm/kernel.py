"""Kernel functions, Gram matrices, width heuristic, label kernels, alignment."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import pdist, squareform

from .data import Dataset

# σ multipliers swept by the CLI, applied to sqrt(mean pairwise distance)
WIDTH_MULTIPLIERS = (0.25, 0.5, 1.0, 2.0, 4.0)

_EXACT_PAIR_LIMIT = 2000
_SAMPLED_PAIRS = 2_000_000


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice: 'linear' or 'gaussian' with width sigma > 0."""

    kind: str
    width: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("linear", "gaussian"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian":
            if self.width is None or not np.isfinite(self.width) or self.width <= 0:
                raise ValueError("gaussian width must be finite and positive")
        elif self.width is not None:
            raise ValueError("linear kernel takes no width")


def gamma_heuristic(d: Dataset, seed: int = 0) -> float:
    """Mean Euclidean distance over all unordered point pairs.

    Exact for n <= 2000; above that, a seeded uniform sample of pairs.
    """
    if d.n < 2:
        raise ValueError("need at least 2 rows")
    X = np.asarray(d.X.todense())
    if d.n <= _EXACT_PAIR_LIMIT:
        return float(pdist(X).mean())
    rng = np.random.default_rng(seed)
    i = rng.integers(0, d.n, size=_SAMPLED_PAIRS)
    j = rng.integers(0, d.n - 1, size=_SAMPLED_PAIRS)
    j = np.where(j >= i, j + 1, j)  # uniform over off-diagonal pairs
    return float(np.linalg.norm(X[i] - X[j], axis=1).mean())


def gram(d: Dataset, spec: KernelSpec) -> np.ndarray:
    """Dense Gram matrix K_ij = kappa(x_i, x_j), symmetric by construction."""
    X = np.asarray(d.X.todense())
    if spec.kind == "linear":
        K = X @ X.T
    else:
        sq = squareform(pdist(X, "sqeuclidean"))
        K = np.exp(-sq / (2.0 * spec.width**2))
    return 0.5 * (K + K.T)


def kernel_value(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> float:
    if spec.kind == "linear":
        return float(x @ y)
    return float(np.exp(-np.sum((x - y) ** 2) / (2.0 * spec.width**2)))


def cross_gram(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Rectangular kernel matrix between row sets A and B."""
    if sp.issparse(A):
        A = np.asarray(A.todense())
    if sp.issparse(B):
        B = np.asarray(B.todense())
    if spec.kind == "linear":
        return A @ B.T
    sq = (
        np.sum(A**2, axis=1)[:, None]
        + np.sum(B**2, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * spec.width**2))


def composite_label_gram(K: np.ndarray, candidates: Sequence[np.ndarray], mu: np.ndarray) -> np.ndarray:
    """Sum_t mu_t * (K ⊙ y_t y_t'); psd since each term is psd."""
    mu = np.asarray(mu, dtype=float)
    if len(candidates) != len(mu):
        raise ValueError("candidate/weight count mismatch")
    if abs(mu.sum() - 1.0) > 1e-9 or np.any(mu < -1e-12):
        raise ValueError("mu must lie on the simplex")
    n = K.shape[0]
    out = np.zeros_like(K)
    for y, m in zip(candidates, mu):
        y = np.asarray(y, dtype=float)
        if y.shape != (n,):
            raise ValueError("candidate length mismatch")
        out += m * (K * np.outer(y, y))
    return out


def kernel_alignment(K: np.ndarray, y: np.ndarray) -> float:
    """Normalized Frobenius inner product <K, yy'> / (||K||_F ||yy'||_F)."""
    y = np.asarray(y, dtype=float)
    n = K.shape[0]
    if y.shape != (n,):
        raise ValueError("label length mismatch")
    fro = np.linalg.norm(K, "fro")
    if fro == 0.0:
        raise ValueError("zero kernel matrix")
    return float(y @ K @ y) / (n * fro)
