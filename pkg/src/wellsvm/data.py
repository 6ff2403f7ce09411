"""Data ingestion: sparse datasets, bag datasets, synthetic generators, splits.

The text format is a LIBSVM dialect where the label field may be ``?`` to
mark an unlabeled row, so the same format serves supervised, semi-supervised
and clustering inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp


class ParseError(ValueError):
    """Malformed input text; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class SparseVector:
    """A sparse feature row: strictly increasing 0-based indices, finite values."""

    entries: tuple[tuple[int, float], ...]

    def __post_init__(self):
        prev = -1
        for idx, val in self.entries:
            if idx <= prev:
                raise ValueError(f"indices not strictly increasing at {idx}")
            if not np.isfinite(val):
                raise ValueError(f"non-finite value at index {idx}")
            prev = idx

    def to_dense(self, n_features: int) -> np.ndarray:
        out = np.zeros(n_features)
        for idx, val in self.entries:
            if idx < n_features:
                out[idx] = val
        return out


class Dataset:
    """Feature rows with full, partial or absent ±1 labels.

    Rows are held in a CSR matrix; ``labels[i]`` is +1, -1 or None.
    """

    def __init__(self, X: sp.csr_matrix, labels: Sequence[Optional[int]]):
        X = sp.csr_matrix(X)
        if X.shape[0] != len(labels):
            raise ValueError("row/label count mismatch")
        for y in labels:
            if y is not None and y not in (+1, -1):
                raise ValueError(f"label must be +1/-1/None, got {y}")
        if X.nnz and not np.all(np.isfinite(X.data)):
            raise ValueError("non-finite feature value")
        self.X = X
        self.labels = list(labels)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def labeled_indices(self) -> np.ndarray:
        return np.array([i for i, y in enumerate(self.labels) if y is not None], dtype=int)

    @property
    def unlabeled_indices(self) -> np.ndarray:
        return np.array([i for i, y in enumerate(self.labels) if y is None], dtype=int)

    def row(self, i: int) -> SparseVector:
        start, end = self.X.indptr[i], self.X.indptr[i + 1]
        return SparseVector(
            tuple((int(j), float(v)) for j, v in zip(self.X.indices[start:end], self.X.data[start:end]))
        )

    def label_vector(self) -> np.ndarray:
        """Labels as ±1 ints; raises if any label is absent."""
        if any(y is None for y in self.labels):
            raise ValueError("dataset has unlabeled rows")
        return np.array(self.labels, dtype=int)

    def subset(self, indices: Iterable[int]) -> "Dataset":
        idx = list(indices)
        return Dataset(self.X[idx], [self.labels[i] for i in idx])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if self.labels != other.labels or self.X.shape != other.X.shape:
            return False
        return (self.X != other.X).nnz == 0

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, n_features={self.n_features})"


@dataclass
class Bag:
    """Contiguous instance index range [start, end) with a ±1 bag label."""

    start: int
    end: int
    label: int

    @property
    def size(self) -> int:
        return self.end - self.start

    def indices(self) -> range:
        return range(self.start, self.end)


class BagDataset:
    """Instances grouped into bags; positive bags precede negative bags.

    ``original_order`` maps the stored bag position back to the position of
    first appearance in the input, so predictions can be reported in input
    order after the positive-first reordering.
    """

    def __init__(self, instances: Dataset, bags: Sequence[Bag], original_order: Optional[Sequence[int]] = None):
        if any(y is not None for y in instances.labels):
            raise ValueError("bag instances must be unlabeled rows")
        covered = []
        for b in bags:
            if b.size <= 0:
                raise ValueError("empty bag")
            if b.label not in (+1, -1):
                raise ValueError("bag label must be ±1")
            covered.extend(b.indices())
        if sorted(covered) != list(range(instances.n)):
            raise ValueError("bag ranges must be disjoint and cover all instances")
        seen_negative = False
        for b in bags:
            if b.label == -1:
                seen_negative = True
            elif seen_negative:
                raise ValueError("positive bags must precede negative bags")
        self.instances = instances
        self.bags = list(bags)
        self.original_order = list(original_order) if original_order is not None else list(range(len(bags)))

    @property
    def n_positive(self) -> int:
        return sum(1 for b in self.bags if b.label == +1)

    @property
    def positive_bags(self) -> list[Bag]:
        return [b for b in self.bags if b.label == +1]

    @property
    def negative_instance_indices(self) -> np.ndarray:
        out = []
        for b in self.bags:
            if b.label == -1:
                out.extend(b.indices())
        return np.array(out, dtype=int)

    def instance_index_map(self) -> dict[tuple[int, int], int]:
        """The dual-coordinate position of each negative-bag instance (i, j).

        Positive bags occupy positions 0..p-1; negative instance (i, j) maps
        to J_{i-1} - J_p + j + p, a bijection onto {p, ..., q-1}.
        """
        p = self.n_positive
        sizes = [b.size for b in self.bags]
        J = np.concatenate([[0], np.cumsum(sizes)])
        out = {}
        for i in range(p, len(self.bags)):
            for j in range(sizes[i]):
                out[(i, j)] = int(J[i] - J[p] + j + p)
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, BagDataset):
            return NotImplemented
        return (
            self.instances == other.instances
            and self.bags == other.bags
            and self.original_order == other.original_order
        )


@dataclass(frozen=True)
class SplitSpec:
    """Reproducible train/test + labeled/unlabeled split parameters."""

    train_fraction: float
    labeled_fraction: float
    seed: int

    def __post_init__(self):
        for f in (self.train_fraction, self.labeled_fraction):
            if not (0.0 < f <= 1.0):
                raise ValueError("fractions must be in (0, 1]")


def _parse_label_token(tok: str, line_no: int) -> Optional[int]:
    if tok == "?":
        return None
    try:
        val = float(tok)
    except ValueError:
        raise ParseError(line_no, f"bad label {tok!r}") from None
    if val == 1:
        return +1
    if val == -1:
        return -1
    raise ParseError(line_no, f"label must be +1, -1 or '?', got {tok!r}")


def _parse_features(tokens: list[str], line_no: int) -> list[tuple[int, float]]:
    entries = []
    prev = 0
    for tok in tokens:
        if ":" not in tok:
            raise ParseError(line_no, f"bad feature token {tok!r}")
        idx_s, _, val_s = tok.partition(":")
        try:
            idx = int(idx_s)
            val = float(val_s)
        except ValueError:
            raise ParseError(line_no, f"bad feature token {tok!r}") from None
        if idx < 1:
            raise ParseError(line_no, f"feature index must be >= 1, got {idx}")
        if idx <= prev:
            raise ParseError(line_no, f"feature indices must be strictly increasing at {idx}")
        if not np.isfinite(val):
            raise ParseError(line_no, f"non-finite value at index {idx}")
        entries.append((idx - 1, val))
        prev = idx
    return entries


def _decode(text: bytes | str) -> list[str]:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return text.replace("\r\n", "\n").split("\n")


def parse_libsvm(text: bytes | str) -> Dataset:
    """Parse a LIBSVM-dialect text into a Dataset.

    Each nonblank line is ``<label> <idx>:<val> ...`` with 1-based indices;
    the label may be ``?`` for an unlabeled row.
    """
    labels: list[Optional[int]] = []
    rows: list[list[tuple[int, float]]] = []
    max_idx = -1
    for line_no, line in enumerate(_decode(text), start=1):
        line = line.strip()
        if not line:
            continue
        tokens = line.split()
        labels.append(_parse_label_token(tokens[0], line_no))
        entries = _parse_features(tokens[1:], line_no)
        rows.append(entries)
        if entries:
            max_idx = max(max_idx, entries[-1][0])
    n_features = max_idx + 1
    X = _rows_to_csr(rows, n_features)
    return Dataset(X, labels)


def _rows_to_csr(rows: list[list[tuple[int, float]]], n_features: int) -> sp.csr_matrix:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for entries in rows:
        for idx, val in entries:
            indices.append(idx)
            data.append(val)
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int32), np.array(indptr, dtype=np.int32)),
        shape=(len(rows), n_features),
    )


def serialize_libsvm(d: Dataset) -> str:
    lines = []
    for i in range(d.n):
        lab = "?" if d.labels[i] is None else ("+1" if d.labels[i] == +1 else "-1")
        feats = " ".join(f"{idx + 1}:{val!r}" for idx, val in d.row(i).entries)
        lines.append(f"{lab} {feats}".rstrip())
    return "\n".join(lines) + "\n"


def parse_bags(text: bytes | str) -> BagDataset:
    """Parse the bag text format into a BagDataset.

    Each line is ``<bag_id> <bag_label> <idx>:<val> ...``; all lines of a
    bag must be contiguous. Bags are assembled in order of first appearance,
    then stably reordered so positive bags come first.
    """
    bag_rows: dict[str, list[list[tuple[int, float]]]] = {}
    bag_labels: dict[str, int] = {}
    order: list[str] = []
    max_idx = -1
    last_id: Optional[str] = None
    for line_no, line in enumerate(_decode(text), start=1):
        line = line.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise ParseError(line_no, "expected '<bag_id> <bag_label> ...'")
        bag_id = tokens[0]
        label = _parse_label_token(tokens[1], line_no)
        if label is None:
            raise ParseError(line_no, "bag label cannot be '?'")
        if bag_id in bag_labels:
            if bag_id != last_id:
                raise ParseError(line_no, f"bag {bag_id!r} is not contiguous")
            if bag_labels[bag_id] != label:
                raise ParseError(line_no, f"inconsistent labels within bag {bag_id!r}")
        else:
            bag_labels[bag_id] = label
            bag_rows[bag_id] = []
            order.append(bag_id)
        entries = _parse_features(tokens[2:], line_no)
        bag_rows[bag_id].append(entries)
        if entries:
            max_idx = max(max_idx, entries[-1][0])
        last_id = bag_id
    if not order:
        raise ParseError(0, "no bags in input")
    # stable reorder: positives first, preserving first-appearance order
    reordered = [b for b in order if bag_labels[b] == +1] + [b for b in order if bag_labels[b] == -1]
    original_order = [order.index(b) for b in reordered]
    rows: list[list[tuple[int, float]]] = []
    bags: list[Bag] = []
    for bag_id in reordered:
        start = len(rows)
        rows.extend(bag_rows[bag_id])
        bags.append(Bag(start, len(rows), bag_labels[bag_id]))
    X = _rows_to_csr(rows, max_idx + 1)
    instances = Dataset(X, [None] * len(rows))
    return BagDataset(instances, bags, original_order)


def serialize_bags(bd: BagDataset) -> str:
    lines = []
    for pos, b in enumerate(bd.bags):
        lab = "+1" if b.label == +1 else "-1"
        for i in b.indices():
            feats = " ".join(f"{idx + 1}:{val!r}" for idx, val in bd.instances.row(i).entries)
            lines.append(f"b{pos} {lab} {feats}".rstrip())
    return "\n".join(lines) + "\n"


def make_two_gaussians(n: int, separation: float, seed: int, n_features: int = 2) -> Dataset:
    """Synthetic two-class problem: unit-variance Gaussians at ±(separation/2)·e1.

    Returns n/2 points per class, class +1 first, fully labeled.
    """
    if n < 2 or n % 2 != 0:
        raise ValueError("n must be even and >= 2")
    if separation <= 0:
        raise ValueError("separation must be > 0")
    rng = np.random.default_rng(seed)
    half = n // 2
    mean = np.zeros(n_features)
    mean[0] = separation / 2.0
    pos = rng.standard_normal((half, n_features)) + mean
    neg = rng.standard_normal((half, n_features)) - mean
    X = sp.csr_matrix(np.vstack([pos, neg]))
    labels = [+1] * half + [-1] * half
    return Dataset(X, labels)


def split_dataset(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Split into (train, test); the train part keeps only a labeled fraction.

    Labeled rows are chosen per class so each class retains at least one
    label whenever it appears in the train split. Identical SplitSpec gives
    identical index sets.
    """
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(d.n)
    n_train = max(1, int(round(spec.train_fraction * d.n)))
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    train = d.subset(train_idx)
    test = d.subset(test_idx)
    if spec.labeled_fraction < 1.0:
        by_class: dict[int, list[int]] = {}
        for i, y in enumerate(train.labels):
            if y is not None:
                by_class.setdefault(y, []).append(i)
        keep: set[int] = set()
        for cls in sorted(by_class):
            members = by_class[cls]
            k = max(1, int(round(spec.labeled_fraction * len(members))))
            chosen = rng.permutation(len(members))[:k]
            keep.update(members[c] for c in chosen)
        labels = [y if i in keep else None for i, y in enumerate(train.labels)]
        train = Dataset(train.X, labels)
    return train, test


def minmax_scale(d: Dataset) -> Dataset:
    """Per-feature min-max scaling to [0, 1]; constant features map to 0."""
    X = np.asarray(d.X.todense())
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    Xs = (X - lo) / span
    return Dataset(sp.csr_matrix(Xs), d.labels)
