import csv
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from errors import ContractError, DatasetParseError, DimensionError, LabelIndexError, ParameterError
from models import DatasetKind, DatasetSpec

logger = logging.getLogger(__name__)

Provenance = DatasetKind


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with integer class labels in [0, num_classes)"""
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    provenance: Provenance
    seed: int = 0
    noise_fraction: float = 0.0

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise DimensionError(
                f"features {self.features.shape} and labels {self.labels.shape} do not describe the same rows"
            )
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise LabelIndexError(f"labels must lie in [0, {self.num_classes})")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return replace(self, features=self.features[indices], labels=self.labels[indices])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)


def _balanced_labels(n: int, num_classes: int) -> np.ndarray:
    return np.arange(n, dtype=np.int64) % num_classes


def gen_blobs(n: int, num_classes: int, dim: int = 2, spread: float = 0.608, seed: int = 0) -> Dataset:
    """Isotropic Gaussian clusters centred on the unit circle in the first two coordinates.

    Class k sits at angle 2*pi*k/K. For K=2 the default spread gives a Bayes
    error of about 5%.
    """
    if n < num_classes:
        raise ContractError(f"need at least one point per class, got n={n} for K={num_classes}")
    if dim < 2:
        raise ParameterError("blobs need at least two feature dimensions")
    rng = np.random.default_rng(seed)
    labels = _balanced_labels(n, num_classes)
    angles = 2 * np.pi * np.arange(num_classes) / num_classes
    centers = np.zeros((num_classes, dim))
    centers[:, 0] = np.cos(angles)
    centers[:, 1] = np.sin(angles)
    features = centers[labels] + spread * rng.standard_normal((n, dim))
    return Dataset(features, labels, num_classes, Provenance.BLOBS, seed)


def gen_rings(n: int, num_classes: int, dim: int = 2, spread: float = 0.1, seed: int = 0) -> Dataset:
    """Concentric rings, class k on radius k+1 with radial noise of scale ``spread``"""
    if n < num_classes:
        raise ContractError(f"need at least one point per class, got n={n} for K={num_classes}")
    if dim < 2:
        raise ParameterError("rings need at least two feature dimensions")
    rng = np.random.default_rng(seed)
    labels = _balanced_labels(n, num_classes)
    angles = rng.uniform(0, 2 * np.pi, size=n)
    radii = labels + 1.0 + spread * rng.standard_normal(n)
    features = np.zeros((n, dim))
    features[:, 0] = radii * np.cos(angles)
    features[:, 1] = radii * np.sin(angles)
    if dim > 2:
        features[:, 2:] = spread * rng.standard_normal((n, dim - 2))
    return Dataset(features, labels, num_classes, Provenance.RINGS, seed)


def gen_categorical_single_x(probs: Sequence[float], n: int, seed: int = 0, dim: int = 1) -> Dataset:
    """Every point shares one constant feature vector; labels are drawn i.i.d. from ``probs``"""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1 or probs.size == 0 or np.any(probs < 0) or not math.isclose(probs.sum(), 1.0, abs_tol=1e-9):
        raise ParameterError(f"probs must be a probability vector, got {probs.tolist()}")
    rng = np.random.default_rng(seed)
    labels = rng.choice(probs.size, size=n, p=probs / probs.sum()).astype(np.int64)
    return Dataset(np.ones((n, dim)), labels, probs.size, Provenance.CATEGORICAL_SINGLE_X, seed)


def flip_labels(data: Dataset, fraction: float, seed: int = 0) -> Dataset:
    """Reassign floor(fraction * n) labels, each to a uniformly drawn different class"""
    if not 0 <= fraction <= 1:
        raise ParameterError(f"noise fraction must lie in [0, 1], got {fraction}")
    count = int(math.floor(fraction * data.n + 1e-9))
    if count == 0:
        return data
    if data.num_classes < 2:
        raise ContractError("cannot flip labels of a single-class dataset")
    rng = np.random.default_rng(seed)
    indices = rng.choice(data.n, size=count, replace=False)
    labels = data.labels.copy()
    offsets = rng.integers(1, data.num_classes, size=count)
    labels[indices] = (labels[indices] + offsets) % data.num_classes
    logger.info("Flipped %d of %d labels", count, data.n)
    return replace(data, labels=labels, noise_fraction=fraction)


def split(data: Dataset, train_ratio: float, seed: int = 0) -> Tuple[Dataset, Dataset]:
    """Seeded permutation cut into ceil(ratio * n) training rows and the remainder"""
    if not 0 < train_ratio < 1:
        raise ParameterError(f"train ratio must lie in (0, 1), got {train_ratio}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(data.n)
    n_train = int(math.ceil(train_ratio * data.n - 1e-9))
    return data.subset(order[:n_train]), data.subset(order[n_train:])


def load_csv(path: Union[str, Path], standardize: bool = False) -> Dataset:
    """Read a dataset with header ``f0,...,f{d-1},label``"""
    path = Path(path)
    features, labels = [], []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header:
            raise DatasetParseError("missing header", line_number=1)
        header = [column.strip() for column in header]
        dim = len(header) - 1
        if dim < 1 or header != [f"f{i}" for i in range(dim)] + ["label"]:
            raise DatasetParseError(f"header must read f0,...,f{{d-1}},label, got {','.join(header)}", 1)

        for line_number, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != dim + 1:
                raise DatasetParseError(f"expected {dim + 1} fields, got {len(row)}", line_number)
            try:
                values = [float(cell) for cell in row[:dim]]
            except ValueError as e:
                raise DatasetParseError(f"non-numeric feature: {e}", line_number) from e
            label_text = row[dim].strip()
            if not (label_text.isascii() and label_text.isdigit()):
                raise DatasetParseError(f"label must be a nonnegative integer, got {label_text!r}", line_number)
            features.append(values)
            labels.append(int(label_text))

    if not labels:
        raise DatasetParseError(f"{path} contains no data rows")

    label_array = np.asarray(labels, dtype=np.int64)
    num_classes = int(label_array.max()) + 1
    present = np.unique(label_array)
    if present.size != num_classes:
        missing = sorted(set(range(num_classes)) - set(present.tolist()))
        logger.warning("Labels in %s skip classes %s; using K=%d", path, missing, num_classes)

    feature_array = np.asarray(features, dtype=np.float64)
    if standardize:
        scale = feature_array.std(axis=0)
        feature_array = (feature_array - feature_array.mean(axis=0)) / np.where(scale > 0, scale, 1.0)
    return Dataset(feature_array, label_array, max(num_classes, 1), Provenance.CSV)


def save_csv(data: Dataset, path: Union[str, Path]) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"f{i}" for i in range(data.dim)] + ["label"])
        for row, label in zip(data.features, data.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def make_dataset(spec: DatasetSpec, seed: Optional[int] = None) -> Dataset:
    """Build the dataset an experiment describes"""
    seed = spec.seed if seed is None else seed
    if spec.kind == DatasetKind.BLOBS:
        return gen_blobs(spec.n, spec.num_classes, spec.dim, spec.spread, seed)
    if spec.kind == DatasetKind.RINGS:
        return gen_rings(spec.n, spec.num_classes, spec.dim, spec.spread, seed)
    if spec.kind == DatasetKind.CATEGORICAL_SINGLE_X:
        return gen_categorical_single_x(spec.probs, spec.n, seed)
    if not Path(spec.path).exists():
        raise ParameterError(f"dataset file not found: {spec.path}")
    return load_csv(spec.path, spec.standardize)
