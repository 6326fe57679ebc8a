"""Datasets: synthetic generators, CSV ingestion, preprocessing, resampling."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from sklearn.model_selection import KFold, StratifiedKFold

from .exceptions import EmptyDataset, ParseError, TooFewSamples

POSITIVE_FLOOR = 1e-6

# Reference mixture: four blobs, the two on the anti-diagonal share a class.
BLOB_CENTERS = ((-2.0, -2.0), (2.0, 2.0), (-2.0, 2.0), (2.0, -2.0))
BLOB_CLASSES = (0, 1, 2, 2)


@dataclass
class Dataset:
    points: np.ndarray
    labels: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != (self.points.shape[0],):
                raise ValueError("one label per point is required")

    def __len__(self):
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def bounding_box(self) -> np.ndarray:
        """``(d, 2)`` array of per-coordinate (min, max)."""
        return np.column_stack([self.points.min(axis=0), self.points.max(axis=0)])

    @property
    def delta_s(self) -> float:
        """Largest edge of the bounding box."""
        box = self.bounding_box
        return float(np.max(box[:, 1] - box[:, 0]))

    @property
    def class_set(self) -> list:
        return [] if self.labels is None else np.unique(self.labels).tolist()

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.points[idx],
                       None if self.labels is None else self.labels[idx],
                       dict(self.meta))

    def xy(self):
        return self.points, self.labels


def gen_circles(n=1500, noise=0.05, rng_seed=0, radius=1.0, factor=0.5) -> Dataset:
    """Two concentric rings; class 0 on the outer ring of ``radius``, class 1
    on the inner ring of ``factor * radius``. Noise is radial and Gaussian."""
    if n < 2:
        raise TooFewSamples("need at least two samples")
    rng = np.random.default_rng(rng_seed)
    n_out = n // 2
    n_in = n - n_out
    labels = np.repeat([0, 1], [n_out, n_in])
    radii = np.where(labels == 0, radius, factor * radius)
    radii = radii + noise * rng.standard_normal(n)
    theta = rng.uniform(0.0, 2 * np.pi, n)
    pts = np.column_stack([radii * np.cos(theta), radii * np.sin(theta)])
    return Dataset(pts, labels, {"source": "circles", "noise": noise, "seed": rng_seed})


def gen_moons(n=1500, noise=0.1, rng_seed=0) -> Dataset:
    """Two interleaved half circles of unit radius."""
    if n < 2:
        raise TooFewSamples("need at least two samples")
    rng = np.random.default_rng(rng_seed)
    n_a = n // 2
    n_b = n - n_a
    ta = rng.uniform(0.0, np.pi, n_a)
    tb = rng.uniform(0.0, np.pi, n_b)
    upper = np.column_stack([np.cos(ta), np.sin(ta)])
    lower = np.column_stack([1.0 - np.cos(tb), 0.5 - np.sin(tb)])
    pts = np.vstack([upper, lower]) + noise * rng.standard_normal((n, 2))
    labels = np.repeat([0, 1], [n_a, n_b])
    return Dataset(pts, labels, {"source": "moons", "noise": noise, "seed": rng_seed})


def gen_blobs(n=1500, centers=BLOB_CENTERS, spread=0.8, rng_seed=0,
              classes=None) -> Dataset:
    """Isotropic Gaussian mixture, equal weights, shared ``spread``.

    ``classes`` assigns a label to each center; by default the reference
    layout maps four centers to three classes and any other layout gives
    every center its own class.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if classes is None:
        same = centers.shape == np.shape(BLOB_CENTERS) and np.allclose(centers, BLOB_CENTERS)
        classes = BLOB_CLASSES if same else range(len(centers))
    classes = np.asarray(list(classes))
    if classes.shape[0] != centers.shape[0]:
        raise ValueError("one class per center is required")
    if n < 1:
        raise TooFewSamples("need at least one sample")
    rng = np.random.default_rng(rng_seed)
    which = np.arange(n) % centers.shape[0]
    pts = centers[which] + spread * rng.standard_normal((n, centers.shape[1]))
    return Dataset(pts, classes[which], {"source": "blobs", "spread": spread, "seed": rng_seed})


def gen_point_mass(n=500, point=(0.0, 0.0), n_classes=1) -> Dataset:
    pts = np.tile(np.asarray(point, dtype=float), (n, 1))
    labels = np.arange(n) % n_classes
    return Dataset(pts, labels, {"source": "point-mass"})


GENERATORS = {"circles": gen_circles, "moons": gen_moons, "blobs": gen_blobs}


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, label_column=None, positive_shift=False, skip_bad_rows=False,
             scale=False) -> Dataset:
    """Read a comma-separated numeric table.

    ``label_column`` is a 0-based index, ``"last"`` or ``None``. A first row
    with any non-numeric cell is treated as a header. Rows with non-numeric
    or empty cells raise :class:`ParseError` unless ``skip_bad_rows`` is
    set, in which case they are dropped and counted in ``meta["rejected"]``.
    """
    rows = []
    header = None
    rejected = 0
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            cells = [c.strip() for c in row]
            if header is None and not rows and lineno == 1 and not all(map(_is_number, cells)):
                header = cells
                continue
            rows.append((lineno, cells))
    if not rows:
        raise EmptyDataset(f"{path} contains no data rows")

    width = len(rows[0][1])
    if label_column == "last":
        label_column = width - 1
    elif label_column is not None:
        label_column = int(label_column)
        if label_column < 0:
            label_column += width
        if not 0 <= label_column < width:
            raise ParseError(rows[0][0], label_column, "label column out of range")

    feats, labels = [], []
    for lineno, cells in rows:
        if len(cells) != width:
            if skip_bad_rows:
                rejected += 1
                continue
            raise ParseError(lineno, min(len(cells), width), "wrong number of columns")
        values = []
        bad = None
        for col, cell in enumerate(cells):
            if col == label_column:
                continue
            try:
                values.append(float(cell))
            except ValueError:
                bad = col
                break
        if bad is not None:
            if skip_bad_rows:
                rejected += 1
                continue
            raise ParseError(lineno, bad)
        feats.append(values)
        if label_column is not None:
            lab = cells[label_column]
            labels.append(_parse_label(lab))
    if not feats:
        raise EmptyDataset(f"{path}: every row was rejected")

    ds = Dataset(np.array(feats), None if label_column is None else _label_array(labels),
                 {"source": str(path), "header": header, "rejected": rejected})
    if scale:
        ds = minmax_scale(ds)
    if positive_shift:
        ds = shift_positive(ds)
    return ds


def _parse_label(cell):
    try:
        v = float(cell)
    except ValueError:
        return cell
    return int(v) if v.is_integer() else v


def _label_array(labels):
    if all(isinstance(v, int) for v in labels):
        return np.array(labels, dtype=int)
    return np.array([str(v) for v in labels])


def shift_positive(ds: Dataset, floor=POSITIVE_FLOOR) -> Dataset:
    """Shift each column whose minimum is below ``floor`` up to ``floor``.

    Columns that are already positive enough are left unchanged.
    """
    pts = ds.points
    shift = np.maximum(0.0, floor - pts.min(axis=0))
    out = Dataset(pts + shift, ds.labels, dict(ds.meta))
    out.meta["positive_shift"] = shift.tolist()
    return out


def minmax_scale(ds: Dataset) -> Dataset:
    lo = ds.points.min(axis=0)
    span = ds.points.max(axis=0) - lo
    span[span == 0] = 1.0
    out = Dataset((ds.points - lo) / span, ds.labels, dict(ds.meta))
    out.meta["minmax"] = {"min": lo.tolist(), "span": span.tolist()}
    return out


def subsample(ds: Dataset, n: int, rng_seed=0) -> Dataset:
    """Seeded uniform draw of ``n`` rows without replacement."""
    if n >= len(ds):
        return ds
    rng = np.random.default_rng(rng_seed)
    return ds.subset(np.sort(rng.choice(len(ds), size=n, replace=False)))


def kfold(dataset: Dataset, k=5, rng_seed=0):
    """Shuffled (stratified when labeled) ``k``-fold index partitions.

    Returns a list of ``(train_idx, test_idx)`` pairs whose test parts are
    disjoint and cover every index.
    """
    if k < 2:
        raise TooFewSamples("need at least two folds")
    n = len(dataset)
    if n < k:
        raise TooFewSamples(f"{n} samples cannot form {k} folds")
    if dataset.labels is not None:
        _, counts = np.unique(dataset.labels, return_counts=True)
        if counts.min() >= k:
            splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=rng_seed)
            return list(splitter.split(dataset.points, dataset.labels))
    splitter = KFold(n_splits=k, shuffle=True, random_state=rng_seed)
    return list(splitter.split(dataset.points))


def stream(dataset, rng_seed=0, labels=None):
    """Endless i.i.d. draws (with replacement) of ``(x, label)`` pairs.

    Accepts a :class:`Dataset` or a bare array plus optional ``labels``.
    """
    if isinstance(dataset, Dataset):
        X, y = dataset.points, dataset.labels
    else:
        X, y = np.atleast_2d(np.asarray(dataset, dtype=float)), labels
    if X.shape[0] == 0:
        raise TooFewSamples("cannot stream an empty dataset")
    rng = np.random.default_rng(rng_seed)
    n = X.shape[0]
    while True:
        for i in rng.integers(0, n, size=1024):
            yield X[i], (None if y is None else y[i])
