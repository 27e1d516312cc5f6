"""Data ingestion, target normalization and deterministic splitting."""
from __future__ import annotations

import csv
import gzip
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    ConstantTarget,
    CountMismatch,
    MissingColumn,
    NonFinite,
    ParseError,
    ShapeMismatch,
)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class Dataset:
    """Observations ``X`` (rows) with responses ``y``."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list = field(default=None)
    target_name: str = "y"

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ShapeMismatch(f"X must be a non-empty matrix, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise ShapeMismatch(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise NonFinite("dataset contains NaN or Inf")
        names = self.feature_names
        if names is None:
            names = [f"x{j}" for j in range(X.shape[1])]
        if len(names) != X.shape[1]:
            raise ShapeMismatch("feature_names length does not match column count")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", list(names))

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], self.feature_names, self.target_name)


@dataclass(frozen=True)
class NormParams:
    """Affine map sending ``[y_min, y_max]`` onto ``[lo, hi]``."""

    y_min: float
    y_max: float
    lo: float
    hi: float

    @property
    def slope(self) -> float:
        """d(scaled)/d(original)."""
        return (self.hi - self.lo) / (self.y_max - self.y_min)

    def normalize(self, y):
        return self.lo + (np.asarray(y, dtype=float) - self.y_min) * self.slope

    def denormalize(self, s):
        return self.y_min + (np.asarray(s, dtype=float) - self.lo) / self.slope


def normalize_targets(y, lo=0.1, hi=0.9):
    """Scale ``y`` affinely so that ``min(y) -> lo`` and ``max(y) -> hi``.

    Returns ``(y_scaled, params)``; ``params.denormalize`` inverts the map.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if not 0.0 < lo < hi < 1.0:
        raise ValueError(f"need 0 < lo < hi < 1, got lo={lo}, hi={hi}")
    y_min, y_max = float(y.min()), float(y.max())
    if not y_max > y_min:
        raise ConstantTarget("targets are constant; cannot normalize")
    params = NormParams(y_min, y_max, float(lo), float(hi))
    s = params.normalize(y)
    # pin the endpoints exactly against rounding
    s[y == y_min] = lo
    s[y == y_max] = hi
    return s, params


def load_csv(path, target=None, has_header=True):
    """Read a numeric CSV file.

    ``target`` names the response column. Without a header it may be a
    0-based column index; ``None`` selects the last column.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path}: empty file")

    first_data_line = 1
    if has_header:
        header = [h.strip() for h in rows[0]]
        rows = rows[1:]
        first_data_line = 2
    else:
        header = [f"x{j}" for j in range(len(rows[0]))]
    if not rows:
        raise ParseError(f"{path}: no data rows")

    if target is None:
        t = len(header) - 1
    elif target in header:
        t = header.index(target)
    elif not has_header and str(target).lstrip("-").isdigit():
        t = int(target) % len(header)
    else:
        raise MissingColumn(f"{path}: no column named {target!r}")

    data = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows):
        line = first_data_line + i
        if len(row) != len(header):
            raise ParseError(f"{path}: expected {len(header)} fields, got {len(row)}", line=line)
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise ParseError(f"{path}: cannot parse {cell!r} as a number",
                                 line=line, column=j + 1) from None
    if not np.all(np.isfinite(data)):
        raise NonFinite(f"{path}: contains NaN or Inf")

    keep = [j for j in range(len(header)) if j != t]
    names = [header[j] for j in keep]
    tname = header[t] if has_header else "y"
    return Dataset(data[:, keep], data[:, t], names, tname)


def save_csv(path, X, y=None, feature_names=None, target_name="y"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    names = feature_names or [f"x{j}" for j in range(X.shape[1])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(names) + ([target_name] if y is not None else []))
        for i in range(X.shape[0]):
            row = [repr(float(v)) for v in X[i]]
            if y is not None:
                row.append(repr(float(y[i])))
            w.writerow(row)


def _read_idx(path, magic, what):
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise BadMagic(f"{path}: too short for an IDX {what} file")
    got = struct.unpack(">I", raw[:4])[0]
    if got != magic:
        raise BadMagic(f"{path}: magic 0x{got:08x}, expected 0x{magic:08x}")
    ndim = magic & 0xFF
    if len(raw) < 4 + 4 * ndim:
        raise BadMagic(f"{path}: truncated header")
    dims = struct.unpack(">" + "I" * ndim, raw[4:4 + 4 * ndim])
    body = np.frombuffer(raw, dtype=np.uint8, offset=4 + 4 * ndim)
    expected = math.prod(dims)
    if body.size != expected:
        raise CountMismatch(f"{path}: header promises {expected} bytes, found {body.size}")
    return body.reshape(dims)


def load_mnist_idx(images, labels):
    """Load an MNIST image/label pair of IDX files (optionally gzipped).

    Pixels are divided by 255 so that ``X`` lies in ``[0, 1]``; ``y`` holds
    the digit labels as floats.
    """
    img = _read_idx(images, IDX_IMAGES_MAGIC, "image")
    lab = _read_idx(labels, IDX_LABELS_MAGIC, "label")
    if img.shape[0] != lab.shape[0]:
        raise CountMismatch(f"{img.shape[0]} images but {lab.shape[0]} labels")
    X = img.reshape(img.shape[0], -1).astype(float) / 255.0
    names = [f"px{j}" for j in range(X.shape[1])]
    return Dataset(X, lab.astype(float), names, "label")


def split(ds, test_fraction, seed=0):
    """Shuffle rows with a seeded PCG64 generator and cut into train/test.

    The train part has ``ceil(m * (1 - test_fraction))`` rows, capped so that
    the test part keeps at least one row.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    m = ds.m
    if m < 2:
        raise ValueError("need at least two rows to split")
    perm = np.random.default_rng(seed).permutation(m)
    n_train = min(max(math.ceil(m * (1.0 - test_fraction)), 1), m - 1)
    return ds.take(perm[:n_train]), ds.take(perm[n_train:])


@dataclass(frozen=True)
class FeatureScaling:
    """Column-wise min-max scaling of inputs onto ``[0, 1]``."""

    shift: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        lo, hi = X.min(axis=0), X.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        return cls(lo, span)

    def apply(self, X):
        return (np.asarray(X, dtype=float) - self.shift) / self.scale
