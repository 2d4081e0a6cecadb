"""Feature tables: file formats, splits, standardization, synthetic data.

Two interchangeable on-disk formats carry (features, score) rows:

* CSV with header ``f0,...,f{d-1},mos``, UTF-8, '.' decimal separator.
* A little-endian binary container: magic ``KANF``, u16 version (= 1),
  u32 n, u32 d, then n*d float64 features row-major, then n float64 scores.

Loaders reject malformed input with precise locations instead of guessing.
"""

from __future__ import annotations

import csv
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (FormatError, InsufficientDataError, ParameterError,
                     ParseError, ShapeError, UnsupportedVersionError)
from .linalg import Rng, column_stats

BINARY_MAGIC = b"KANF"
BINARY_VERSION = 1
_HEADER = struct.Struct("<4sHII")

TRAIN_FRACTION_NUM = 7     # 0.70 as exact integer arithmetic
VAL_FRACTION_NUM = 15      # 0.15


@dataclass
class FeatureTable:
    name: str
    features: np.ndarray    # [n, d] float64
    scores: np.ndarray      # [n] float64

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass
class SplitIndices:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


@dataclass
class Standardizer:
    means: np.ndarray
    stds: np.ndarray        # population std of the fitting rows
    epsilon: float = 1e-8


def atomic_write_text(path, text: str) -> None:
    """Write via temp file + rename so readers never observe partial files."""
    _atomic_write(path, text.encode("utf-8"))


def atomic_write_bytes(path, payload: bytes) -> None:
    _atomic_write(path, payload)


def _atomic_write(path, payload: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".kanreg-tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _infer_format(path, fmt: str | None) -> str:
    if fmt is None:
        fmt = "bin" if Path(path).suffix.lower() == ".bin" else "csv"
    if fmt not in ("csv", "bin"):
        raise ParameterError(f"format must be 'csv' or 'bin', got {fmt!r}")
    return fmt


def load_table(path, fmt: str | None = None) -> FeatureTable:
    fmt = _infer_format(path, fmt)
    name = Path(path).stem
    if fmt == "csv":
        return _load_csv(path, name)
    return _load_binary(path, name)


def _load_csv(path, name: str) -> FeatureTable:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty CSV file", line=1)
        if len(header) < 2 or header[-1].strip() != "mos":
            raise ParseError("header must end with a 'mos' column after at "
                             "least one feature column", line=1)
        d = len(header) - 1
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise ParseError(f"expected {d + 1} fields, got {len(row)}", line=lineno)
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                for col, cell in enumerate(row, start=1):
                    try:
                        float(cell)
                    except ValueError:
                        raise ParseError(f"non-numeric cell {cell!r}",
                                         line=lineno, column=col) from None
    if not rows:
        raise InsufficientDataError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(data)):
        r, c = np.argwhere(~np.isfinite(data))[0]
        raise ParseError("non-finite value", line=int(r) + 2, column=int(c) + 1)
    return FeatureTable(name=name, features=data[:, :d].copy(), scores=data[:, d].copy())


def _load_binary(path, name: str) -> FeatureTable:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, n, d = _HEADER.unpack_from(raw, 0)
    if magic != BINARY_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {BINARY_MAGIC!r}")
    if version != BINARY_VERSION:
        raise UnsupportedVersionError(
            f"{path}: binary version {version} is not supported (expected {BINARY_VERSION})")
    expected = _HEADER.size + 8 * n * d + 8 * n
    if len(raw) != expected:
        raise FormatError(
            f"{path}: payload is {len(raw) - _HEADER.size} bytes but n={n}, d={d} "
            f"requires {expected - _HEADER.size}")
    if n < 1 or d < 1:
        raise InsufficientDataError(f"{path}: declares n={n}, d={d}")
    features = np.frombuffer(raw, dtype="<f8", count=n * d,
                             offset=_HEADER.size).reshape(n, d).astype(np.float64)
    scores = np.frombuffer(raw, dtype="<f8", count=n,
                           offset=_HEADER.size + 8 * n * d).astype(np.float64)
    if not (np.all(np.isfinite(features)) and np.all(np.isfinite(scores))):
        raise FormatError(f"{path}: non-finite value in payload")
    return FeatureTable(name=name, features=features, scores=scores)


def save_table(table: FeatureTable, path, fmt: str | None = None) -> None:
    fmt = _infer_format(path, fmt)
    n, d = table.features.shape
    if table.scores.shape != (n,):
        raise ShapeError(f"scores shape {table.scores.shape} does not match n={n}")
    if fmt == "csv":
        lines = [",".join([f"f{j}" for j in range(d)] + ["mos"])]
        for i in range(n):
            cells = [f"{v:.17g}" for v in table.features[i]]
            cells.append(f"{table.scores[i]:.17g}")
            lines.append(",".join(cells))
        atomic_write_text(path, "\n".join(lines) + "\n")
    else:
        payload = _HEADER.pack(BINARY_MAGIC, BINARY_VERSION, n, d)
        payload += table.features.astype("<f8").tobytes(order="C")
        payload += table.scores.astype("<f8").tobytes(order="C")
        atomic_write_bytes(path, payload)


def split(n: int, seed: int) -> SplitIndices:
    """Deterministic 70/15/15 shuffle split of range(n).

    Sizes are floor(0.7 n) / floor(0.15 n) / remainder; for n < 7 the val
    floor would be zero, so one row moves from train to val to keep every
    part nonempty.
    """
    if n < 3:
        raise InsufficientDataError(f"need at least 3 rows to split, got {n}")
    idx = list(range(n))
    Rng(seed).shuffle(idx)
    n_train = (TRAIN_FRACTION_NUM * n) // 10
    n_val = (VAL_FRACTION_NUM * n) // 100
    if n_val == 0:
        n_val = 1
        n_train -= 1
    return SplitIndices(
        train=np.asarray(idx[:n_train], dtype=np.int64),
        val=np.asarray(idx[n_train:n_train + n_val], dtype=np.int64),
        test=np.asarray(idx[n_train + n_val:], dtype=np.int64),
    )


def fit_standardizer(features, indices=None, epsilon: float = 1e-8) -> Standardizer:
    """Column means / population stds over the selected rows only."""
    if isinstance(features, FeatureTable):
        features = features.features
    rows = features if indices is None else features[np.asarray(indices, dtype=np.int64)]
    means, stds = column_stats(rows)
    return Standardizer(means=means, stds=stds, epsilon=float(epsilon))


def apply_standardizer(std: Standardizer, features) -> np.ndarray:
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2 or f.shape[1] != std.means.size:
        raise ShapeError(
            f"standardizer was fit on {std.means.size} columns, input shape is {f.shape}")
    return (f - std.means) / (std.stds + std.epsilon)


SYNTHETIC_TARGETS = ("linear", "quadratic", "mixed")


def make_synthetic(n: int, d: int, intrinsic_rank: int, noise_sigma: float = 0.0,
                   target: str = "quadratic", seed: int = 0,
                   name: str = "synthetic") -> FeatureTable:
    """Low-rank Gaussian feature table with a latent-driven score.

    Features are ``Z @ W (+ noise)`` for Z [n x rank] standard normal and a
    fixed loading matrix W [rank x d] whose rows carry geometrically
    decaying scales. Distinct factor variances keep the covariance spectrum
    away from degeneracy, so a PCA of the features recovers the individual
    factors instead of an arbitrary basis of their span. The score is a
    linear, centered diagonal-quadratic, or quadratic-plus-cross-term
    function of Z, then affinely mapped onto [0, 100]. Everything is a pure
    function of the seed. The three coefficient vectors are always drawn,
    so tables with different targets share identical features for a given
    seed.
    """
    if n < 1 or d < 1:
        raise ParameterError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if not 1 <= intrinsic_rank <= d:
        raise ParameterError(
            f"intrinsic_rank must be in [1, {d}], got {intrinsic_rank}")
    if noise_sigma < 0.0:
        raise ParameterError(f"noise_sigma must be >= 0, got {noise_sigma}")
    if target not in SYNTHETIC_TARGETS:
        raise ParameterError(
            f"target must be one of {SYNTHETIC_TARGETS}, got {target!r}")
    rng = Rng(seed)
    r = intrinsic_rank
    z = rng.normals(n * r).reshape(n, r)
    loading = rng.normals(r * d).reshape(r, d) / np.sqrt(r)
    # factor i variance ~ 1.5^-i: separated eigenvalues, identifiable PCs
    loading = loading * (1.5 ** (-0.5 * np.arange(r)))[:, None]
    features = z @ loading
    if noise_sigma > 0.0:
        features = features + noise_sigma * rng.normals(n * d).reshape(n, d)
    lin_coef = rng.normals(r)
    # nonlinear parts ride on a dominant linear trend (about a fifth of the
    # score variance each), so the signal stays learnable at small n while
    # still separating expansion orders
    quad_coef = 0.35 * rng.normals(r)
    cross_coef = 0.35 * rng.normals(r)
    raw = z @ lin_coef
    if target in ("quadratic", "mixed"):
        raw = raw + (z * z - 1.0) @ quad_coef
    if target == "mixed":
        raw = raw + (z * np.roll(z, -1, axis=1)) @ cross_coef
    lo = float(raw.min())
    hi = float(raw.max())
    if hi - lo < 1e-12:
        scores = np.full(n, 50.0)
    else:
        scores = 100.0 * (raw - lo) / (hi - lo)
    return FeatureTable(name=name, features=features, scores=scores)


def mos_histogram(scores, bins: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of scores over uniform bin edges spanning [min, max].

    Returns ``(edges, counts)`` with len(edges) == bins + 1. Counts always
    sum to n; a constant score vector lands in a single bin.
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if s.size < 1:
        raise InsufficientDataError("histogram needs at least one score")
    if bins < 1:
        raise ParameterError(f"bins must be >= 1, got {bins}")
    counts, edges = np.histogram(s, bins=bins)
    return edges, counts.astype(np.int64)
