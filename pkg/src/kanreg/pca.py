"""PCA feature compression with a variance-ratio + floor selection rule.

The retained dimension is ``k = min(d, max(k_var, 64))`` where ``k_var`` is
the smallest k whose top-k eigenvalue mass reaches the requested variance
ratio. The floor of 64 keeps enough coordinates for the downstream network
even when the spectrum collapses early; for d < 64 the floor caps at d.

Fitting eigendecomposes whichever of the covariance (d x d) or the Gram
matrix (n x n) is smaller; both give the same nonzero spectrum, and Gram
eigenvectors map onto covariance eigenvectors exactly, so tall-thin and
short-wide data are equally cheap. When the floor asks for more components
than the covariance rank provides, the remaining rows are a deterministic
orthonormal completion (eigenvectors of the zero eigenvalue).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateDataError, InsufficientDataError, NumericError,
                     ParameterError, ShapeError)
from .linalg import as_matrix, sym_eig

K_FLOOR = 64


@dataclass
class PcaModel:
    mean: np.ndarray          # [d] training column means
    components: np.ndarray    # [k, d] orthonormal rows, fixed sign convention
    eigenvalues: np.ndarray   # [d] descending, nonnegative
    k: int
    tau: float | None = None  # variance-ratio target used at fit time, if any


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not 0.0 < tau <= 1.0:
        raise ParameterError(f"variance ratio target must be in (0, 1], got {tau}")
    return tau


def _clean_spectrum(eigenvalues) -> np.ndarray:
    w = np.asarray(eigenvalues, dtype=np.float64).reshape(-1).copy()
    if w.size < 1:
        raise ShapeError("empty eigenvalue vector")
    scale = max(1.0, float(w.max(initial=0.0)))
    bad = w < -1e-7 * scale
    if np.any(bad):
        raise NumericError(
            f"spectrum has a significantly negative eigenvalue ({w[bad].min():.3e})")
    w[w < 0.0] = 0.0
    if np.any(w[1:] > w[:-1] + 1e-9 * scale):
        raise ParameterError("eigenvalues must be sorted in descending order")
    return w


def variance_ratio(eigenvalues, k: int) -> float:
    """Fraction of total eigenvalue mass captured by the top k entries."""
    w = _clean_spectrum(eigenvalues)
    if not 0 <= k <= w.size:
        raise ParameterError(f"k must be in [0, {w.size}], got {k}")
    total = float(w.sum())
    if total <= 0.0:
        raise DegenerateDataError("all eigenvalues are zero")
    return float(w[:k].sum()) / total


def select_k(eigenvalues, tau: float, d: int | None = None) -> int:
    """Smallest k reaching the variance target, floored at 64, capped at d.

    ``d`` defaults to the spectrum length (the usual case: one eigenvalue
    per original feature dimension).
    """
    tau = _check_tau(tau)
    w = _clean_spectrum(eigenvalues)
    if d is None:
        d = w.size
    elif d < 1:
        raise ParameterError(f"dimension cap must be >= 1, got {d}")
    total = float(w.sum())
    if total <= 0.0:
        raise DegenerateDataError("all eigenvalues are zero; nothing to select")
    cum = np.cumsum(w)
    k_var = int(np.searchsorted(cum, tau * total, side="left")) + 1
    k_var = min(k_var, w.size)
    return min(d, max(k_var, K_FLOOR))


def _orthonormal_completion(rows: np.ndarray, k: int, d: int) -> np.ndarray:
    """Extend orthonormal ``rows`` to k rows using standard basis directions."""
    got = [rows[i] for i in range(rows.shape[0])]
    for j in range(d):
        if len(got) >= k:
            break
        v = np.zeros(d)
        v[j] = 1.0
        basis = np.asarray(got)
        for _ in range(2):  # re-orthogonalize once for numerical safety
            v = v - basis.T @ (basis @ v)
        norm = float(np.linalg.norm(v))
        if norm > 1e-6:
            got.append(v / norm)
    if len(got) < k:
        raise NumericError("could not complete an orthonormal component set")
    return np.asarray(got)


def _fix_signs(components: np.ndarray) -> np.ndarray:
    out = components.copy()
    for i in range(out.shape[0]):
        j = int(np.argmax(np.abs(out[i])))
        if out[i, j] < 0.0:
            out[i] = -out[i]
    return out


def fit(features, tau: float) -> PcaModel:
    """Fit PCA on rows of ``features`` and keep ``select_k`` components."""
    tau = _check_tau(tau)
    x = as_matrix(features, "pca input")
    n, d = x.shape
    if n < 2:
        raise InsufficientDataError(f"pca fit needs at least 2 rows, got {n}")
    mean = x.mean(axis=0)
    centered = x - mean
    if d <= n:
        cov = (centered.T @ centered) / (n - 1)
        cov = (cov + cov.T) / 2.0
        w, vectors = sym_eig(cov)
        eigenvalues = _clean_spectrum(w)
        available = vectors
    else:
        gram = (centered @ centered.T) / (n - 1)
        gram = (gram + gram.T) / 2.0
        mu, u = sym_eig(gram)
        mu = _clean_spectrum(mu)
        eigenvalues = np.concatenate([mu, np.zeros(d - n)])
        tol = max(float(mu[0]), 0.0) * 1e-10
        keep = mu > tol
        rows = []
        for i in np.flatnonzero(keep):
            v = centered.T @ u[i]
            rows.append(v / np.sqrt(mu[i] * (n - 1)))
        available = np.asarray(rows) if rows else np.empty((0, d))
    k = select_k(eigenvalues, tau)
    if available.shape[0] >= k:
        components = available[:k]
    else:
        components = _orthonormal_completion(available, k, d)
    components = _fix_signs(components)
    return PcaModel(mean=mean, components=components,
                    eigenvalues=eigenvalues, k=k, tau=tau)


def transform(model: PcaModel, features) -> np.ndarray:
    """Project raw rows onto the retained components: (x - mean) @ C^T."""
    x = as_matrix(features, "pca transform input")
    d = model.mean.size
    if x.shape[1] != d:
        raise ShapeError(f"pca model was fit on {d} features, input has {x.shape[1]}")
    return (x - model.mean) @ model.components.T
