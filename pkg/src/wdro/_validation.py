"""Small input-validation helpers used by the public entry points."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NotPSD, NotSymmetric

__all__ = [
    "as_vector",
    "as_matrix",
    "as_samples",
    "check_symmetric",
    "check_psd",
    "check_weights",
]


def as_vector(x, name: str = "x") -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def as_matrix(x, name: str = "A") -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def as_samples(x, name: str = "samples") -> np.ndarray:
    """Coerce to an (N, m) sample array; 1-D input is read as N scalars."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 1- or 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def check_symmetric(a, tol: float = 1e-9, name: str = "A") -> np.ndarray:
    a = as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    scale = 1.0 + np.abs(a).max(initial=0.0)
    if np.abs(a - a.T).max(initial=0.0) > tol * scale:
        raise NotSymmetric(f"{name} is not symmetric within tolerance {tol}")
    return 0.5 * (a + a.T)


def check_psd(a, tol: float = 1e-9, name: str = "A") -> np.ndarray:
    """Symmetrize and verify eigenvalues >= -tol * scale; returns the symmetrized matrix."""
    s = check_symmetric(a, tol, name)
    w = np.linalg.eigvalsh(s)
    scale = 1.0 + np.abs(w).max(initial=0.0)
    if w.min(initial=0.0) < -tol * scale:
        raise NotPSD(f"{name} has eigenvalue {w.min():.3e} below -{tol} * scale")
    return s


def check_weights(w, tol: float = 1e-12, name: str = "weights") -> np.ndarray:
    w = as_vector(w, name)
    if np.any(w < -tol):
        raise ValueError(f"{name} must be nonnegative")
    total = float(w.sum())
    if abs(total - 1.0) > max(tol, 1e-12 * len(w)):
        raise ValueError(f"{name} must sum to one, got {total!r}")
    return np.clip(w, 0.0, None)
