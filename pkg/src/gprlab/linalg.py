"""Numerical kernels: CSR times dense products, eigensolve, stable softmax.

Everything is float64. The dense matrix type throughout the package is the
plain numpy ndarray; the helpers here exist so callers have one audited path
for the handful of operations the rest of the package is built on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import SparseGraph

__all__ = [
    "EigenDecomposition",
    "spmm",
    "symmetric_eigen",
    "row_softmax",
    "matmul",
    "add",
    "scale",
    "transpose",
]


def spmm(g: SparseGraph, h: np.ndarray) -> np.ndarray:
    """Sparse times dense product ``A @ h`` for a CSR graph.

    Accumulation is per output column via bincount over the stored entries,
    which keeps the summation order fixed so single-threaded runs are
    bit-reproducible. A 1-d ``h`` is treated as a single column.
    """
    h = np.asarray(h, dtype=np.float64)
    squeeze = h.ndim == 1
    if squeeze:
        h = h[:, None]
    if h.ndim != 2:
        raise ValueError("h must be 1-d or 2-d")
    if h.shape[0] != g.n:
        raise ValueError(f"dimension mismatch: graph has {g.n} rows, h has {h.shape[0]}")
    contrib = g.values[:, None] * h[g.col_idx]
    rows = g.row_indices
    out = np.empty((g.n, h.shape[1]))
    for j in range(h.shape[1]):
        out[:, j] = np.bincount(rows, weights=contrib[:, j], minlength=g.n)
    return out[:, 0] if squeeze else out


@dataclass
class EigenDecomposition:
    """Eigenvalues in descending order with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def symmetric_eigen(
    a: np.ndarray, tol: float = 1e-10, max_n: int = 2000
) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    a : (n, n) array
        Must be symmetric to within ``tol`` in max norm.
    tol : float
        Symmetry tolerance.
    max_n : int
        Size cap; the dense solve is meant for diagnostic-scale matrices.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("input must be a square matrix")
    if a.shape[0] > max_n:
        raise ValueError(f"matrix size {a.shape[0]} exceeds the cap of {max_n}")
    if not np.all(np.isfinite(a)):
        raise ValueError("input contains non-finite entries")
    asym = np.abs(a - a.T).max() if a.size else 0.0
    if asym > tol:
        raise ValueError(f"matrix is not symmetric: max |a - a.T| = {asym:.3e}")
    w, v = np.linalg.eigh(a)
    order = np.argsort(-w, kind="stable")
    return EigenDecomposition(w[order], v[:, order])


def row_softmax(logits: np.ndarray, eta: float = 1.0) -> np.ndarray:
    """Row-wise softmax of ``eta * logits`` with max-subtraction.

    ``eta`` sharpens the distribution; 1.0 recovers the standard softmax.
    Rows sum to 1 and the result is invariant to adding a constant per row.
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    z = eta * np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=np.float64) @ np.asarray(b, dtype=np.float64)


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=np.float64) + np.asarray(b, dtype=np.float64)


def scale(a: np.ndarray, c: float) -> np.ndarray:
    return float(c) * np.asarray(a, dtype=np.float64)


def transpose(a: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=np.float64).T.copy()
