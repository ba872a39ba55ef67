"""Polynomial filter responses over graph spectra.

A weight vector ``gamma`` defines the filter ``g(lam) = sum_k gamma[k] lam^k``
acting on the eigenvalues of the normalized adjacency. Relative response
magnitudes against the top eigenvalue decide whether a scheme attenuates or
amplifies the oscillatory end of the spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as npp

from .graphs import SparseGraph, to_dense

__all__ = [
    "LOW_PASS",
    "HIGH_PASS",
    "MIXED",
    "FilterResponse",
    "FilterClassification",
    "filter_response",
    "classify_filter",
    "ppr_limit_matrix",
]

LOW_PASS = "low_pass"
HIGH_PASS = "high_pass"
MIXED = "mixed"

# relative threshold below which g at the top eigenvalue counts as zero and
# response ratios become undefined
_RATIO_EPS = 1e-14


@dataclass
class FilterResponse:
    """Filter values on a grid of eigenvalues.

    ``ratios`` are ``|g(lam_i) / g(lam_1)|`` with ``lam_1`` the largest grid
    point; None when ``g(lam_1)`` vanishes.
    """

    gamma: np.ndarray
    lambdas: np.ndarray
    response: np.ndarray
    lambda1: float
    ratios: Optional[np.ndarray]


def filter_response(gamma: np.ndarray, lambdas: np.ndarray) -> FilterResponse:
    """Evaluate the polynomial filter on a grid (Horner scheme)."""
    gamma = np.asarray(gamma, dtype=np.float64)
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if gamma.ndim != 1 or gamma.size == 0:
        raise ValueError("gamma must be a nonempty 1-d vector")
    if lambdas.ndim != 1 or lambdas.size == 0:
        raise ValueError("lambdas must be a nonempty 1-d grid")
    response = npp.polyval(lambdas, gamma)
    lambda1 = float(lambdas.max())
    g1 = float(npp.polyval(lambda1, gamma))
    scale_ref = max(1.0, float(np.abs(response).max()))
    ratios = None if abs(g1) < _RATIO_EPS * scale_ref else np.abs(response / g1)
    return FilterResponse(gamma, lambdas, response, lambda1, ratios)


@dataclass
class FilterClassification:
    """Verdict plus the extremal ratios that produced it."""

    kind: str
    max_ratio_rest: float
    ratio_at_most_negative: float
    low_pass_margin: float


def classify_filter(gamma: np.ndarray, graph_spectrum: np.ndarray) -> FilterClassification:
    """Classify a weight scheme on a connected graph's spectrum.

    ``low_pass`` when every ratio below the top eigenvalue is strictly under
    one; ``high_pass`` when the ratio at the most negative eigenvalue exceeds
    one; ``mixed`` otherwise. The spectrum must come from a connected
    normalized graph, so the top eigenvalue is 1 and is simple.
    """
    s = np.sort(np.asarray(graph_spectrum, dtype=np.float64))[::-1]
    if s.size == 0:
        raise ValueError("empty spectrum")
    if abs(s[0] - 1.0) > 1e-8:
        raise ValueError(f"top eigenvalue is {s[0]:.6f}, expected 1 (normalized graph)")
    if s.size > 1 and s[1] > 1.0 - 1e-8:
        raise ValueError(
            "second eigenvalue equals 1: the graph is disconnected and the "
            "classification preconditions fail"
        )
    resp = filter_response(gamma, s)
    if resp.ratios is None:
        raise ValueError("filter response vanishes at the top eigenvalue")
    rest = resp.ratios[1:]
    max_rest = float(rest.max()) if rest.size else 0.0
    ratio_neg = float(resp.ratios[-1]) if s.size > 1 else 0.0
    if rest.size and np.all(rest < 1.0):
        kind = LOW_PASS
    elif rest.size and ratio_neg > 1.0:
        kind = HIGH_PASS
    else:
        kind = MIXED if rest.size else LOW_PASS
    return FilterClassification(kind, max_rest, ratio_neg, 1.0 - max_rest)


def ppr_limit_matrix(g: SparseGraph, alpha: float, max_n: int = 2000) -> np.ndarray:
    """Closed-form limit of restart-weighted propagation:
    ``alpha * (I - (1-alpha) A_sym)^{-1}``.

    Solved as a dense linear system; the spectrum bound |lam| <= 1 makes the
    system nonsingular for any positive alpha, but a singular solve is still
    surfaced clearly.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if not g.normalized:
        raise ValueError("ppr_limit_matrix expects a normalized graph")
    if g.n > max_n:
        raise ValueError(f"graph size {g.n} exceeds the dense-solve cap {max_n}")
    a = to_dense(g)
    system = np.eye(g.n) - (1.0 - alpha) * a
    try:
        return np.linalg.solve(system, alpha * np.eye(g.n))
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"propagation limit system is singular: {exc}") from exc
