"""Diagnostics for the rank-one collapse of deep propagation.

Repeated multiplication by the normalized adjacency drives any signal toward
``pi @ beta.T`` where ``pi`` is the degree-profile eigenvector at eigenvalue 1
and ``beta = pi @ H_0``; once logits sit on that profile every node predicts
the same class. These helpers measure how close a forward pass is to that
state and check the escape mechanism: in the collapsed state the gradient of
each dominated mixing weight shares its sign, so descent shrinks it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Union

import numpy as np

from .graphs import LabelVector, SparseGraph, augmented_degrees, is_connected, to_dense
from .linalg import row_softmax, symmetric_eigen
from .model import ForwardCache, GprModel, forward, loss_and_backward

__all__ = [
    "StationaryProfile",
    "OversmoothReport",
    "GradientSignReport",
    "stationary_profile",
    "detect_oversmoothing",
    "gradient_sign_check",
    "sharpened_argmax",
]


@dataclass
class StationaryProfile:
    """Unit eigenvector at eigenvalue 1, its projection of H_0, and the
    magnitude of the second-largest eigenvalue (the convergence rate)."""

    pi: np.ndarray
    beta: np.ndarray
    lambda2: float


def stationary_profile(
    g: SparseGraph, h0: np.ndarray, eigen_cap: int = 2000
) -> StationaryProfile:
    """Closed-form limit profile of repeated propagation.

    ``pi[i] = sqrt(deg_i) / sqrt(sum_v deg_v)`` over self-loop-augmented
    degrees, normalized to unit length; ``beta = pi @ h0``. Requires a
    connected normalized graph: with a second unit eigenvalue the limit is not
    rank one.
    """
    if not g.normalized:
        raise ValueError("stationary_profile expects a normalized graph")
    if not is_connected(g):
        raise ValueError("stationary_profile requires a connected graph")
    deg = augmented_degrees(g)
    pi = np.sqrt(deg)
    pi /= np.linalg.norm(pi)
    h0 = np.asarray(h0, dtype=np.float64)
    if h0.shape[0] != g.n:
        raise ValueError(f"h0 rows {h0.shape[0]} do not match n={g.n}")
    beta = pi @ h0
    dec = symmetric_eigen(to_dense(g), max_n=eigen_cap)
    lambda2 = float(np.abs(dec.eigenvalues[1:]).max()) if g.n > 1 else 0.0
    return StationaryProfile(pi, beta, lambda2)


@dataclass
class OversmoothReport:
    """Raw notes on prediction collapse for one eval-mode forward pass."""

    modal_fraction: float
    modal_label: int
    profile_residual: float
    oversmoothed: bool


def detect_oversmoothing(cache: ForwardCache) -> OversmoothReport:
    """Measure how collapsed the predictions in a forward cache are.

    Reports the fraction of nodes sharing the modal predicted label, the max
    distance of each logit column from its best multiple of the stationary
    profile, and a flag at modal fraction >= 0.999 (a hair under 1.0 to absorb
    floating-point argmax ties).
    """
    if cache.training:
        raise ValueError("detect_oversmoothing expects an eval-mode cache")
    preds = np.argmax(cache.p_hat, axis=1)
    counts = np.bincount(preds, minlength=cache.p_hat.shape[1])
    modal_label = int(np.argmax(counts))
    modal_fraction = float(counts[modal_label] / preds.size)

    deg = augmented_degrees(cache.graph)
    pi = np.sqrt(deg)
    pi /= np.linalg.norm(pi)
    coef = pi @ cache.z  # least-squares multiple per column, pi has unit norm
    residual = float(np.abs(cache.z - np.outer(pi, coef)).max())
    return OversmoothReport(modal_fraction, modal_label, residual, modal_fraction >= 0.999)


@dataclass
class GradientSignReport:
    """Per-hop sign comparison between gamma and its gradient.

    ``dominated`` lists the hops whose propagated state has essentially
    reached the rank-one profile; ``agreements`` covers those hops (skipping
    exact-zero weights, whose sign is undefined).
    """

    dominated: List[int]
    gamma: np.ndarray
    gamma_grad: np.ndarray
    agreements: Dict[int, bool]
    all_agree: bool
    modal_fraction: float


def gradient_sign_check(
    model: GprModel,
    g: SparseGraph,
    x: np.ndarray,
    y: Union[LabelVector, np.ndarray],
    train_idx: np.ndarray,
    eta: float = 1e4,
    residual_tol: float = 1e-6,
) -> GradientSignReport:
    """Check the escape direction of the mixing weights in a collapsed state.

    Runs an eval forward pass at a sharpened softmax (the sign argument is an
    asymptotic statement in ``eta``; at eta near 1 weakly separated profiles
    blur it), verifies the state is collapsed, then compares
    ``sign(dL/dgamma[k])`` with ``sign(gamma[k])`` for every hop k whose
    state is within ``residual_tol * max|H_0|`` of the rank-one profile.

    Raises when the state is not collapsed or when the training set misses a
    class: with an uncovered class the gradient can sit exactly at zero and
    the sign claim degenerates.
    """
    labels = y.labels if isinstance(y, LabelVector) else np.asarray(y)
    num_classes = (
        y.num_classes if isinstance(y, LabelVector) else int(labels.max()) + 1
    )
    idx = np.asarray(train_idx, dtype=np.int64)
    present = np.unique(labels[idx])
    if present.size < num_classes:
        missing = sorted(set(range(num_classes)) - set(present.tolist()))
        raise ValueError(f"training set misses class(es) {missing}")

    sharp = model.copy()
    sharp.eta = float(eta)
    cache = forward(sharp, g, x, training=False)
    report = detect_oversmoothing(cache)
    if not report.oversmoothed:
        raise ValueError(
            f"model is not in a collapsed state (modal fraction "
            f"{report.modal_fraction:.4f})"
        )

    deg = augmented_degrees(g)
    pi = np.sqrt(deg)
    pi /= np.linalg.norm(pi)
    beta = pi @ cache.hs[0]
    limit = np.outer(pi, beta)
    h0_scale = float(np.abs(cache.hs[0]).max())
    dominated = [
        k
        for k, h_k in enumerate(cache.hs)
        if float(np.abs(h_k - limit).max()) < residual_tol * h0_scale
    ]

    _, grads = loss_and_backward(sharp, cache, labels, idx)
    dgamma = grads["gamma"]
    agreements = {
        k: bool(np.sign(dgamma[k]) == np.sign(model.gamma[k]))
        for k in dominated
        if model.gamma[k] != 0.0
    }
    all_agree = bool(agreements) and all(agreements.values())
    return GradientSignReport(
        dominated, model.gamma.copy(), dgamma, agreements, all_agree, report.modal_fraction
    )


def sharpened_argmax(beta: np.ndarray, eta: float) -> np.ndarray:
    """Softmax of a vector at sharpness ``eta``; ``eta = inf`` gives the exact
    indicator of the max with ties split evenly."""
    beta = np.asarray(beta, dtype=np.float64)
    if beta.ndim != 1:
        raise ValueError("beta must be a vector")
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta must be finite")
    if np.isinf(eta):
        hit = beta == beta.max()
        return hit / hit.sum()
    return row_softmax(beta[None, :], eta)[0]
