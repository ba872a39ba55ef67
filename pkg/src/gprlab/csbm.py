"""Contextual stochastic block model sampling.

Two equal communities. Edges between same-class nodes appear with probability
``(d + lam*sqrt(d))/n`` and between different classes with
``(d - lam*sqrt(d))/n``, so ``lam`` trades homophily against heterophily while
``d`` fixes the expected degree. Features are Gaussian with a class-signed
mean shift of strength ``mu`` along a random direction. The ``phi`` knob walks
the arc ``lam^2 + mu^2/xi = 1 + epsilon`` from pure-graph information
(``phi = -1`` or ``+1``) to pure-feature information (``phi = 0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .graphs import LabelVector, SparseGraph, build_graph

__all__ = [
    "CsbmSpec",
    "PhiSpec",
    "CsbmSample",
    "phi_to_lambda_mu",
    "generate",
    "generate_phi",
]


@dataclass
class CsbmSpec:
    """Direct generation parameters.

    ``lam`` is signed (negative means heterophilic); ``mu`` is nonnegative.
    Both edge probabilities must land in [0, 1], which bounds ``|lam|`` by
    ``sqrt(d)`` and ``d + |lam|*sqrt(d)`` by ``n``.
    """

    n: int
    f: int
    d: float
    lam: float
    mu: float
    seed: int

    def __post_init__(self) -> None:
        if self.n < 2 or self.n % 2:
            raise ValueError(f"n must be even and at least 2, got {self.n}")
        if self.f < 1:
            raise ValueError(f"feature dimension must be positive, got {self.f}")
        if self.d <= 0:
            raise ValueError(f"average degree must be positive, got {self.d}")
        if self.mu < 0:
            raise ValueError(f"mu must be nonnegative, got {self.mu}")
        swing = abs(self.lam) * math.sqrt(self.d)
        if self.d - swing < 0:
            raise ValueError(
                f"d - |lam|*sqrt(d) = {self.d - swing:.4f} is negative; "
                "edge probability would leave [0, 1]"
            )
        if self.d + swing > self.n:
            raise ValueError(
                f"d + |lam|*sqrt(d) = {self.d + swing:.4f} exceeds n = {self.n}"
            )


@dataclass
class PhiSpec:
    """Arc coordinate with the aspect ratio ``xi = n/f`` and margin ``epsilon``."""

    phi: float
    xi: float
    epsilon: float

    def __post_init__(self) -> None:
        if not -1.0 <= self.phi <= 1.0:
            raise ValueError(f"phi must lie in [-1, 1], got {self.phi}")
        if self.xi <= 0:
            raise ValueError(f"xi must be positive, got {self.xi}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass
class CsbmSample:
    """A generated dataset: simple graph, features, binary labels, spec echo."""

    graph: SparseGraph
    features: np.ndarray
    labels: LabelVector
    spec: CsbmSpec
    phi: Optional[PhiSpec] = None


def phi_to_lambda_mu(p: PhiSpec) -> Tuple[float, float]:
    """Map the arc coordinate to ``(lam, mu)``.

    ``lam = sqrt(1+eps) * sin(phi*pi/2)`` and
    ``mu = sqrt(xi*(1+eps)) * cos(phi*pi/2)``, which satisfies
    ``lam^2 + mu^2/xi = 1 + eps`` identically and inverts to
    ``phi = (2/pi) * arctan(lam*sqrt(xi)/mu)`` away from the endpoints.
    At ``phi = +/-1`` the cosine is truncated to exactly zero so the
    feature shift vanishes and only the edge signal survives.
    """
    half_turn = p.phi * math.pi / 2.0
    lam = math.sqrt(1.0 + p.epsilon) * math.sin(half_turn)
    mu = math.sqrt(p.xi * (1.0 + p.epsilon)) * math.cos(half_turn)
    if abs(p.phi) == 1.0:
        mu = 0.0
    return lam, mu


def generate(spec: CsbmSpec) -> CsbmSample:
    """Draw one sample. Deterministic for a fixed seed.

    The RNG stream order is pinned and load-bearing for reproducibility:
    label permutation first, then the per-row edge draws over pairs ``i < j``,
    then the mean-shift direction, then the feature noise.
    """
    n, f = spec.n, spec.f
    rng = np.random.default_rng(spec.seed)

    y = np.zeros(n, dtype=np.int64)
    y[n // 2 :] = 1
    y = y[rng.permutation(n)]
    signs = 2.0 * y - 1.0

    root_d = math.sqrt(spec.d)
    p_same = (spec.d + spec.lam * root_d) / n
    p_diff = (spec.d - spec.lam * root_d) / n

    edge_chunks = []
    for i in range(n - 1):
        draws = rng.random(n - 1 - i)
        probs = np.where(y[i + 1 :] == y[i], p_same, p_diff)
        hits = np.nonzero(draws < probs)[0]
        if hits.size:
            pairs = np.empty((hits.size, 2), dtype=np.int64)
            pairs[:, 0] = i
            pairs[:, 1] = i + 1 + hits
            edge_chunks.append(pairs)
    edges = (
        np.concatenate(edge_chunks, axis=0)
        if edge_chunks
        else np.empty((0, 2), dtype=np.int64)
    )

    direction = rng.standard_normal(f) / math.sqrt(f)
    noise = rng.standard_normal((n, f)) / math.sqrt(f)
    features = math.sqrt(spec.mu / n) * signs[:, None] * direction[None, :] + noise

    graph = build_graph(n, edges)
    return CsbmSample(graph, features, LabelVector(y, 2), spec)


def generate_phi(
    n: int, f: int, d: float, phi: float, epsilon: float, seed: int
) -> CsbmSample:
    """Sample at an arc coordinate; ``xi`` is taken as ``n/f``."""
    arc = PhiSpec(phi, n / f, epsilon)
    lam, mu = phi_to_lambda_mu(arc)
    sample = generate(CsbmSpec(n=n, f=f, d=d, lam=lam, mu=mu, seed=seed))
    sample.phi = arc
    return sample
