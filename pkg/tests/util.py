"""Shared graph and model builders for the test suite."""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np

from gprlab import (
    GprModel,
    SparseGraph,
    add_self_loops_and_normalize,
    build_graph,
    is_connected,
)


def graph_from_edges(n: int, edges: Sequence[Tuple[int, int]]) -> SparseGraph:
    return build_graph(n, np.asarray(list(edges), dtype=np.int64).reshape(-1, 2))


def path_graph(n: int) -> SparseGraph:
    return graph_from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> SparseGraph:
    return graph_from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> SparseGraph:
    return graph_from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def complete_bipartite_graph(a: int, b: int) -> SparseGraph:
    return graph_from_edges(a + b, [(i, a + j) for i in range(a) for j in range(b)])


def random_connected_graph(
    rng: np.random.Generator, n_lo: int = 10, n_hi: int = 40, p: float = 0.25
) -> SparseGraph:
    """Erdos-Renyi draws retried until connected."""
    for _ in range(200):
        n = int(rng.integers(n_lo, n_hi + 1))
        mask = rng.random((n, n)) < p
        ii, jj = np.nonzero(np.triu(mask, 1))
        g = build_graph(n, np.column_stack([ii, jj]))
        if is_connected(g):
            return g
    raise RuntimeError("no connected sample after 200 draws")


def two_block_graph(
    rng: np.random.Generator, block: int = 25, bridges: int = 2, p: float = 0.5
) -> SparseGraph:
    """Two dense blocks joined by a few bridge edges; |lambda_2| is large and
    well separated from the floating-point floor."""
    edges: List[Tuple[int, int]] = []
    for off in (0, block):
        for i in range(block):
            for j in range(i + 1, block):
                if rng.random() < p:
                    edges.append((off + i, off + j))
        # spanning chain keeps each block connected regardless of the draw
        edges.extend((off + i, off + i + 1) for i in range(block - 1))
    for _ in range(bridges):
        edges.append((int(rng.integers(block)), block + int(rng.integers(block))))
    return graph_from_edges(2 * block, edges)


def stationary_vector(g_norm: SparseGraph) -> np.ndarray:
    """pi for a normalized graph, from the stored diagonal values."""
    deg = np.rint(1.0 / g_norm.values[np.nonzero(g_norm.row_indices == g_norm.col_idx)])
    return np.sqrt(deg) / np.sqrt(deg.sum())


def collapsed_model(
    g_norm: SparseGraph,
    beta: np.ndarray,
    gamma: np.ndarray,
    eta: float = 1.0,
) -> Tuple[GprModel, np.ndarray]:
    """Model and input whose H^(0) equals pi beta^T exactly.

    Uses a width-1 hidden layer with x = pi (positive, so ReLU passes it
    through) and w2 = beta, making every H^(k) the rank-one limit itself.
    """
    pi = stationary_vector(g_norm)
    x = pi[:, None].copy()
    beta = np.asarray(beta, dtype=np.float64)
    model = GprModel(
        w1=np.array([[1.0]]),
        b1=np.zeros(1),
        w2=beta[None, :].copy(),
        b2=np.zeros(beta.size),
        gamma=np.asarray(gamma, dtype=np.float64).copy(),
        dropout_nn=0.0,
        dropout_gpr=0.0,
        eta=eta,
    )
    return model, x


def normalized(g: SparseGraph) -> SparseGraph:
    return add_self_loops_and_normalize(g)
