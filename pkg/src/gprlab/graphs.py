"""Sparse undirected graphs in CSR form.

Provides construction from edge lists, self-loop augmentation with symmetric
degree normalization, a homophily measure, and connectivity checks. Graphs are
treated as immutable once built; normalization returns a new instance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Tuple

import numpy as np

log = logging.getLogger(__name__)

__all__ = [
    "SparseGraph",
    "LabelVector",
    "build_graph",
    "add_self_loops_and_normalize",
    "augmented_degrees",
    "homophily_index",
    "is_connected",
    "to_dense",
]


@dataclass(eq=False)
class SparseGraph:
    """Undirected graph stored in compressed sparse row form.

    The stored matrix is always symmetric, with column indices sorted inside
    each row and no duplicate entries. ``values`` hold edge weights: 1.0 for a
    freshly built unweighted graph, or the symmetric normalization entries
    1/sqrt(deg_i * deg_j) after :func:`add_self_loops_and_normalize`.

    Instances are immutable by convention and safe to share across threads.
    """

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    has_self_loops: bool = False
    normalized: bool = False

    @property
    def nnz(self) -> int:
        return int(self.col_idx.size)

    @cached_property
    def row_indices(self) -> np.ndarray:
        """Row index of each stored entry (cached, used by multiply kernels)."""
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.row_ptr))

    def neighbors(self, i: int) -> np.ndarray:
        return self.col_idx[self.row_ptr[i] : self.row_ptr[i + 1]]


@dataclass(eq=False)
class LabelVector:
    """Node class assignments: integer labels in ``[0, num_classes)``."""

    labels: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1:
            raise ValueError("labels must be a 1-d sequence")
        if self.num_classes < 2:
            raise ValueError("num_classes must be at least 2")
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.num_classes
        ):
            raise ValueError(
                f"labels must lie in [0, {self.num_classes}); "
                f"got range [{self.labels.min()}, {self.labels.max()}]"
            )

    def __len__(self) -> int:
        return int(self.labels.size)

    def one_hot(self) -> np.ndarray:
        out = np.zeros((self.labels.size, self.num_classes))
        out[np.arange(self.labels.size), self.labels] = 1.0
        return out


def build_graph(n: int, edges: Iterable[Tuple[int, int]]) -> SparseGraph:
    """Build a simple undirected graph from an edge list.

    Edges are symmetrized and deduplicated. Self-pairs ``(i, i)`` are accepted
    in the input but dropped: raw graphs are simple, and the diagonal is added
    later by normalization.

    Parameters
    ----------
    n : int
        Node count, must be positive.
    edges : iterable of (int, int)
        Endpoint pairs, each in ``[0, n)``.
    """
    if n <= 0:
        raise ValueError(f"node count must be positive, got {n}")
    pairs = np.asarray(list(edges), dtype=np.int64)
    if pairs.size == 0:
        pairs = pairs.reshape(0, 2)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("edges must be a sequence of (i, j) pairs")
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
        bad = pairs[(pairs < 0).any(axis=1) | (pairs >= n).any(axis=1)][0]
        raise ValueError(f"edge ({bad[0]}, {bad[1]}) out of range for n={n}")

    loops = pairs[:, 0] == pairs[:, 1]
    if loops.any():
        log.debug("build_graph: dropping %d self-pair(s)", int(loops.sum()))
        pairs = pairs[~loops]

    if pairs.size:
        both = np.concatenate([pairs, pairs[:, ::-1]], axis=0)
        both = np.unique(both, axis=0)  # sorts by row then column, dedups
        rows, cols = both[:, 0], both[:, 1]
    else:
        rows = cols = np.empty(0, dtype=np.int64)

    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=row_ptr[1:])
    return SparseGraph(n, row_ptr, cols, np.ones(cols.size), False, False)


def add_self_loops_and_normalize(g: SparseGraph) -> SparseGraph:
    """Return the graph with unit self-loops added and symmetric normalization.

    Entry ``(i, j)`` of the result is ``1/sqrt(deg_i * deg_j)`` where ``deg``
    counts neighbors plus the added self-loop. The result is symmetric with
    every eigenvalue in ``(-1, 1]``; the self-loops rule out bipartite
    structure, so -1 is never attained. Renormalizing raises.
    """
    if g.normalized:
        raise ValueError("graph is already normalized")
    deg = np.diff(g.row_ptr) + 1
    all_rows = np.concatenate([g.row_indices, np.arange(g.n, dtype=np.int64)])
    all_cols = np.concatenate([g.col_idx, np.arange(g.n, dtype=np.int64)])
    order = np.lexsort((all_cols, all_rows))
    rows, cols = all_rows[order], all_cols[order]
    row_ptr = np.zeros(g.n + 1, dtype=np.int64)
    np.cumsum(deg, out=row_ptr[1:])
    values = 1.0 / np.sqrt(deg[rows] * deg[cols])
    return SparseGraph(g.n, row_ptr, cols, values, True, True)


def augmented_degrees(g: SparseGraph) -> np.ndarray:
    """Self-loop-augmented degrees of a normalized graph.

    Recovered from the diagonal: after normalization the ``(i, i)`` entry is
    exactly ``1/deg_i``.
    """
    if not g.normalized:
        raise ValueError("augmented_degrees expects a normalized graph")
    diag_vals = g.values[g.row_indices == g.col_idx]
    if diag_vals.size != g.n:
        raise ValueError("normalized graph is missing diagonal entries")
    return np.rint(1.0 / diag_vals)


def homophily_index(g: SparseGraph, y: LabelVector) -> float:
    """Average fraction of same-label neighbors, over nodes that have any.

    Self-loops are excluded from the neighbor counts. Isolated nodes are
    skipped and the denominator reduced accordingly; the skip count is logged.
    """
    labels = y.labels
    if labels.size != g.n:
        raise ValueError(f"labels length {labels.size} does not match n={g.n}")
    rows, cols = g.row_indices, g.col_idx
    if g.has_self_loops:
        off = rows != cols
        rows, cols = rows[off], cols[off]
    same = (labels[rows] == labels[cols]).astype(float)
    neigh = np.bincount(rows, minlength=g.n).astype(float)
    agree = np.bincount(rows, weights=same, minlength=g.n)
    ok = neigh > 0
    skipped = int(g.n - ok.sum())
    if skipped:
        log.warning("homophily_index: skipped %d isolated node(s)", skipped)
    if not ok.any():
        raise ValueError("homophily_index is undefined on an edgeless graph")
    return float(np.mean(agree[ok] / neigh[ok]))


def is_connected(g: SparseGraph) -> bool:
    """True when every node is reachable from node 0 (frontier BFS)."""
    if g.n == 1:
        return True
    seen = np.zeros(g.n, dtype=bool)
    seen[0] = True
    frontier = np.array([0], dtype=np.int64)
    while frontier.size:
        chunks = [g.neighbors(int(i)) for i in frontier]
        cand = np.unique(np.concatenate(chunks)) if chunks else frontier[:0]
        nxt = cand[~seen[cand]]
        seen[nxt] = True
        frontier = nxt
    return bool(seen.all())


def to_dense(g: SparseGraph) -> np.ndarray:
    """Dense (n, n) copy of the stored matrix."""
    out = np.zeros((g.n, g.n))
    out[g.row_indices, g.col_idx] = g.values
    return out
