"""The propagation model: a two-layer ReLU MLP feeding K rounds of graph
propagation, mixed by a learnable weight per hop, with fully analytic
gradients.

The forward pass is ``Z = sum_k gamma[k] * H_k`` where ``H_0`` is the MLP
output and ``H_k = A_sym @ H_{k-1}``. Predictions are ``row_softmax(Z, eta)``.
The backward pass returns exact gradients for the MLP parameters and for
``gamma``; nothing here relies on autodiff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .graphs import LabelVector, SparseGraph
from .linalg import row_softmax, spmm

__all__ = [
    "GprModel",
    "ForwardCache",
    "ppr_weights",
    "delta_weights",
    "nppr_weights",
    "random_weights",
    "parse_gamma_scheme",
    "init_model",
    "forward",
    "loss_and_backward",
    "cross_entropy",
]


@dataclass(eq=False)
class GprModel:
    """Parameters of the model.

    ``gamma`` has length ``K + 1``: one mixing weight per propagation hop,
    including the un-propagated MLP output at k = 0. ``eta`` scales the logits
    inside the softmax; training uses 1.0, larger values exist for the
    sharpened-argmax diagnostics.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    gamma: np.ndarray
    dropout_nn: float = 0.5
    dropout_gpr: float = 0.0
    eta: float = 1.0

    def __post_init__(self) -> None:
        self.gamma = np.asarray(self.gamma, dtype=np.float64)
        for name in ("w1", "b1", "w2", "b2"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if not (0 <= self.dropout_nn < 1 and 0 <= self.dropout_gpr < 1):
            raise ValueError("dropout rates must lie in [0, 1)")
        if self.eta <= 0:
            raise ValueError("eta must be positive")

    @property
    def K(self) -> int:
        return int(self.gamma.size - 1)

    @property
    def in_dim(self) -> int:
        return int(self.w1.shape[0])

    @property
    def hidden_dim(self) -> int:
        return int(self.w1.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.w2.shape[1])

    def params(self) -> Dict[str, np.ndarray]:
        """Live parameter arrays, keyed for the optimizer."""
        return {
            "w1": self.w1,
            "b1": self.b1,
            "w2": self.w2,
            "b2": self.b2,
            "gamma": self.gamma,
        }

    def copy(self) -> "GprModel":
        return GprModel(
            self.w1.copy(),
            self.b1.copy(),
            self.w2.copy(),
            self.b2.copy(),
            self.gamma.copy(),
            self.dropout_nn,
            self.dropout_gpr,
            self.eta,
        )


@dataclass(eq=False)
class ForwardCache:
    """Everything the backward pass and the diagnostics need.

    ``hs`` holds the propagated states H_0 .. H_K before any GPR dropout;
    ``gpr_masks`` are the inverted-dropout masks applied to each hop's
    contribution (None in eval mode or at rate 0).
    """

    graph: SparseGraph
    xd: np.ndarray
    pre1: np.ndarray
    a1d: np.ndarray
    mask1: Optional[np.ndarray]
    mask2: Optional[np.ndarray]
    hs: List[np.ndarray]
    gpr_masks: Optional[List[np.ndarray]]
    z: np.ndarray
    p_hat: np.ndarray
    training: bool


def ppr_weights(alpha: float, K: int) -> np.ndarray:
    """Geometric restart weights ``alpha*(1-alpha)^k`` with the tail mass
    ``(1-alpha)^K`` folded into the last entry so the vector sums to 1
    exactly."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    g = alpha * (1.0 - alpha) ** np.arange(K + 1, dtype=np.float64)
    g[K] = (1.0 - alpha) ** K
    return g


def delta_weights(k_star: int, K: int) -> np.ndarray:
    """All mass on a single hop ``k_star``."""
    if not 0 <= k_star <= K:
        raise ValueError(f"k_star must lie in [0, {K}], got {k_star}")
    g = np.zeros(K + 1)
    g[k_star] = 1.0
    return g


def nppr_weights(alpha: float, K: int) -> np.ndarray:
    """Alternating-sign weights ``(-alpha)^k`` normalized by total mass."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    g = (-alpha) ** np.arange(K + 1, dtype=np.float64)
    return g / np.abs(g).sum()


def random_weights(
    K: int, rng: np.random.Generator, scale: Optional[float] = None
) -> np.ndarray:
    """Uniform weights in ``[-scale, +scale]``; default scale 1/sqrt(K+1)."""
    if scale is None:
        scale = 1.0 / math.sqrt(K + 1)
    return rng.uniform(-scale, scale, K + 1)


def parse_gamma_scheme(
    text: str, K: int, rng: Optional[np.random.Generator] = None
) -> np.ndarray:
    """Parse a scheme string into a weight vector of length K+1.

    Accepted forms: ``ppr:ALPHA``, ``delta:K_STAR``, ``nppr:ALPHA``,
    ``random`` or ``random:SCALE``, and ``raw:v0,v1,...`` for an explicit
    vector.
    """
    kind, _, arg = text.strip().partition(":")
    kind = kind.lower()
    if kind == "ppr":
        return ppr_weights(float(arg) if arg else 0.1, K)
    if kind == "delta":
        return delta_weights(int(arg) if arg else K, K)
    if kind == "nppr":
        return nppr_weights(float(arg) if arg else 0.9, K)
    if kind == "random":
        if rng is None:
            raise ValueError("random gamma scheme needs an rng")
        return random_weights(K, rng, float(arg) if arg else None)
    if kind == "raw":
        g = np.array([float(t) for t in arg.split(",")], dtype=np.float64)
        if g.size != K + 1:
            raise ValueError(f"raw gamma needs {K + 1} values, got {g.size}")
        return g
    raise ValueError(
        f"unknown gamma scheme {text!r}; expected ppr:A, delta:K, nppr:A, "
        "random[:SCALE], or raw:v0,v1,..."
    )


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out))


def init_model(
    f: int,
    h: int,
    C: int,
    K: int,
    scheme: Union[str, np.ndarray] = "ppr:0.1",
    seed: int = 0,
    dropout_nn: float = 0.5,
    dropout_gpr: float = 0.0,
    eta: float = 1.0,
) -> GprModel:
    """Fresh model: Glorot-uniform MLP weights, zero biases, scheme-set gamma.

    The draw order (w1, then w2, then a random gamma if requested) is fixed so
    a seed pins the full initialization.
    """
    if min(f, h, C, K + 1) < 1:
        raise ValueError("all dimensions must be positive")
    rng = np.random.default_rng(seed)
    w1 = _glorot(rng, f, h)
    w2 = _glorot(rng, h, C)
    if isinstance(scheme, str):
        gamma = parse_gamma_scheme(scheme, K, rng)
    else:
        gamma = np.asarray(scheme, dtype=np.float64).copy()
        if gamma.size != K + 1:
            raise ValueError(f"gamma length {gamma.size} does not match K={K}")
    return GprModel(
        w1, np.zeros(h), w2, np.zeros(C), gamma, dropout_nn, dropout_gpr, eta
    )


def _dropout_mask(
    rng: np.random.Generator, shape: Tuple[int, ...], rate: float
) -> np.ndarray:
    # inverted dropout: surviving entries are scaled so expectations match
    return (rng.random(shape) >= rate) / (1.0 - rate)


def forward(
    model: GprModel,
    g: SparseGraph,
    x: np.ndarray,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> ForwardCache:
    """Run the model on all nodes.

    In training mode, dropout is applied to the input of both MLP layers at
    ``dropout_nn`` and independently to each hop's contribution at
    ``dropout_gpr``; an ``rng`` is then required. Eval mode applies no dropout
    and is deterministic.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("features must be 2-d")
    if x.shape[0] != g.n:
        raise ValueError(f"feature rows {x.shape[0]} do not match n={g.n}")
    if x.shape[1] != model.in_dim:
        raise ValueError(
            f"feature dim {x.shape[1]} does not match model input {model.in_dim}"
        )
    if not g.normalized:
        raise ValueError("forward expects a normalized graph")
    use_nn_drop = training and model.dropout_nn > 0
    use_gpr_drop = training and model.dropout_gpr > 0
    if (use_nn_drop or use_gpr_drop) and rng is None:
        raise ValueError("training forward with dropout requires an rng")

    mask1 = mask2 = None
    xd = x
    if use_nn_drop:
        mask1 = _dropout_mask(rng, x.shape, model.dropout_nn)
        xd = x * mask1
    pre1 = xd @ model.w1 + model.b1
    a1 = np.maximum(pre1, 0.0)
    a1d = a1
    if use_nn_drop:
        mask2 = _dropout_mask(rng, a1.shape, model.dropout_nn)
        a1d = a1 * mask2
    h0 = a1d @ model.w2 + model.b2

    hs = [h0]
    for _ in range(model.K):
        hs.append(spmm(g, hs[-1]))

    gpr_masks = None
    if use_gpr_drop:
        gpr_masks = [
            _dropout_mask(rng, h0.shape, model.dropout_gpr) for _ in range(model.K + 1)
        ]

    z = np.zeros_like(h0)
    for k, h_k in enumerate(hs):
        dropped = h_k if gpr_masks is None else h_k * gpr_masks[k]
        z += model.gamma[k] * dropped
    p_hat = row_softmax(z, model.eta)
    return ForwardCache(
        graph=g,
        xd=xd,
        pre1=pre1,
        a1d=a1d,
        mask1=mask1,
        mask2=mask2,
        hs=hs,
        gpr_masks=gpr_masks,
        z=z,
        p_hat=p_hat,
        training=training,
    )


def cross_entropy(
    p_hat: np.ndarray, y: Union[LabelVector, np.ndarray], idx: np.ndarray
) -> float:
    """Mean negative log-probability of the true class over ``idx``."""
    labels = y.labels if isinstance(y, LabelVector) else np.asarray(y)
    idx = np.asarray(idx, dtype=np.int64)
    picked = p_hat[idx, labels[idx]]
    return float(-np.log(np.maximum(picked, 1e-300)).mean())


def loss_and_backward(
    model: GprModel,
    cache: ForwardCache,
    y: Union[LabelVector, np.ndarray],
    train_idx: np.ndarray,
    weight_decay: float = 0.0,
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Cross-entropy loss on the training nodes plus exact gradients.

    The loss is the mean over the training set, with an optional
    ``0.5 * weight_decay * (|w1|^2 + |w2|^2)`` penalty; biases and gamma are
    never decayed. The gamma gradient is
    ``(eta/|T|) * sum_i <p_hat_i - y_i, H_k_i>`` with the hop's dropout mask
    folded in when one was used.
    """
    idx = np.asarray(train_idx, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("training index set is empty")
    labels = y.labels if isinstance(y, LabelVector) else np.asarray(y)
    p_hat, z = cache.p_hat, cache.z
    eta = model.eta

    loss = cross_entropy(p_hat, labels, idx)
    if weight_decay:
        loss += 0.5 * weight_decay * (
            float(np.sum(model.w1 * model.w1)) + float(np.sum(model.w2 * model.w2))
        )

    dz = np.zeros_like(z)
    dz[idx] = p_hat[idx]
    dz[idx, labels[idx]] -= 1.0
    dz[idx] *= eta / idx.size

    K = model.K
    dgamma = np.empty(K + 1)
    masked_dz: List[np.ndarray] = []
    for k in range(K + 1):
        mdz = dz if cache.gpr_masks is None else dz * cache.gpr_masks[k]
        masked_dz.append(mdz)
        dgamma[k] = float(np.vdot(mdz, cache.hs[k]))

    # walk the propagation chain backwards; the graph is symmetric so the
    # adjoint of spmm is spmm itself
    t = model.gamma[K] * masked_dz[K]
    for k in range(K - 1, -1, -1):
        t = model.gamma[k] * masked_dz[k] + spmm(cache.graph, t)
    dh0 = t

    dw2 = cache.a1d.T @ dh0
    db2 = dh0.sum(axis=0)
    da1 = dh0 @ model.w2.T
    if cache.mask2 is not None:
        da1 = da1 * cache.mask2
    dpre1 = da1 * (cache.pre1 > 0)
    dw1 = cache.xd.T @ dpre1
    db1 = dpre1.sum(axis=0)
    if weight_decay:
        dw1 += weight_decay * model.w1
        dw2 += weight_decay * model.w2
    return loss, {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2, "gamma": dgamma}
