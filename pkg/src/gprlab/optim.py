"""Adam with per-parameter-group settings, and windowed-average early stopping."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, Optional, Tuple

import numpy as np

__all__ = ["AdamState", "adam_step", "EarlyStop", "should_stop"]


@dataclass
class AdamState:
    """Moment buffers plus hyperparameters.

    ``lr_overrides`` and ``wd_overrides`` map parameter names to values that
    replace the defaults for that parameter; weight decay here is the L2 style
    that adds ``wd * p`` to the gradient before the moment updates.
    """

    lr: float = 0.01
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.0
    lr_overrides: Dict[str, float] = field(default_factory=dict)
    wd_overrides: Dict[str, float] = field(default_factory=dict)
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(
    state: AdamState, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]
) -> Dict[str, np.ndarray]:
    """One update. Parameters are modified in place and returned.

    Raises on non-finite gradients so a diverged run fails loudly instead of
    silently poisoning the moment buffers.
    """
    state.t += 1
    b1, b2 = state.betas
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(
                f"gradient shape {g.shape} does not match parameter "
                f"{name!r} shape {p.shape}"
            )
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient for {name!r} at step {state.t}")
        wd = state.wd_overrides.get(name, state.weight_decay)
        if wd:
            g = g + wd * p
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        lr = state.lr_overrides.get(name, state.lr)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params


@dataclass
class EarlyStop:
    """Stop when the validation loss stops improving on a trailing window.

    No stop is ever signalled during the first half of the epoch budget.
    After that, a stop fires when the incoming loss is not strictly below the
    mean of the most recent ``window`` recorded losses. Every loss is
    recorded, including those from the grace period.
    """

    max_epochs: int = 1000
    window: int = 200
    history: Deque[float] = field(default_factory=deque)

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError("window must be positive")
        self.history = deque(self.history, maxlen=self.window)


def should_stop(es: EarlyStop, epoch: int, val_loss: float) -> bool:
    """Record ``val_loss`` and decide; the mean excludes the incoming value."""
    stop = False
    if epoch > es.max_epochs / 2 and len(es.history) > 0:
        stop = bool(val_loss >= np.mean(es.history))
    es.history.append(float(val_loss))
    return stop
