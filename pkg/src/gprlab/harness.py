"""Transductive splits, full-batch training loops, and multi-seed sweeps.

Every run is deterministic given the master seed: dataset, split,
initialization, and dropout each draw from an integer seed derived through
``numpy.random.SeedSequence([master, tag, phi_key, run, ...])`` with fixed
per-purpose tags, so results are bit-reproducible single-threaded.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .csbm import generate_phi
from .graphs import LabelVector, SparseGraph, add_self_loops_and_normalize
from .model import GprModel, cross_entropy, forward, init_model, loss_and_backward
from .optim import AdamState, EarlyStop, adam_step, should_stop
from .oversmooth import detect_oversmoothing

log = logging.getLogger(__name__)

__all__ = [
    "REGIMES",
    "Split",
    "TrainConfig",
    "RunResult",
    "ExperimentResult",
    "make_split",
    "evaluate",
    "make_model",
    "train_model",
    "run_experiment",
    "run_phi_sweep",
    "write_results_csv",
    "write_aggregates_csv",
    "write_gamma_trajectory_csv",
]

# train / validation fractions; the rest is test
REGIMES: Dict[str, Tuple[float, float]] = {
    "sparse": (0.025, 0.025),
    "dense": (0.60, 0.20),
}

MODEL_NAMES = ("gprgnn", "appnp", "sgc", "mlp")

# stream tags for seed derivation
_TAG_DATASET = 0xDA7A
_TAG_SPLIT = 0x5917
_TAG_INIT = 0x1417
_TAG_DROPOUT = 0xD0D0


def derive_seed(*entropy: int) -> int:
    """Collapse an entropy tuple into one reproducible integer seed."""
    ss = np.random.SeedSequence(list(entropy))
    return int(ss.generate_state(1, np.uint64)[0])


def _phi_key(phi: Optional[float]) -> int:
    return 0 if phi is None else int(round((phi + 2.0) * 1000))


@dataclass(eq=False)
class Split:
    """Disjoint train/val/test node index sets."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    regime: str
    seed: int


def make_split(
    n: int, y: Union[LabelVector, np.ndarray], regime: str, seed: int
) -> Split:
    """Sample a transductive split.

    The training set is class balanced: the target size is divided evenly
    across classes, with the remainder spread one node at a time over a
    shuffled class order, so per-class counts differ by at most one.
    Validation is drawn uniformly from the remainder and the rest is test.
    """
    labels = y.labels if isinstance(y, LabelVector) else np.asarray(y, dtype=np.int64)
    num_classes = (
        y.num_classes if isinstance(y, LabelVector) else int(labels.max()) + 1
    )
    if labels.size != n:
        raise ValueError(f"labels length {labels.size} does not match n={n}")
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {sorted(REGIMES)}")
    train_frac, val_frac = REGIMES[regime]
    target_train = int(round(train_frac * n))
    target_val = int(round(val_frac * n))
    if target_train < 1:
        raise ValueError(f"train fraction {train_frac} yields an empty training set")

    rng = np.random.default_rng(seed)
    pools: List[np.ndarray] = []
    for c in range(num_classes):
        pool = np.nonzero(labels == c)[0]
        if pool.size == 0:
            raise ValueError(f"class {c} has no nodes")
        rng.shuffle(pool)
        pools.append(pool)

    base, extra = divmod(target_train, num_classes)
    counts = np.full(num_classes, base, dtype=np.int64)
    counts[rng.permutation(num_classes)[:extra]] += 1
    for c in range(num_classes):
        if counts[c] > pools[c].size:
            raise ValueError(
                f"class {c} has {pools[c].size} nodes but the balanced "
                f"training set needs {counts[c]}"
            )
    train = np.concatenate([pools[c][: counts[c]] for c in range(num_classes)])
    rest = np.concatenate([pools[c][counts[c] :] for c in range(num_classes)])
    rng.shuffle(rest)
    val, test = rest[:target_val], rest[target_val:]
    return Split(np.sort(train), np.sort(val), np.sort(test), regime, int(seed))


def evaluate(model: GprModel, cache, split: Split, y: Union[LabelVector, np.ndarray]) -> float:
    """Test accuracy of the cached predictions; argmax ties resolve to the
    lowest class index, which is numpy's argmax convention."""
    labels = y.labels if isinstance(y, LabelVector) else np.asarray(y)
    preds = np.argmax(cache.p_hat, axis=1)
    return float((preds[split.test] == labels[split.test]).mean())


@dataclass
class TrainConfig:
    """Knobs for one training run. ``gamma_lr`` of None reuses ``lr``."""

    lr: float = 0.01
    weight_decay: float = 0.0005
    gamma_lr: Optional[float] = None
    max_epochs: int = 1000
    es_window: int = 200
    record_every: int = 10
    train_gamma: bool = True


@dataclass(eq=False)
class RunResult:
    """Everything recorded about a single training run."""

    accuracy: float
    epoch0_accuracy: float
    epoch0_modal_fraction: float
    best_val_loss: float
    best_epoch: int
    epochs_run: int
    gamma_init: np.ndarray
    gamma_best: np.ndarray
    gamma_trajectory: List[Tuple[int, np.ndarray]]
    val_losses: List[float]
    train_losses: List[float]
    best_model: Optional[GprModel]
    failed: bool = False
    seed: int = 0


def train_model(
    model: GprModel,
    g: SparseGraph,
    x: np.ndarray,
    y: Union[LabelVector, np.ndarray],
    split: Split,
    config: TrainConfig,
    rng: Optional[np.random.Generator] = None,
) -> RunResult:
    """Full-batch training with Adam and windowed early stopping.

    The model is evaluated before each update, so epoch 0 reflects the
    initialization, and the parameters at the best validation loss are kept
    for the reported test accuracy. Weight decay flows through the loss
    gradient, never through the optimizer, so it is applied exactly once.
    A run that produces a non-finite loss or gradient is marked failed.
    """
    labels = y if isinstance(y, LabelVector) else LabelVector(y, int(np.max(y)) + 1)
    rng = rng if rng is not None else np.random.default_rng(0)
    params = model.params()
    if not config.train_gamma:
        params = {k: v for k, v in params.items() if k != "gamma"}
    opt = AdamState(
        lr=config.lr,
        lr_overrides={} if config.gamma_lr is None else {"gamma": config.gamma_lr},
    )
    es = EarlyStop(max_epochs=config.max_epochs, window=config.es_window)

    gamma_init = model.gamma.copy()
    trajectory: List[Tuple[int, np.ndarray]] = []
    val_losses: List[float] = []
    train_losses: List[float] = []
    best_val = np.inf
    best_epoch = -1
    best_model: Optional[GprModel] = None
    best_accuracy = 0.0
    epoch0_accuracy = 0.0
    epoch0_modal = 0.0
    failed = False
    epoch = 0

    for epoch in range(config.max_epochs + 1):
        cache = forward(model, g, x, training=False)
        val_loss = cross_entropy(cache.p_hat, labels, split.val)
        val_losses.append(val_loss)
        if epoch % config.record_every == 0:
            trajectory.append((epoch, model.gamma.copy()))
        if epoch == 0:
            epoch0_accuracy = evaluate(model, cache, split, labels)
            epoch0_modal = detect_oversmoothing(cache).modal_fraction
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_model = model.copy()
            best_accuracy = evaluate(model, cache, split, labels)
        if epoch == config.max_epochs:
            break
        if should_stop(es, epoch, val_loss):
            break
        tcache = forward(model, g, x, training=True, rng=rng)
        loss, grads = loss_and_backward(
            model, tcache, labels, split.train, config.weight_decay
        )
        grads_ok = np.isfinite(loss) and all(
            np.all(np.isfinite(gr)) for gr in grads.values()
        )
        if not grads_ok:
            log.warning("training diverged at epoch %d; marking run failed", epoch)
            failed = True
            break
        train_losses.append(loss)
        adam_step(opt, params, grads)

    if trajectory and trajectory[-1][0] != epoch:
        trajectory.append((epoch, model.gamma.copy()))
    return RunResult(
        accuracy=best_accuracy,
        epoch0_accuracy=epoch0_accuracy,
        epoch0_modal_fraction=epoch0_modal,
        best_val_loss=float(best_val),
        best_epoch=best_epoch,
        epochs_run=epoch,
        gamma_init=gamma_init,
        gamma_best=best_model.gamma.copy() if best_model is not None else gamma_init,
        gamma_trajectory=trajectory,
        val_losses=val_losses,
        train_losses=train_losses,
        best_model=best_model,
        failed=failed,
    )


def make_model(
    name: str,
    f: int,
    C: int,
    *,
    hidden: int = 64,
    K: int = 10,
    alpha: float = 0.1,
    init: str = "ppr:0.1",
    dropout_nn: float = 0.5,
    dropout_gpr: float = 0.0,
    seed: int = 0,
) -> Tuple[GprModel, bool]:
    """Construct a named model variant; returns (model, gamma_trainable).

    ``mlp`` is the degenerate K = 0 case (no propagation at all); ``appnp``
    freezes gamma at the restart weights for ``alpha``; ``sgc`` freezes all
    mass on the last hop; ``gprgnn`` starts from ``init`` and learns gamma.
    """
    key = name.lower()
    if key == "mlp":
        model = init_model(
            f, hidden, C, K=0, scheme="delta:0", seed=seed,
            dropout_nn=dropout_nn, dropout_gpr=0.0,
        )
        return model, False
    if key == "appnp":
        model = init_model(
            f, hidden, C, K=K, scheme=f"ppr:{alpha}", seed=seed,
            dropout_nn=dropout_nn, dropout_gpr=dropout_gpr,
        )
        return model, False
    if key == "sgc":
        model = init_model(
            f, hidden, C, K=K, scheme=f"delta:{K}", seed=seed,
            dropout_nn=dropout_nn, dropout_gpr=dropout_gpr,
        )
        return model, False
    if key == "gprgnn":
        model = init_model(
            f, hidden, C, K=K, scheme=init, seed=seed,
            dropout_nn=dropout_nn, dropout_gpr=dropout_gpr,
        )
        return model, True
    raise ValueError(f"unknown model {name!r}; expected one of {MODEL_NAMES}")


@dataclass(eq=False)
class ExperimentResult:
    """Aggregate over the runs of one (model, dataset) cell.

    ``ci95`` is the normal-approximation half width ``1.96 * sd / sqrt(runs)``
    over the non-failed runs.
    """

    model: str
    regime: str
    phi: Optional[float]
    runs: List[RunResult]
    mean_accuracy: float
    ci95: float
    failed_runs: int


def _aggregate(
    model: str, regime: str, phi: Optional[float], runs: List[RunResult]
) -> ExperimentResult:
    accs = np.array([r.accuracy for r in runs if not r.failed])
    failed = sum(r.failed for r in runs)
    if failed:
        log.warning("%s: excluded %d failed run(s) from aggregation", model, failed)
    if accs.size == 0:
        return ExperimentResult(model, regime, phi, runs, float("nan"), float("nan"), failed)
    ci = 0.0 if accs.size < 2 else 1.96 * float(np.std(accs, ddof=1)) / np.sqrt(accs.size)
    return ExperimentResult(model, regime, phi, runs, float(accs.mean()), float(ci), failed)


def run_experiment(
    model_name: str,
    g: SparseGraph,
    x: np.ndarray,
    y: LabelVector,
    *,
    regime: str = "dense",
    runs: int = 10,
    config: Optional[TrainConfig] = None,
    master_seed: int = 0,
    phi: Optional[float] = None,
    hidden: int = 64,
    K: int = 10,
    alpha: float = 0.1,
    init: str = "ppr:0.1",
    dropout_nn: float = 0.5,
    dropout_gpr: float = 0.0,
) -> ExperimentResult:
    """Train one model repeatedly on a fixed dataset with fresh splits and
    initializations per run."""
    config = config if config is not None else TrainConfig()
    pkey = _phi_key(phi)
    results: List[RunResult] = []
    for r in range(runs):
        split = make_split(g.n, y, regime, derive_seed(master_seed, _TAG_SPLIT, pkey, r))
        init_seed = derive_seed(master_seed, _TAG_INIT, pkey, r)
        model, gamma_trainable = make_model(
            model_name, x.shape[1], y.num_classes, hidden=hidden, K=K, alpha=alpha,
            init=init, dropout_nn=dropout_nn, dropout_gpr=dropout_gpr, seed=init_seed,
        )
        run_cfg = replace(config, train_gamma=config.train_gamma and gamma_trainable)
        drop_rng = np.random.default_rng(derive_seed(master_seed, _TAG_DROPOUT, pkey, r))
        res = train_model(model, g, x, y, split, run_cfg, drop_rng)
        res.seed = init_seed
        results.append(res)
        log.info(
            "%s run %d/%d: acc %.4f (epochs %d)",
            model_name, r + 1, runs, res.accuracy, res.epochs_run,
        )
    return _aggregate(model_name, regime, phi, results)


def run_phi_sweep(
    phis: Sequence[float],
    models: Sequence[str],
    *,
    regime: str = "dense",
    runs: int = 10,
    n: int = 1000,
    f: int = 400,
    d: float = 10.0,
    epsilon: float = 3.25,
    config: Optional[TrainConfig] = None,
    master_seed: int = 0,
    hidden: int = 64,
    K: int = 10,
    alpha: float = 0.1,
    init: str = "ppr:0.1",
    dropout_nn: float = 0.5,
    dropout_gpr: float = 0.0,
) -> List[ExperimentResult]:
    """Sweep arc coordinates: a fresh dataset is drawn per (phi, run) and
    shared by every model in that cell, as is the split, so model comparisons
    see identical data."""
    config = config if config is not None else TrainConfig()
    out: List[ExperimentResult] = []
    for phi in phis:
        pkey = _phi_key(phi)
        per_model: Dict[str, List[RunResult]] = {name: [] for name in models}
        for r in range(runs):
            sample = generate_phi(
                n, f, d, phi, epsilon, seed=derive_seed(master_seed, _TAG_DATASET, pkey, r)
            )
            g = add_self_loops_and_normalize(sample.graph)
            split = make_split(
                n, sample.labels, regime, derive_seed(master_seed, _TAG_SPLIT, pkey, r)
            )
            for m_i, name in enumerate(models):
                init_seed = derive_seed(master_seed, _TAG_INIT, pkey, r, m_i)
                model, gamma_trainable = make_model(
                    name, f, sample.labels.num_classes, hidden=hidden, K=K,
                    alpha=alpha, init=init, dropout_nn=dropout_nn,
                    dropout_gpr=dropout_gpr, seed=init_seed,
                )
                run_cfg = replace(config, train_gamma=config.train_gamma and gamma_trainable)
                drop_rng = np.random.default_rng(
                    derive_seed(master_seed, _TAG_DROPOUT, pkey, r, m_i)
                )
                res = train_model(model, g, sample.features, sample.labels, split, run_cfg, drop_rng)
                res.seed = init_seed
                per_model[name].append(res)
            log.info("phi=%+.2f run %d/%d done", phi, r + 1, runs)
        for name in models:
            out.append(_aggregate(name, regime, phi, per_model[name]))
    return out


def write_results_csv(path: str, results: Sequence[ExperimentResult]) -> None:
    """Per-run rows; failed runs appear with accuracy nan so they are visible
    but excluded from every aggregate."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phi", "model", "regime", "run", "seed", "accuracy", "epochs", "best_val_loss"])
        for er in results:
            for r_i, res in enumerate(er.runs):
                w.writerow([
                    "" if er.phi is None else f"{er.phi:g}",
                    er.model,
                    er.regime,
                    r_i,
                    res.seed,
                    "nan" if res.failed else f"{res.accuracy:.6f}",
                    res.epochs_run,
                    f"{res.best_val_loss:.6f}",
                ])


def write_aggregates_csv(path: str, results: Sequence[ExperimentResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phi", "model", "mean_acc", "ci95"])
        for er in results:
            w.writerow([
                "" if er.phi is None else f"{er.phi:g}",
                er.model,
                f"{er.mean_accuracy:.6f}",
                f"{er.ci95:.6f}",
            ])


def write_gamma_trajectory_csv(path: str, runs: Sequence[RunResult]) -> None:
    """Across-run mean and CI of each mixing weight at each recorded epoch."""
    live = [dict(r.gamma_trajectory) for r in runs if not r.failed]
    epochs = sorted({e for traj in live for e in traj})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "k", "gamma_k", "ci_low", "ci_high"])
        for e in epochs:
            snaps = [traj[e] for traj in live if e in traj]
            stack = np.stack(snaps)
            mean = stack.mean(axis=0)
            if stack.shape[0] > 1:
                half = 1.96 * stack.std(axis=0, ddof=1) / np.sqrt(stack.shape[0])
            else:
                half = np.zeros_like(mean)
            for k in range(mean.size):
                w.writerow([
                    e, k, f"{mean[k]:.6f}",
                    f"{mean[k] - half[k]:.6f}", f"{mean[k] + half[k]:.6f}",
                ])
