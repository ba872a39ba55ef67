import csv
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gprlab import (
    CsbmSpec,
    TrainConfig,
    add_self_loops_and_normalize,
    delta_weights,
    evaluate,
    generate,
    make_model,
    make_split,
    ppr_weights,
    run_experiment,
    run_phi_sweep,
    train_model,
    write_aggregates_csv,
    write_gamma_trajectory_csv,
    write_results_csv,
)
from gprlab.graphs import LabelVector
from gprlab.harness import RunResult, _aggregate, derive_seed


def balanced_labels(n, C=2):
    return LabelVector(np.arange(n) % C, C)


class TestMakeSplit:
    def test_sparse_sizes_and_balance(self):
        y = balanced_labels(1000)
        sp = make_split(1000, y, "sparse", seed=0)
        assert (sp.train.size, sp.val.size, sp.test.size) == (25, 25, 950)
        counts = np.bincount(y.labels[sp.train])
        assert sorted(counts) == [12, 13]

    def test_dense_sizes_small(self):
        y = LabelVector(np.array([0] * 5 + [1] * 5), 2)
        sp = make_split(10, y, "dense", seed=1)
        assert (sp.train.size, sp.val.size, sp.test.size) == (6, 2, 2)
        assert np.array_equal(np.bincount(y.labels[sp.train]), [3, 3])

    def test_partition_properties(self):
        y = balanced_labels(200, 3)
        sp = make_split(200, y, "dense", seed=5)
        allidx = np.concatenate([sp.train, sp.val, sp.test])
        assert np.array_equal(np.sort(allidx), np.arange(200))
        for part in (sp.train, sp.val, sp.test):
            assert np.array_equal(part, np.sort(part))

    def test_deterministic_in_seed(self):
        y = balanced_labels(100)
        a = make_split(100, y, "sparse", seed=3)
        b = make_split(100, y, "sparse", seed=3)
        c = make_split(100, y, "sparse", seed=4)
        assert np.array_equal(a.train, b.train) and np.array_equal(a.val, b.val)
        assert not np.array_equal(a.train, c.train)

    def test_errors(self):
        y = balanced_labels(100)
        with pytest.raises(ValueError, match="unknown regime"):
            make_split(100, y, "medium", seed=0)
        with pytest.raises(ValueError, match="has no nodes"):
            make_split(4, LabelVector(np.zeros(4, dtype=int), 2), "dense", seed=0)
        lopsided = LabelVector(np.array([0] * 7 + [1]), 2)
        with pytest.raises(ValueError, match="balanced"):
            make_split(8, lopsided, "dense", seed=0)

    @given(st.integers(0, 1000), st.integers(2, 4))
    @settings(max_examples=30, deadline=None)
    def test_class_counts_differ_by_at_most_one(self, seed, C):
        y = balanced_labels(40 * C, C)
        sp = make_split(40 * C, y, "dense", seed=seed)
        counts = np.bincount(y.labels[sp.train], minlength=C)
        assert counts.max() - counts.min() <= 1
        assert len(set(sp.train) & set(sp.val)) == 0
        assert len(set(sp.train) & set(sp.test)) == 0


class TestEvaluate:
    def test_counting_oracle(self):
        y = LabelVector(np.array([0, 1, 1, 0]), 2)
        p = np.array([[0.9, 0.1], [0.2, 0.8], [0.7, 0.3], [0.6, 0.4]])
        sp = SimpleNamespace(test=np.array([1, 2, 3]))
        acc = evaluate(None, SimpleNamespace(p_hat=p), sp, y)
        assert acc == pytest.approx(2 / 3)  # node 2 predicted 0, truth 1

    def test_tie_goes_to_lowest_index(self):
        y = LabelVector(np.array([1]), 2)
        p = np.array([[0.5, 0.5]])
        sp = SimpleNamespace(test=np.array([0]))
        assert evaluate(None, SimpleNamespace(p_hat=p), sp, y) == 0.0


def easy_dataset(seed=0, n=80):
    spec = CsbmSpec(n=n, f=16, d=8.0, lam=2.0, mu=2.5, seed=seed)
    s = generate(spec)
    return add_self_loops_and_normalize(s.graph), s.features, s.labels


class TestTrainModel:
    def test_zero_lr_freezes_everything(self):
        g, x, y = easy_dataset()
        sp = make_split(g.n, y, "dense", seed=0)
        model, _ = make_model("gprgnn", 16, 2, K=4, seed=1, dropout_nn=0.0)
        cfg = TrainConfig(lr=0.0, weight_decay=0.0, max_epochs=5)
        res = train_model(model, g, x, y, sp, cfg)
        assert res.accuracy == res.epoch0_accuracy
        assert np.array_equal(res.gamma_best, res.gamma_init)
        # flat validation loss trips the stop right after the grace period
        assert res.epochs_run == 3
        assert len(res.val_losses) == res.epochs_run + 1
        assert len(set(res.val_losses)) == 1

    def test_best_val_is_first_strict_minimum(self):
        g, x, y = easy_dataset(seed=2)
        sp = make_split(g.n, y, "dense", seed=2)
        model, _ = make_model("gprgnn", 16, 2, K=4, seed=3, dropout_nn=0.5)
        cfg = TrainConfig(max_epochs=40)
        res = train_model(model, g, x, y, sp, cfg, np.random.default_rng(0))
        assert res.best_val_loss == min(res.val_losses)
        assert res.val_losses.index(res.best_val_loss) == res.best_epoch

    def test_learns_an_easy_dataset(self):
        g, x, y = easy_dataset(seed=4)
        sp = make_split(g.n, y, "dense", seed=4)
        model, _ = make_model("gprgnn", 16, 2, K=4, seed=5)
        cfg = TrainConfig(max_epochs=150)
        res = train_model(model, g, x, y, sp, cfg, np.random.default_rng(1))
        assert res.accuracy > 0.8
        assert res.accuracy >= res.epoch0_accuracy

    def test_frozen_gamma_stays_put(self):
        g, x, y = easy_dataset(seed=6)
        sp = make_split(g.n, y, "dense", seed=6)
        model, trainable = make_model("appnp", 16, 2, K=6, seed=7)
        cfg = TrainConfig(max_epochs=30, train_gamma=trainable)
        res = train_model(model, g, x, y, sp, cfg, np.random.default_rng(2))
        assert np.array_equal(res.gamma_best, ppr_weights(0.1, 6))
        assert np.array_equal(model.gamma, ppr_weights(0.1, 6))

    def test_bit_reproducible(self):
        g, x, y = easy_dataset(seed=8)
        sp = make_split(g.n, y, "dense", seed=8)

        def once():
            model, _ = make_model("gprgnn", 16, 2, K=4, seed=9)
            cfg = TrainConfig(max_epochs=25)
            return train_model(model, g, x, y, sp, cfg, np.random.default_rng(3))

        a, b = once(), once()
        assert a.accuracy == b.accuracy
        assert a.val_losses == b.val_losses
        assert np.array_equal(a.gamma_best, b.gamma_best)

    def test_gamma_trajectory_records_start_and_end(self):
        g, x, y = easy_dataset(seed=10)
        sp = make_split(g.n, y, "dense", seed=10)
        model, _ = make_model("gprgnn", 16, 2, K=4, seed=11)
        cfg = TrainConfig(max_epochs=25, record_every=10)
        res = train_model(model, g, x, y, sp, cfg, np.random.default_rng(4))
        epochs = [e for e, _ in res.gamma_trajectory]
        assert epochs[0] == 0
        assert epochs[-1] == res.epochs_run
        assert np.array_equal(res.gamma_trajectory[0][1], res.gamma_init)


class TestMakeModel:
    def test_mlp_is_propagation_free(self):
        model, trainable = make_model("mlp", 12, 3, seed=0)
        assert model.K == 0 and not trainable
        assert np.array_equal(model.gamma, [1.0])
        assert model.dropout_gpr == 0.0

    def test_appnp_and_sgc_fix_gamma(self):
        appnp, t1 = make_model("appnp", 12, 3, K=8, alpha=0.2, seed=0)
        sgc, t2 = make_model("sgc", 12, 3, K=8, seed=0)
        assert not t1 and not t2
        assert np.array_equal(appnp.gamma, ppr_weights(0.2, 8))
        assert np.array_equal(sgc.gamma, delta_weights(8, 8))

    def test_gprgnn_honors_init(self):
        model, trainable = make_model("gprgnn", 12, 3, K=8, init="delta:8", seed=0)
        assert trainable
        assert np.array_equal(model.gamma, delta_weights(8, 8))

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown model"):
            make_model("gcn", 12, 3)


def mk_run(acc, failed=False):
    return RunResult(
        accuracy=acc, epoch0_accuracy=0.5, epoch0_modal_fraction=0.5,
        best_val_loss=0.1, best_epoch=1, epochs_run=2,
        gamma_init=np.ones(3), gamma_best=np.ones(3),
        gamma_trajectory=[(0, np.ones(3)), (2, np.full(3, 2.0))],
        val_losses=[0.2, 0.1, 0.15], train_losses=[0.3, 0.2],
        best_model=None, failed=failed,
    )


class TestAggregate:
    def test_mean_and_ci(self):
        er = _aggregate("m", "dense", 0.5, [mk_run(0.8), mk_run(0.9)])
        assert er.mean_accuracy == pytest.approx(0.85)
        sd = np.std([0.8, 0.9], ddof=1)
        assert er.ci95 == pytest.approx(1.96 * sd / np.sqrt(2))

    def test_duplicate_accuracies_give_zero_ci(self):
        er = _aggregate("m", "dense", None, [mk_run(0.7)] * 4)
        assert er.ci95 == 0.0

    def test_single_run_zero_ci(self):
        assert _aggregate("m", "dense", None, [mk_run(0.7)]).ci95 == 0.0

    def test_failed_runs_excluded(self):
        er = _aggregate("m", "dense", None, [mk_run(0.8), mk_run(0.2, failed=True)])
        assert er.mean_accuracy == pytest.approx(0.8)
        assert er.failed_runs == 1

    def test_all_failed_is_nan(self):
        er = _aggregate("m", "dense", None, [mk_run(0.2, failed=True)])
        assert np.isnan(er.mean_accuracy) and np.isnan(er.ci95)


class TestRunExperiment:
    def test_counts_and_determinism(self):
        g, x, y = easy_dataset(seed=12, n=60)
        cfg = TrainConfig(max_epochs=10)
        kw = dict(regime="dense", runs=3, config=cfg, master_seed=7, hidden=8, K=3)
        a = run_experiment("gprgnn", g, x, y, **kw)
        b = run_experiment("gprgnn", g, x, y, **kw)
        assert len(a.runs) == 3
        assert a.mean_accuracy == b.mean_accuracy
        assert [r.seed for r in a.runs] == [r.seed for r in b.runs]
        assert len({r.seed for r in a.runs}) == 3  # fresh init per run


class TestPhiSweep:
    def test_shape_order_and_determinism(self, tmp_path):
        cfg = TrainConfig(max_epochs=8)
        kw = dict(
            regime="dense", runs=2, n=40, f=8, d=6.0, config=cfg,
            master_seed=1, hidden=8, K=3,
        )
        res = run_phi_sweep([-0.5, 0.5], ["mlp", "gprgnn"], **kw)
        assert [(r.phi, r.model) for r in res] == [
            (-0.5, "mlp"), (-0.5, "gprgnn"), (0.5, "mlp"), (0.5, "gprgnn"),
        ]
        res2 = run_phi_sweep([-0.5, 0.5], ["mlp", "gprgnn"], **kw)
        assert [r.mean_accuracy for r in res] == [r.mean_accuracy for r in res2]

        out = tmp_path / "results.csv"
        write_results_csv(str(out), res)
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 8  # 2 phis x 2 models x 2 runs
        assert set(rows[0]) == {
            "phi", "model", "regime", "run", "seed", "accuracy", "epochs",
            "best_val_loss",
        }
        accs = [float(r["accuracy"]) for r in rows]
        assert all(0.0 <= a <= 1.0 for a in accs)

        agg = tmp_path / "agg.csv"
        write_aggregates_csv(str(agg), res)
        arows = list(csv.DictReader(agg.open()))
        assert len(arows) == 4
        assert arows[0]["phi"] == "-0.5"


class TestCsvWriters:
    def test_failed_run_visible_as_nan(self, tmp_path):
        er = _aggregate("m", "dense", 0.0, [mk_run(0.9), mk_run(0.1, failed=True)])
        path = tmp_path / "r.csv"
        write_results_csv(str(path), [er])
        rows = list(csv.DictReader(path.open()))
        assert rows[1]["accuracy"] == "nan"
        assert rows[0]["accuracy"] == "0.900000"

    def test_gamma_trajectory_aggregates_runs(self, tmp_path):
        path = tmp_path / "g.csv"
        write_gamma_trajectory_csv(str(path), [mk_run(0.8), mk_run(0.9)])
        rows = list(csv.DictReader(path.open()))
        # two epochs x three weights
        assert len(rows) == 6
        assert [r["epoch"] for r in rows] == ["0", "0", "0", "2", "2", "2"]
        first = rows[0]
        assert float(first["gamma_k"]) == 1.0
        assert float(first["ci_low"]) == 1.0 and float(first["ci_high"]) == 1.0

    def test_gamma_trajectory_skips_failed(self, tmp_path):
        path = tmp_path / "g.csv"
        write_gamma_trajectory_csv(
            str(path), [mk_run(0.8), mk_run(0.1, failed=True)]
        )
        rows = list(csv.DictReader(path.open()))
        assert len(rows) == 6


def test_derive_seed_spreads_and_repeats():
    a = derive_seed(0, 1, 2)
    assert a == derive_seed(0, 1, 2)
    assert a != derive_seed(0, 1, 3)
    assert 0 <= a < 2**64
