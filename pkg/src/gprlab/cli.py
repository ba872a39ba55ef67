"""Command line front end.

Subcommands cover the whole pipeline: generate synthetic bundles, train and
sweep models, inspect filters and collapse behaviour, and convert external
edge lists into bundles. Flags can be preloaded from a JSON config file via
``--config``; explicitly passed flags always win. The output directory
resolves as ``--out-dir`` flag, then the ``GPRLAB_OUT`` environment variable,
then the current directory.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import logging
import os
import re
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from .charts import Series, line_chart
from .csbm import CsbmSpec, generate, generate_phi
from .dataio import (
    load_bundle,
    load_checkpoint,
    read_edge_file,
    read_label_file,
    save_bundle,
    save_checkpoint,
    save_sample,
)
from .graphs import (
    LabelVector,
    add_self_loops_and_normalize,
    build_graph,
    homophily_index,
    to_dense,
)
from .harness import (
    MODEL_NAMES,
    REGIMES,
    TrainConfig,
    make_model,
    run_experiment,
    run_phi_sweep,
    write_aggregates_csv,
    write_gamma_trajectory_csv,
    write_results_csv,
)
from .linalg import symmetric_eigen
from .model import forward, parse_gamma_scheme
from .oversmooth import detect_oversmoothing, stationary_profile
from .spectral import classify_filter, filter_response

log = logging.getLogger(__name__)

DEFAULT_PHIS = "-1,-0.75,-0.5,-0.25,0,0.25,0.5,0.75,1"


def _phi_value(text: str) -> float:
    try:
        phi = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not -1.0 <= phi <= 1.0:
        raise argparse.ArgumentTypeError(f"phi must lie in [-1, 1], got {phi}")
    return phi


def _phi_list(text: str) -> List[float]:
    return [_phi_value(part) for part in text.split(",") if part.strip()]


def _model_name(text: str) -> str:
    name = text.strip().lower()
    if name not in MODEL_NAMES:
        raise argparse.ArgumentTypeError(
            f"unknown model {text!r}; expected one of {{{', '.join(MODEL_NAMES)}}}"
        )
    return name


def _model_list(text: str) -> List[str]:
    names = [part.strip().lower() for part in text.split(",") if part.strip()]
    for name in names:
        if name not in MODEL_NAMES:
            raise argparse.ArgumentTypeError(
                f"unknown model {name!r}; expected one of {{{', '.join(MODEL_NAMES)}}}"
            )
    if not names:
        raise argparse.ArgumentTypeError("empty model list")
    return names


def _out_dir(args: argparse.Namespace) -> str:
    out = args.out_dir or os.environ.get("GPRLAB_OUT") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        lr=args.lr,
        weight_decay=args.weight_decay,
        gamma_lr=args.gamma_lr,
        max_epochs=args.max_epochs,
        es_window=args.es_window,
        record_every=args.record_every,
    )


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", type=_model_name, default="gprgnn",
                   help="gprgnn, appnp, sgc, or mlp")
    p.add_argument("--init", default="ppr:0.1",
                   help="gamma init scheme: ppr:A, delta:K, nppr:A, random[:S], raw:v0,v1,...")
    p.add_argument("--regime", default="dense", choices=sorted(REGIMES),
                   help="train/val split sizing")
    p.add_argument("--runs", type=int, default=10, help="independent runs")
    p.add_argument("--hidden", type=int, default=64, help="MLP hidden width")
    p.add_argument("--K", type=int, default=10, dest="K", help="propagation depth")
    p.add_argument("--alpha", type=float, default=0.1, help="restart weight for appnp")
    p.add_argument("--lr", type=float, default=0.01, help="Adam learning rate")
    p.add_argument("--gamma-lr", type=float, default=None,
                   help="separate learning rate for gamma (default: --lr)")
    p.add_argument("--weight-decay", type=float, default=0.0005,
                   help="L2 penalty on the MLP weights")
    p.add_argument("--dropout-nn", type=float, default=0.5,
                   help="dropout on MLP layer inputs")
    p.add_argument("--dropout-gpr", type=float, default=0.0,
                   help="dropout on each hop contribution")
    p.add_argument("--max-epochs", type=int, default=1000, help="epoch budget")
    p.add_argument("--es-window", type=int, default=200,
                   help="early-stop validation window")
    p.add_argument("--record-every", type=int, default=10,
                   help="gamma trajectory snapshot interval")


def _add_dataset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=1000, help="number of nodes (even)")
    p.add_argument("--f", type=int, default=400, help="feature dimension")
    p.add_argument("--d", type=float, default=10.0, help="expected average degree")
    p.add_argument("--epsilon", type=float, default=3.25, help="arc scale parameter")


def cmd_gen_csbm(args: argparse.Namespace) -> int:
    out = args.out or os.path.join(_out_dir(args), "csbm")
    if args.phi is not None:
        sample = generate_phi(args.n, args.f, args.d, args.phi, args.epsilon, args.seed)
    elif args.lam is not None and args.mu is not None:
        sample = generate(CsbmSpec(args.n, args.f, args.d, args.lam, args.mu, args.seed))
    else:
        print("error: pass --phi, or both --lam and --mu", file=sys.stderr)
        return 1
    save_sample(out, sample)
    h = homophily_index(sample.graph, sample.labels)
    mean_deg = sample.graph.nnz / sample.graph.n
    print(f"bundle written to {out}")
    print(f"lambda={sample.spec.lam:.4f} mu={sample.spec.mu:.4f}")
    print(f"homophily={h:.4f} mean_degree={mean_deg:.2f}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    graph, x, y, manifest = load_bundle(args.data)
    g = add_self_loops_and_normalize(graph)
    phi = (manifest.get("generator_spec") or {}).get("phi")
    result = run_experiment(
        args.model, g, x, y,
        regime=args.regime, runs=args.runs, config=_train_config(args),
        master_seed=args.seed, phi=phi, hidden=args.hidden, K=args.K,
        alpha=args.alpha, init=args.init, dropout_nn=args.dropout_nn,
        dropout_gpr=args.dropout_gpr,
    )
    write_results_csv(os.path.join(out, "results.csv"), [result])
    write_gamma_trajectory_csv(os.path.join(out, "gamma_trajectory.csv"), result.runs)
    live = [r for r in result.runs if not r.failed and r.best_model is not None]
    if not live:
        print("error: every run failed; nothing to checkpoint", file=sys.stderr)
        return 1
    best = min(live, key=lambda r: r.best_val_loss)
    ckpt = os.path.join(out, "checkpoint.bin")
    save_checkpoint(ckpt, best.best_model)
    print(f"{args.model} on {args.data} ({args.regime}, {args.runs} runs)")
    print(f"test accuracy {result.mean_accuracy:.4f} +/- {result.ci95:.4f}")
    if result.failed_runs:
        print(f"warning: {result.failed_runs} run(s) failed and were excluded")
    print(f"results.csv, gamma_trajectory.csv, checkpoint.bin written to {out}")
    return 0


def _sweep_worker(payload: Dict) -> List:
    return run_phi_sweep(**payload)


def cmd_sweep_phi(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    kwargs = dict(
        models=args.models, regime=args.regime, runs=args.runs, n=args.n,
        f=args.f, d=args.d, epsilon=args.epsilon, config=_train_config(args),
        master_seed=args.seed, hidden=args.hidden, K=args.K, alpha=args.alpha,
        init=args.init, dropout_nn=args.dropout_nn, dropout_gpr=args.dropout_gpr,
    )
    if args.threads > 1 and len(args.phis) > 1:
        payloads = [dict(kwargs, phis=[phi]) for phi in args.phis]
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.threads) as pool:
            chunks = list(pool.map(_sweep_worker, payloads))
        results = [er for chunk in chunks for er in chunk]
    else:
        results = run_phi_sweep(args.phis, **kwargs)
    write_results_csv(os.path.join(out, "results.csv"), results)
    write_aggregates_csv(os.path.join(out, "aggregates.csv"), results)
    print(f"{'phi':>6} {'model':>8} {'mean_acc':>9} {'ci95':>7}")
    for er in results:
        print(f"{er.phi:>6.2f} {er.model:>8} {er.mean_accuracy:>9.4f} {er.ci95:>7.4f}")
    if args.svg:
        series = []
        for name in args.models:
            rows = [er for er in results if er.model == name]
            series.append(Series(
                label=name,
                xs=[er.phi for er in rows],
                ys=[er.mean_accuracy for er in rows],
                ci=[er.ci95 for er in rows],
            ))
        svg = line_chart(series, title="accuracy vs phi", x_label="phi", y_label="accuracy")
        with open(os.path.join(out, "accuracy_vs_phi.svg"), "w") as fh:
            fh.write(svg)
    print(f"results.csv, aggregates.csv written to {out}")
    return 0


def _resolve_gamma(args: argparse.Namespace) -> np.ndarray:
    if args.checkpoint:
        return load_checkpoint(args.checkpoint).gamma
    if args.gamma:
        rng = np.random.default_rng(args.seed)
        return parse_gamma_scheme(args.gamma, args.K, rng)
    raise ValueError("pass --gamma SCHEME or --checkpoint PATH")


def cmd_spectrum(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    gamma = _resolve_gamma(args)
    graph, _, _, _ = load_bundle(args.data)
    g = add_self_loops_and_normalize(graph)
    eig = symmetric_eigen(to_dense(g))
    cls = classify_filter(gamma, eig.eigenvalues)
    fr = filter_response(gamma, eig.eigenvalues)
    path = os.path.join(out, "spectrum.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "response", "ratio"])
        for i, (lam, resp) in enumerate(zip(fr.lambdas, fr.response)):
            ratio = "" if (i == 0 or fr.ratios is None) else f"{fr.ratios[i]:.6e}"
            w.writerow([f"{lam:.6f}", f"{resp:.6e}", ratio])
    print(f"filter class: {cls.kind}")
    print(f"max |g(lambda)|/|g(lambda_1)| over the rest: {cls.max_ratio_rest:.4f}")
    print(f"spectrum.csv written to {out}")
    if args.svg:
        order = np.argsort(fr.lambdas)
        svg = line_chart(
            [Series("g(lambda)", fr.lambdas[order], fr.response[order])],
            title="filter response", x_label="lambda", y_label="g(lambda)",
        )
        with open(os.path.join(out, "spectrum.svg"), "w") as fh:
            fh.write(svg)
    return 0


def cmd_oversmooth(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    graph, x, y, _ = load_bundle(args.data)
    g = add_self_loops_and_normalize(graph)
    if args.checkpoint:
        model = load_checkpoint(args.checkpoint)
    else:
        model, _ = make_model(
            "gprgnn", x.shape[1], y.num_classes, hidden=args.hidden, K=args.K,
            init=args.init, dropout_nn=0.0, dropout_gpr=0.0, seed=args.seed,
        )
    if args.eta is not None:
        model.eta = args.eta
    cache = forward(model, g, x, training=False)
    report = detect_oversmoothing(cache)
    rows = [
        ("modal_fraction", f"{report.modal_fraction:.6f}"),
        ("modal_label", str(report.modal_label)),
        ("profile_residual", f"{report.profile_residual:.6e}"),
        ("oversmoothed", str(int(report.oversmoothed))),
    ]
    try:
        profile = stationary_profile(g, cache.hs[0])
        rows.append(("lambda2", f"{profile.lambda2:.6f}"))
    except ValueError as exc:
        log.warning("stationary profile unavailable: %s", exc)
    with open(os.path.join(out, "oversmooth.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "value"])
        w.writerows(rows)
    for name, value in rows:
        print(f"{name}: {value}")
    print(f"oversmooth.csv written to {out}")
    return 0


def cmd_export_gamma(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    model = load_checkpoint(args.checkpoint)
    path = os.path.join(out, "gamma.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "gamma_k"])
        for k, gk in enumerate(model.gamma):
            w.writerow([k, f"{gk:.6f}"])
    print(f"gamma.csv written to {out}")
    for k, gk in enumerate(model.gamma):
        print(f"gamma[{k}] = {gk:+.4f}")
    if args.svg:
        svg = line_chart(
            [Series("gamma_k", list(range(model.K + 1)), list(model.gamma))],
            title="mixing weights by hop", x_label="k", y_label="gamma_k",
        )
        with open(os.path.join(out, "gamma_vs_k.svg"), "w") as fh:
            fh.write(svg)
    return 0


def cmd_convert(args: argparse.Namespace) -> int:
    out = args.out or os.path.join(_out_dir(args), "bundle")
    labels = read_label_file(args.labels)
    n = labels.size
    num_classes = args.num_classes or int(labels.max()) + 1
    y = LabelVector(labels, num_classes)
    edges = read_edge_file(args.edges, n)
    graph = build_graph(n, edges)
    if args.features.endswith(".npy"):
        x = np.load(args.features, allow_pickle=False)
    else:
        x = np.loadtxt(args.features, ndmin=2)
    if x.shape[0] != n:
        raise ValueError(f"features have {x.shape[0]} rows but labels give n={n}")
    save_bundle(out, graph, x, y, args.source)
    print(f"bundle written to {out} (n={n}, f={x.shape[1]}, classes={num_classes})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--threads", type=int, default=1,
                        help="parallel workers for sweeps (other commands ignore this)")
    common.add_argument("--out-dir", default=None,
                        help="output directory (default: $GPRLAB_OUT or .)")
    common.add_argument("--config", default=None,
                        help="JSON file of flag defaults; explicit flags win")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress")

    parser = argparse.ArgumentParser(
        prog="gprlab",
        description="Generalized PageRank graph filters: data, training, diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("gen-csbm", parents=[common], formatter_class=fmt,
                       help="generate a contextual SBM bundle")
    _add_dataset_flags(p)
    p.add_argument("--phi", type=_phi_value, default=None,
                   help="arc coordinate in [-1, 1]; overrides --lam/--mu")
    p.add_argument("--lam", type=float, default=None, help="edge signal strength")
    p.add_argument("--mu", type=float, default=None, help="feature signal strength")
    p.add_argument("--out", default=None, help="bundle directory (default: OUT_DIR/csbm)")
    p.set_defaults(func=cmd_gen_csbm)

    p = sub.add_parser("train", parents=[common], formatter_class=fmt,
                       help="train a model on a bundle over several runs")
    p.add_argument("--data", required=True, help="bundle directory")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep-phi", parents=[common], formatter_class=fmt,
                       help="accuracy sweep across the lambda/mu arc")
    p.add_argument("--phis", type=_phi_list, default=_phi_list(DEFAULT_PHIS),
                   help="comma separated arc coordinates")
    p.add_argument("--models", type=_model_list, default=["gprgnn"],
                   help="comma separated model names")
    _add_dataset_flags(p)
    _add_train_flags(p)
    p.add_argument("--svg", action="store_true", help="also write accuracy_vs_phi.svg")
    p.set_defaults(func=cmd_sweep_phi)

    p = sub.add_parser("spectrum", parents=[common], formatter_class=fmt,
                       help="filter response over a graph spectrum")
    p.add_argument("--data", required=True, help="bundle directory")
    p.add_argument("--gamma", default=None, help="gamma scheme, e.g. ppr:0.1")
    p.add_argument("--checkpoint", default=None, help="take gamma from a checkpoint")
    p.add_argument("--K", type=int, default=10, dest="K", help="filter order for --gamma")
    p.add_argument("--svg", action="store_true", help="also write spectrum.svg")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("oversmooth", parents=[common], formatter_class=fmt,
                       help="rank-one collapse diagnostics for a model on a bundle")
    p.add_argument("--data", required=True, help="bundle directory")
    p.add_argument("--checkpoint", default=None, help="model checkpoint (default: fresh init)")
    p.add_argument("--hidden", type=int, default=64, help="MLP hidden width")
    p.add_argument("--K", type=int, default=10, dest="K", help="propagation depth")
    p.add_argument("--init", default="ppr:0.1", help="gamma init scheme")
    p.add_argument("--eta", type=float, default=None, help="override softmax sharpness")
    p.set_defaults(func=cmd_oversmooth)

    p = sub.add_parser("export-gamma", parents=[common], formatter_class=fmt,
                       help="dump mixing weights from a checkpoint")
    p.add_argument("--checkpoint", required=True, help="model checkpoint to read")
    p.add_argument("--svg", action="store_true", help="also write gamma_vs_k.svg")
    p.set_defaults(func=cmd_export_gamma)

    p = sub.add_parser("convert", parents=[common], formatter_class=fmt,
                       help="build a bundle from an external edge list")
    p.add_argument("--edges", required=True, help="i<TAB>j edge list")
    p.add_argument("--labels", required=True, help="one integer label per line")
    p.add_argument("--features", required=True, help=".npy array or text matrix")
    p.add_argument("--num-classes", type=int, default=None, help="default: max label + 1")
    p.add_argument("--source", default="converted", help="manifest source tag")
    p.add_argument("--out", default=None, help="bundle directory (default: OUT_DIR/bundle)")
    p.set_defaults(func=cmd_convert)

    # let values like "-1,-0.5,0" pass as arguments rather than option strings
    matcher = re.compile(r"^-\d+(\.\d+)?(,.*)?$")
    parser._negative_number_matcher = matcher
    for child in sub.choices.values():
        child._negative_number_matcher = matcher
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str],
                  args: argparse.Namespace) -> argparse.Namespace:
    """Re-parse with defaults overridden by the JSON config file. Explicit
    flags override the file because they survive the second parse."""
    with open(args.config) as fh:
        overrides = json.load(fh)
    if not isinstance(overrides, dict):
        raise ValueError(f"{args.config}: config must be a JSON object")
    sub_actions = next(
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    )
    subparser = sub_actions.choices[args.command]
    dests = {a.dest for a in subparser._actions}
    mapped = {}
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if dest not in dests:
            raise ValueError(f"{args.config}: unknown option {key!r} for {args.command}")
        mapped[dest] = value
    subparser.set_defaults(**mapped)
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            args = _apply_config(parser, argv, args)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(message)s",
        )
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
