"""Command-line driver for the full pipeline.

The session file travels between commands via ``--session`` or the
``LATENTSIM_SESSION`` environment variable (default ``session.lsim``).
Engine errors map to distinct exit codes (>= 10, documented in the
README); argparse usage errors keep their conventional exit code 2.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import engine, report, synth
from .errors import EngineError
from .sparselearn import SparsityConfig, make_blob_dataset, train_toy
from .store import (
    apply_cluster_op,
    load_session,
    save_bundle,
    save_session,
)

DEFAULT_SESSION = "session.lsim"
ENV_SESSION = "LATENTSIM_SESSION"


def session_path_from(args) -> str:
    if args.session:
        return args.session
    return os.environ.get(ENV_SESSION, DEFAULT_SESSION)


def _print_ranked(ranked: list[tuple[str, float]]) -> None:
    print(f"{'rank':>4}  {'id':<16}  score")
    for rank, (oid, score) in enumerate(ranked, start=1):
        print(f"{rank:>4}  {oid:<16}  {report.format_score(score)}")


def _add_query_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tau", type=float, required=True,
                        help="membership spread factor")
    parser.add_argument("--weights", default="uniform",
                        choices=["uniform", "cluster", "svd"],
                        help="feature weighting mode")
    parser.add_argument("--top-k", type=int, default=None,
                        help="truncate the ranking to the best k objects")
    parser.add_argument("--group", default=None,
                        help="restrict scoring to one layer group")
    parser.add_argument("--csv", default=None,
                        help="also write the ranking to this CSV file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentsim",
        description="Object similarity over latent feature maps: extract "
        "activation magnitudes, prune features, and answer fuzzy "
        "similarity queries.",
    )
    parser.add_argument("--session", default=None,
                        help=f"session file (default ${ENV_SESSION} or "
                        f"{DEFAULT_SESSION})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a bundle and start a session")
    p.add_argument("bundle", help="bundle directory")

    p = sub.add_parser("extract", help="build the activation matrix")
    p.add_argument("--mode", default="masked", choices=["masked", "full-map"],
                   help="mean over mask pixels or over the whole map")
    p.add_argument("--box-mean", action="store_true",
                   help="average over the bounding box instead of the mask")

    p = sub.add_parser("prune", help="retain top-ranked features")
    p.add_argument("--variance", type=float, default=0.99,
                   help="fraction of squared magnitude to retain")

    p = sub.add_parser("query", help="rank objects against a single query")
    p.add_argument("--id", required=True, help="query object id")
    p.add_argument("--mf", default="gaussian",
                   choices=["gaussian", "trapezoid", "trapezoidal"],
                   help="membership function")
    _add_query_options(p)

    p = sub.add_parser("query-multi", help="rank objects against a query set")
    p.add_argument("--ids", required=True,
                   help="comma-separated query object ids")
    p.add_argument("--mf", default="trapezoid",
                   choices=["gaussian", "trapezoid", "trapezoidal"],
                   help="membership function")
    _add_query_options(p)

    p = sub.add_parser("weights", help="weight vector operations")
    wsub = p.add_subparsers(dest="weights_command", required=True)
    w = wsub.add_parser("recompute", help="recompute and store feature weights")
    w.add_argument("--method", default="cluster-diff",
                   choices=["cluster-diff", "svd", "uniform"],
                   help="weighting method")

    p = sub.add_parser("cluster", help="edit the cluster set")
    p.add_argument("op", choices=["add", "remove", "rename", "assign", "unassign"])
    p.add_argument("name", help="cluster name")
    p.add_argument("--object", dest="object_id", default=None,
                   help="object id for assign/unassign")
    p.add_argument("--new-name", default=None, help="target name for rename")

    p = sub.add_parser("report", help="render reports")
    rsub = p.add_subparsers(dest="report_command", required=True)
    r = rsub.add_parser("magnitude-change",
                        help="per-feature change magnitudes between clusters")
    r.add_argument("--out", default="reports", help="output directory")
    r.add_argument("--bins", type=int, default=10, help="histogram bins")

    p = sub.add_parser("sparsity-demo",
                       help="train the toy network with the channel penalty")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--beta", type=float, default=0.3,
                       help="target active-channel ratio")
    group.add_argument("--target-zero-ratio", type=float, default=None,
                       help="target zero-channel ratio (1 - beta)")
    p.add_argument("--alpha", type=float, default=0.5, help="gate exponent")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="penalty weight")
    p.add_argument("--epochs", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=24,
                   help="synthetic training images")
    p.add_argument("--learning-rate", type=float, default=0.22)
    p.add_argument("--out", default="reports", help="output directory")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=8763)
    p.add_argument("--host", default="127.0.0.1")

    p = sub.add_parser("synth-bundle", help="generate a synthetic bundle")
    p.add_argument("path", help="output bundle directory")
    p.add_argument("--objects", type=int, default=60)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--no-thumbnails", action="store_true")

    p = sub.add_parser("status", help="print session status")

    return parser


def _run_query_command(args, object_ids: tuple[str, ...], kind: str) -> int:
    path = session_path_from(args)
    session = load_session(path)
    request = engine.QueryRequest(
        kind=kind,
        tau=args.tau,
        object_ids=object_ids,
        weight_mode=args.weights,
        top_k=args.top_k,
        group=args.group,
    )
    outcome = engine.run_query(session, request)
    if outcome.warning:
        print(f"warning: {outcome.warning}", file=sys.stderr)
    if outcome.stale:
        print("warning: weights are stale (clusters changed since they were "
              "computed); run `latentsim weights recompute`", file=sys.stderr)
    _print_ranked(outcome.ranked)
    if args.csv:
        target = report.write_ranking_csv(outcome.ranked, args.csv)
        print(f"wrote {target}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


def _dispatch(args) -> int:
    command = args.command

    if command == "ingest":
        session = engine.ingest(args.bundle)
        path = save_session(session, session_path_from(args))
        print(f"ingested {len(session.object_ids)} objects, "
              f"{len(session.feature_layers)} features; session at {path}")
        return 0

    if command == "extract":
        path = session_path_from(args)
        session = load_session(path)
        mode = args.mode.replace("-", "_")
        engine.extract(session, mode=mode, box_mean=args.box_mean)
        save_session(session, path)
        s, n = session.matrix.shape
        print(f"activation matrix {s} x {n} ({mode})")
        return 0

    if command == "prune":
        path = session_path_from(args)
        session = load_session(path)
        pruned = engine.prune(session, args.variance)
        save_session(session, path)
        print(f"retained {pruned.retained.size} of {session.matrix.shape[1]} "
              f"features ({pruned.variance_retained:.6f} of squared magnitude)")
        return 0

    if command == "query":
        return _run_query_command(args, (args.id,), args.mf)

    if command == "query-multi":
        ids = tuple(s for s in (part.strip() for part in args.ids.split(",")) if s)
        return _run_query_command(args, ids, args.mf)

    if command == "weights":
        path = session_path_from(args)
        session = load_session(path)
        method = args.method.replace("-", "_")
        vector, warning = engine.recompute_weights(session, method)
        save_session(session, path)
        if warning:
            print(f"warning: {warning}", file=sys.stderr)
        print(f"installed {vector.provenance} weights over "
              f"{vector.values.size} features (revision "
              f"{session.weight_revision})")
        return 0

    if command == "cluster":
        path = session_path_from(args)
        session = load_session(path)
        changed = apply_cluster_op(
            session, args.op, cluster=args.name,
            object_id=args.object_id, new_name=args.new_name,
        )
        save_session(session, path)
        state = "updated" if changed else "unchanged"
        print(f"clusters {state} (revision {session.cluster_revision}): "
              + ", ".join(f"{k}({len(v)})" for k, v in session.clusters.items()))
        return 0

    if command == "report":
        path = session_path_from(args)
        session = load_session(path)
        data = engine.magnitude_report_data(session, bins=args.bins)
        view = engine.prepared_view(session)
        out = Path(args.out)
        channels = [session.feature_channels[j] for j in view.columns]
        csv_path = report.write_magnitude_csv(
            data, view.columns, view.layers, channels, view.groups,
            out / "magnitude_change.csv",
        )
        fig_path = report.render_magnitude_figure(
            data, out / "magnitude_change.png"
        )
        for tag in sorted(data.per_group):
            value, pct = data.per_group[tag]
            print(f"group {tag}: {pct:.2f}% of total change")
        print(f"wrote {csv_path} and {fig_path}")
        return 0

    if command == "sparsity-demo":
        beta = args.beta
        if args.target_zero_ratio is not None:
            beta = 1.0 - args.target_zero_ratio
        cfg = SparsityConfig(beta=beta, alpha=args.alpha, lam=args.lam,
                             layers=("conv1", "conv2"))
        images, masks = make_blob_dataset(args.samples, seed=args.seed + 1)
        history, _ = train_toy(images, masks, cfg, epochs=args.epochs,
                               learning_rate=args.learning_rate, seed=args.seed)
        out = Path(args.out)
        csv_path = report.write_history_csv(history, out / "sparsity_history.csv")
        fig_path = report.render_history_figure(history, out / "sparsity_history.png")
        print(f"final: task={history.task_loss[-1]:.6f} "
              f"active-ratio={history.r_sp[-1]:.4f} "
              f"zero-ratio={history.r_sp0[-1]:.4f}")
        print(f"wrote {csv_path} and {fig_path}")
        return 0

    if command == "serve":
        from .service import serve

        serve(session_path_from(args), port=args.port, host=args.host)
        return 0

    if command == "synth-bundle":
        bundle = synth.generate_bundle(
            args.objects, args.seed, thumbnails=not args.no_thumbnails
        )
        root = save_bundle(bundle, args.path)
        print(f"wrote synthetic bundle with {len(bundle.object_ids)} objects "
              f"to {root}")
        return 0

    if command == "status":
        session = load_session(session_path_from(args))
        for key, value in engine.session_status(session).items():
            print(f"{key}: {value}")
        return 0

    raise AssertionError(f"unhandled command {command!r}")


if __name__ == "__main__":
    sys.exit(main())
