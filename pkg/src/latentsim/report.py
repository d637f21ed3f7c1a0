"""Delimited outputs and figure rendering for the CLI report paths.

Every report writes a CSV and, next to it, a PNG rendered with the Agg
backend so headless runs work.  Numbers are formatted with fixed rules so
outputs are byte-stable across runs.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .similarity import MagnitudeChangeReport  # noqa: E402
from .sparselearn import TrainHistory  # noqa: E402

SCORE_FORMAT = "{:.9f}"
VALUE_FORMAT = "{:.9g}"


def format_score(score: float) -> str:
    return SCORE_FORMAT.format(score)


def write_ranking_csv(ranked: list[tuple[str, float]], path) -> Path:
    """rank,id,score rows, scores printed with 9 decimal places."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "id", "score"])
        for rank, (oid, score) in enumerate(ranked, start=1):
            writer.writerow([rank, oid, format_score(score)])
    return target


def write_magnitude_csv(
    report: MagnitudeChangeReport,
    feature_ids,
    layers,
    channels,
    groups,
    path,
) -> Path:
    """Per-feature change magnitudes plus a layer/group roll-up companion."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "layer", "channel", "group", "raw", "normalized"])
        for pos, feature in enumerate(feature_ids):
            writer.writerow(
                [
                    int(feature),
                    layers[pos],
                    int(channels[pos]),
                    groups[pos],
                    VALUE_FORMAT.format(report.raw[pos]),
                    VALUE_FORMAT.format(report.normalized[pos]),
                ]
            )
    summary = target.with_name(target.stem + "_layers" + target.suffix)
    with summary.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "tag", "sum", "percent"])
        for tag in sorted(report.per_layer):
            value, pct = report.per_layer[tag]
            writer.writerow(
                ["layer", tag, VALUE_FORMAT.format(value), VALUE_FORMAT.format(pct)]
            )
        for tag in sorted(report.per_group):
            value, pct = report.per_group[tag]
            writer.writerow(
                ["group", tag, VALUE_FORMAT.format(value), VALUE_FORMAT.format(pct)]
            )
    return target


def render_magnitude_figure(report: MagnitudeChangeReport, path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))

    tags = sorted(report.per_group)
    left.bar(tags, [report.per_group[t][1] for t in tags], color="#4878a8")
    left.set_ylabel("share of total change (%)")
    left.set_title("Change magnitude by layer group")

    centers = (report.bin_edges[:-1] + report.bin_edges[1:]) / 2.0
    width = report.bin_edges[1] - report.bin_edges[0]
    right.bar(centers, report.frequency, width=width * 0.9, color="#70a870",
              label="frequency")
    right.plot(centers, report.cumulative, color="#a84848", marker="o",
               label="cumulative")
    right.set_xlabel("normalized change magnitude")
    right.set_ylabel("fraction of features")
    right.set_title("Distribution of change magnitudes")
    right.legend()

    fig.tight_layout()
    fig.savefig(target, dpi=120)
    plt.close(fig)
    return target


def write_history_csv(history: TrainHistory, path) -> Path:
    """epoch,L_task,L_sp,R_sp,R_sp0,gamma,R rows."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "L_task", "L_sp", "R_sp", "R_sp0", "gamma", "R"])
        for epoch, task, l_sp, r_sp, r_sp0, gate, objective in history.rows():
            writer.writerow(
                [
                    epoch,
                    VALUE_FORMAT.format(task),
                    VALUE_FORMAT.format(l_sp),
                    VALUE_FORMAT.format(r_sp),
                    VALUE_FORMAT.format(r_sp0),
                    VALUE_FORMAT.format(gate),
                    VALUE_FORMAT.format(objective),
                ]
            )
    return target


def render_history_figure(history: TrainHistory, path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    epochs = list(range(len(history)))
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))

    left.plot(epochs, history.task_loss, label="task loss", color="#4878a8")
    left.plot(epochs, history.sparsity_loss, label="channel penalty", color="#70a870")
    left.plot(epochs, history.objective, label="objective", color="#a84848")
    left.set_xlabel("epoch")
    left.set_ylabel("loss")
    left.set_title("Training losses")
    left.legend()

    right.plot(epochs, history.r_sp, label="active ratio", color="#4878a8")
    right.plot(epochs, history.r_sp0, label="zero ratio", color="#70a870")
    right.plot(epochs, history.gate, label="gate factor", color="#a84848",
               linestyle="--")
    right.set_xlabel("epoch")
    right.set_ylim(-0.05, 1.05)
    right.set_title("Channel activity")
    right.legend()

    fig.tight_layout()
    fig.savefig(target, dpi=120)
    plt.close(fig)
    return target
