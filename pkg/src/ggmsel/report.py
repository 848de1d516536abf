"""Figures and summary tables for select/eval outputs.

Renders risk curves, per-lambda network statistics, and cross-replicate
summaries as PNG files, with a delimited summary table next to them.  This
is the only module that imports matplotlib.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from . import io

_COLORS = plt.rcParams["axes.prop_cycle"].by_key()["color"]


def _save(fig, path: str):
    with io.atomic_open(path, "wb") as handle:
        fig.savefig(handle, format="png", dpi=120)
    plt.close(fig)


def _values(block: dict) -> np.ndarray:
    return np.array([np.nan if v is None else v for v in block["risk_values"]],
                    dtype=float)


def render_select_report(indir: str, outdir: str) -> list:
    """Risk-curve and network-statistic figures for one select run."""
    os.makedirs(outdir, exist_ok=True)
    report = io.read_json(os.path.join(indir, "report.json"))
    grid = np.asarray(report["grid"], dtype=float)
    methods = report["methods"]
    written = []

    if methods:
        cols = min(3, len(methods))
        rows = -(-len(methods) // cols)
        fig, axes = plt.subplots(rows, cols, figsize=(4.2 * cols, 3.2 * rows),
                                 squeeze=False)
        for ax in axes.flat[len(methods):]:
            ax.set_visible(False)
        for idx, (name, block) in enumerate(sorted(methods.items())):
            ax = axes.flat[idx]
            vals = _values(block)
            ax.plot(grid, vals, color=_COLORS[idx % len(_COLORS)], lw=1.5)
            lam = block.get("selected_lambda")
            if lam is not None:
                ax.axvline(lam, color="0.3", ls="--", lw=1)
            if block.get("direction") == "threshold":
                beta = block.get("config", {}).get("beta")
                if beta is not None:
                    ax.axhline(beta, color="0.6", ls=":", lw=1)
            title = name if lam is None else f"{name} (lambda={lam:.3f})"
            ax.set_title(title, fontsize=10)
            ax.set_xlabel("lambda")
        fig.tight_layout()
        path = os.path.join(outdir, "risk_curves.png")
        _save(fig, path)
        written.append("risk_curves.png")

    stats_path = os.path.join(indir, "netstats.jsonl")
    if os.path.exists(stats_path):
        stats = io.read_jsonl(stats_path)
        if stats:
            lam = [rec["lambda"] for rec in stats]
            fig, axes = plt.subplots(2, 2, figsize=(8.5, 6))
            panels = [("edges", "edges"), ("H", "mean geodesic distance"),
                      ("estrada", "Estrada index"), ("AD", "avg dissimilarity")]
            for ax, (key, label) in zip(axes.flat, panels):
                ax.plot(lam, [rec.get(key) for rec in stats], lw=1.5)
                ax.set_title(label, fontsize=10)
                ax.set_xlabel("lambda")
                if key == "estrada":
                    ax.set_yscale("log")
            fig.tight_layout()
            _save(fig, os.path.join(outdir, "network_stats.png"))
            written.append("network_stats.png")

    rows = [{"method": name,
             "selected_lambda": block.get("selected_lambda"),
             "direction": block.get("direction"),
             "flags": ";".join(block.get("flags", []))}
            for name, block in sorted(methods.items())]
    with io.atomic_open(os.path.join(outdir, "summary.tsv")) as handle:
        pd.DataFrame(rows).to_csv(handle, sep="\t", index=False)
    written.append("summary.tsv")
    return written


def _records_frame(records: list) -> pd.DataFrame:
    rows = []
    for rec in records:
        for name, entry in rec["methods"].items():
            rows.append({"label": rec["label"], "n": rec["n"], "rep": rec["rep"],
                         "method": name, "lambda": entry.get("lambda"),
                         "tdr": entry.get("tdr"),
                         "mse_dissim": entry.get("mse_dissim")})
    return pd.DataFrame(rows)


def render_eval_report(indir: str, outdir: str) -> list:
    """Cross-replicate figures for one eval suite run."""
    os.makedirs(outdir, exist_ok=True)
    records = io.read_jsonl(os.path.join(indir, "records.jsonl"))
    frame = _records_frame(records)
    written = []
    if frame.empty:
        return written
    labels = sorted(frame["label"].unique())

    fig, axes = plt.subplots(1, len(labels), figsize=(4.5 * len(labels), 3.4),
                             squeeze=False)
    for ax, label in zip(axes.flat, labels):
        cell = frame[frame["label"] == label]
        for idx, method in enumerate(sorted(cell["method"].unique())):
            series = (cell[cell["method"] == method]
                      .groupby("n")["tdr"].mean().dropna())
            if series.empty:
                continue
            ax.plot(series.index, series.values, marker="o", ms=4,
                    color=_COLORS[idx % len(_COLORS)], label=method)
        ax.set_title(label, fontsize=10)
        ax.set_xlabel("n")
        ax.set_ylabel("mean TDR")
        ax.set_ylim(0, 1.02)
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, os.path.join(outdir, "tdr_by_n.png"))
    written.append("tdr_by_n.png")

    cells = sorted(frame.groupby(["label", "n"]).groups)
    fig, axes = plt.subplots(1, len(cells), figsize=(4.2 * len(cells), 3.4),
                             squeeze=False)
    for ax, (label, n) in zip(axes.flat, cells):
        cell = frame[(frame["label"] == label) & (frame["n"] == n)]
        methods = sorted(cell["method"].unique())
        data = [cell[cell["method"] == m]["lambda"].dropna().values
                for m in methods]
        ax.boxplot(data, tick_labels=methods)
        ax.set_title(f"{label}, n={n}", fontsize=10)
        ax.set_ylabel("selected lambda")
        ax.tick_params(axis="x", rotation=45)
    fig.tight_layout()
    _save(fig, os.path.join(outdir, "lambda_dist.png"))
    written.append("lambda_dist.png")

    summary = (frame.groupby(["label", "n", "method"])
               .agg(mean_tdr=("tdr", "mean"), mean_lambda=("lambda", "mean"),
                    mean_mse_dissim=("mse_dissim", "mean"))
               .reset_index())
    with io.atomic_open(os.path.join(outdir, "summary.tsv")) as handle:
        summary.to_csv(handle, sep="\t", index=False)
    written.append("summary.tsv")
    return written
