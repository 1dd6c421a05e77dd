# visualisation.py
import logging
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from rewards.coverage import TransportPlan

logger = logging.getLogger(__name__)

# Top-left header cell; '<' is always split off by the tokenizer so no token can equal it.
CORNER_LABEL = "<doc|sum>"


def write_transport_matrix(plan: TransportPlan, path):
    """
    Write the plan as a tab-delimited matrix: a header row of summary tokens and
    one row per document token. Values use 17 significant digits so re-parsing
    reproduces the float64 plan bit for bit.
    """
    df = pd.DataFrame(plan.plan, index=pd.Index(plan.doc_tokens, name=CORNER_LABEL), columns=plan.sum_tokens)
    df.to_csv(path, sep="\t", float_format="%.17g")
    return path


def read_transport_matrix(path):
    """
    Returns:
        (list, list, np.ndarray): Document tokens, summary tokens and plan values.
    """
    df = pd.read_csv(path, sep="\t", index_col=0, dtype={CORNER_LABEL: str}, keep_default_na=False,
                     float_precision="round_trip")
    return [str(t) for t in df.index], [str(c) for c in df.columns], df.to_numpy(dtype=np.float64)


def plot_transport_heatmap(plan: TransportPlan, path, title="Transport plan: document -> summary"):
    """
    Heatmap of the transport plan; intensity is proportional to t*_ij, i.e. how much
    of a document token's semantic mass is covered by each summary token.
    """
    height = max(4.0, 0.25 * len(plan.doc_tokens))
    width = max(4.0, 0.35 * len(plan.sum_tokens) + 2.0)
    fig, ax = plt.subplots(figsize=(width, height))
    image = ax.imshow(plan.plan, cmap="Reds", aspect="auto", interpolation="nearest")
    ax.set_xticks(range(len(plan.sum_tokens)))
    ax.set_xticklabels(plan.sum_tokens, rotation=90)
    ax.set_yticks(range(len(plan.doc_tokens)))
    ax.set_yticklabels(plan.doc_tokens)
    ax.set_xlabel("Summary tokens")
    ax.set_ylabel("Document tokens")
    ax.set_title(title)
    fig.colorbar(image, ax=ax, label="Transported mass")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def export_transport_plan(plan: TransportPlan, out_dir, stem="transport_plan", heatmap=True):
    """
    Export a transport plan for inspection.

    Parameters:
        plan (TransportPlan): Plan to export.
        out_dir (str): Output directory (created if missing).
        stem (str): File name stem.
        heatmap (bool): Also render a PNG heatmap.

    Returns:
        dict: Paths of the written files ("matrix" and optionally "heatmap").
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {"matrix": write_transport_matrix(plan, os.path.join(out_dir, f"{stem}.tsv"))}
    if heatmap:
        paths["heatmap"] = plot_transport_heatmap(plan, os.path.join(out_dir, f"{stem}.png"))
    logger.info("Transport plan exported to %s", out_dir)
    return paths


def plot_reward_curve(metrics_path, path, window=20, title="SCST rewards"):
    """
    Plot sampled and baseline rewards per optimisation step from a metrics log.
    """
    df = pd.read_json(metrics_path, lines=True)
    fig, ax = plt.subplots(figsize=(12, 6))
    for column, color in (("r_sampled", "blue"), ("r_baseline", "green")):
        ax.plot(df["step"], df[column].rolling(window, min_periods=1).mean(), label=column, color=color)
    ax.set_xlabel("Step")
    ax.set_ylabel("Reward")
    ax.set_title(title)
    ax.legend()
    ax.grid(True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
