"""Figure rendering for training logs and metric reports."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_PNG_METADATA = {"Software": "triplewise"}


def plot_training_curves(records: list[dict], path: str | Path) -> None:
    """Loss components and KL-per-word over epochs, from flat log records."""
    epochs = [r["epoch"] for r in records]
    fig, (ax_loss, ax_kl) = plt.subplots(1, 2, figsize=(10, 4))
    for key, label in (("train_total", "train total"), ("val_total", "valid total"),
                       ("val_rec_q", "valid question NLL")):
        if records and key in records[0]:
            ax_loss.plot(epochs, [r[key] for r in records], label=label)
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    ax_loss.legend()
    ax_kl.plot(epochs, [r["val_kl_per_word"] for r in records], color="tab:red")
    ax_kl.set_xlabel("epoch")
    ax_kl.set_ylabel("KL per target word")
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)


def plot_metric_report(report_dict: dict, path: str | Path) -> None:
    """Bar chart of the scalar metrics in a report."""
    items = [(k, v) for k, v in report_dict.items() if k != "n_examples"]
    names = [k for k, _ in items]
    values = [v for _, v in items]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.bar(names, values, color="tab:blue")
    ax.set_ylim(0, 1)
    ax.set_ylabel("score")
    for index, value in enumerate(values):
        ax.text(index, value + 0.02, f"{value:.3f}", ha="center", fontsize=8)
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right")
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)
