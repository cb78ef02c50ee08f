"""Matplotlib renderers for the CLI report path.

Each subcommand that writes a delimited report also drops a PNG next to it;
these helpers keep the plotting dependency in one place. Everything uses the
Agg backend so runs are headless-safe.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_bars(path, names, values, errors=None, title="", ylabel="value"):
    fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(names)), 3.2))
    xs = np.arange(len(names))
    ax.bar(xs, values, yerr=errors, capsize=3, color="#4878a8")
    ax.set_xticks(xs)
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_decay(path, levels, series, title="", ylabel="2^(n/alpha) e_n"):
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for label, vals in series.items():
        ax.plot(levels, vals, marker="o", label=label)
    ax.set_xlabel("level n")
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    if len(series) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_curves(path, xs, series, xlabel="t", ylabel="K(t, x)", title="", logx=False):
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for label, ys in series.items():
        ax.plot(xs, ys, label=str(label))
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    if len(series) <= 12:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_heatmap(path, matrix, title=""):
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    im = ax.imshow(matrix, cmap="viridis")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
