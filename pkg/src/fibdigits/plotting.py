"""Figures rendered from a certificate: node bounds, epsilon per convergent, 2-adic digit index."""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .certificate import Certificate  # noqa: E402


def _save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_node_bounds(cert: Certificate, path: str) -> str:
    nodes = cert.all("node")
    labels, ours, expected = [], [], []
    for rec in nodes:
        for q, v in sorted(rec["bounds"].items()):
            labels.append(f"{rec['node']}\n{q}")
            ours.append(v)
            expected.append(rec.get("expected", {}).get(q, math.nan))
    fig, ax = plt.subplots(figsize=(max(6, 0.55 * len(labels)), 4))
    x = range(len(labels))
    ax.bar([i - 0.2 for i in x], ours, width=0.4, label="computed")
    ax.bar([i + 0.2 for i in x], expected, width=0.4, label="expected")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylim(min(ours + expected) - 20, max(ours + expected) + 10)
    ax.set_ylabel("bound")
    ax.set_title(f"case-tree node bounds ({nodes[0]['mode'] if nodes else 'n/a'})")
    ax.legend()
    return _save(fig, path)


def plot_epsilon(cert: Certificate, path: str) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    for rec in cert.all("node"):
        js, eps = [], []
        for j, (count, e) in sorted((int(k), v) for k, v in rec["levels"].items()):
            if count and e is not None and e > 0:
                js.append(j)
                eps.append(math.log10(e) - 64 * math.log10(2))
        if js:
            ax.plot(js, eps, marker="o", label=rec["node"])
    ax.set_xlabel("convergent index j")
    ax.set_ylabel("log10 min epsilon")
    ax.set_title("smallest certified epsilon per convergent")
    ax.legend(fontsize=7, ncol=3)
    return _save(fig, path)


def plot_padic(cert: Certificate, path: str) -> str:
    rec = cert.first("padic")
    fig, ax = plt.subplots(figsize=(6, 4))
    if rec:
        ts = sorted(int(t) for t in rec["R"])
        ax.scatter(ts, [rec["R"][str(t)] for t in ts], s=6)
        ax.axhline(rec["r"], color="gray", lw=0.8, label=f"r = {rec['r']}")
        ax.axhline(rec["R_max"], color="red", lw=0.8, label=f"R_max = {rec['R_max']}")
        ax.legend()
    ax.set_xlabel("n - m")
    ax.set_ylabel("R (first nonzero digit at index >= r)")
    ax.set_title("2-adic digit index per n - m")
    return _save(fig, path)


def render_figures(cert: Certificate, out_dir: str) -> dict[str, str]:
    fig_dir = os.path.join(out_dir, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    out = {}
    if cert.all("node"):
        out["fig_node_bounds"] = plot_node_bounds(cert, os.path.join(fig_dir, "node_bounds.png"))
        out["fig_epsilon"] = plot_epsilon(cert, os.path.join(fig_dir, "epsilon.png"))
    if cert.first("padic"):
        out["fig_padic"] = plot_padic(cert, os.path.join(fig_dir, "padic_R.png"))
    return out
