"""Figure emission for the report path.

Plots are a convenience output rendered to SVG files next to the delimited
outputs; nothing downstream ever reads them back.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_histograms",
    "save_pair_scatters",
    "save_accept_scatters",
    "save_marginal_comparisons",
]

_HIST_BINS = 50


def _finish(fig, path: Path) -> Path:
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def save_histograms(params, names, outdir, prefix="hist") -> list[Path]:
    """One 50-bin histogram per parameter marginal."""
    outdir = Path(outdir)
    params = np.atleast_2d(np.asarray(params, dtype=float))
    paths = []
    for j, name in enumerate(names):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.hist(params[:, j], bins=_HIST_BINS, color="tab:blue", alpha=0.85)
        ax.set_xlabel(name)
        ax.set_ylabel("count")
        ax.set_title(f"accepted {name} (n={params.shape[0]})")
        fig.tight_layout()
        paths.append(_finish(fig, outdir / f"{prefix}_{name}.svg"))
    return paths


def save_pair_scatters(params, names, outdir, prefix="scatter") -> list[Path]:
    """Scatter of every parameter pair of the accepted sample."""
    outdir = Path(outdir)
    params = np.atleast_2d(np.asarray(params, dtype=float))
    paths = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            fig, ax = plt.subplots(figsize=(4.5, 4))
            ax.scatter(params[:, i], params[:, j], s=8, alpha=0.6, color="tab:blue")
            ax.set_xlabel(names[i])
            ax.set_ylabel(names[j])
            fig.tight_layout()
            paths.append(_finish(fig, outdir / f"{prefix}_{names[i]}_{names[j]}.svg"))
    return paths


def save_accept_scatters(params, probs, names, outdir, label) -> list[Path]:
    """Per parameter: fitted value against its accept probability."""
    outdir = Path(outdir)
    params = np.atleast_2d(np.asarray(params, dtype=float))
    probs = np.asarray(probs, dtype=float)
    paths = []
    for j, name in enumerate(names):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.scatter(params[:, j], probs, s=8, alpha=0.6, color="tab:blue")
        ax.set_xlabel(name)
        ax.set_ylabel("accept probability")
        ax.set_ylim(-0.05, 1.05)
        ax.set_title(label)
        fig.tight_layout()
        paths.append(_finish(fig, outdir / f"accept_{label}_{name}.svg"))
    return paths


def save_marginal_comparisons(accepted, truth, names, outdir, prefix="marginal") -> list[Path]:
    """Overlaid normalized histograms of accepted vs true marginals."""
    outdir = Path(outdir)
    accepted = np.atleast_2d(np.asarray(accepted, dtype=float))
    truth = np.atleast_2d(np.asarray(truth, dtype=float))
    paths = []
    for j, name in enumerate(names):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.hist(truth[:, j], bins=_HIST_BINS, density=True, alpha=0.5,
                color="tab:gray", label="truth")
        ax.hist(accepted[:, j], bins=_HIST_BINS, density=True, alpha=0.6,
                color="tab:blue", label="accepted")
        ax.set_xlabel(name)
        ax.set_ylabel("density")
        ax.legend(frameon=False)
        fig.tight_layout()
        paths.append(_finish(fig, outdir / f"{prefix}_{name}.svg"))
    return paths
