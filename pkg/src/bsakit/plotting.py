"""Figures for batch runs. Uses the non-interactive Agg backend."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_batch(rows, path, xlabel: str = "state", xs=None, reference=None) -> None:
    """Plot ``lambda`` and ``E`` per batch row and save to ``path``.

    Parameters
    ----------
    rows : list of dict
        Rows with at least ``lambda``, ``E``, ``ppt`` and ``converged`` keys.
    xs : sequence of float, optional
        Abscissae; defaults to the row index.
    reference : tuple of (xs, ys, label), optional
        Extra curve, e.g. a closed-form value.
    """
    xs = list(range(len(rows))) if xs is None else list(xs)
    lam = [r["lambda"] for r in rows]
    ent = [r["E"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, lam, "o-", label="lambda", color="tab:blue")
    ax.plot(xs, ent, "s--", label="E = 1 - lambda", color="tab:red")
    bad = [(x, v) for x, v, r in zip(xs, lam, rows) if not r["converged"]]
    if bad:
        ax.scatter(*zip(*bad), marker="x", s=80, color="k", label="not converged", zorder=3)
    if reference is not None:
        rx, ry, label = reference
        ax.plot(rx, ry, ":", color="gray", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylim(-0.05, 1.05)
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
