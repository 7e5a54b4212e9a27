"""Diagnostic figures rendered next to the delimited output.

Each helper writes a single PNG and returns the path. The PNG metadata
is stripped so repeated runs on the same data produce identical bytes.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "convergence_figure",
    "ensemble_figure",
    "probe_figure",
    "spectrum_figure",
]

_SAVE = {"dpi": 120, "metadata": {"Software": None}}


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path


def spectrum_figure(path, matrix, mode):
    """Eigenvalues in the complex plane with the peripheral locus drawn."""
    eigs = np.linalg.eigvals(np.asarray(matrix, dtype=complex))
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    if mode == "discrete":
        theta = np.linspace(0.0, 2.0 * np.pi, 361)
        ax.plot(np.cos(theta), np.sin(theta), color="0.7", lw=1.0, zorder=1)
    else:
        ax.axvline(0.0, color="0.7", lw=1.0, zorder=1)
    ax.scatter(eigs.real, eigs.imag, s=36, color="tab:blue", zorder=2)
    ax.axhline(0.0, color="0.9", lw=0.8, zorder=0)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title("spectrum" if mode == "discrete" else "generator spectrum")
    ax.set_aspect("equal", adjustable="datalim")
    return _finish(fig, path)


def probe_figure(path, doc):
    """Resolvent norms along the pole-probe schedule, log scale."""
    norms = np.asarray(doc["norms"], dtype=float)
    steps = np.arange(1, norms.size + 1)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(steps, np.maximum(norms, 1e-300), marker="o", ms=3.5)
    ax.set_xlabel("approach step")
    ax.set_ylabel("resolvent norm")
    ax.set_title(f"pole probe: {doc['classification']}")
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)


def convergence_figure(path, rows):
    """Successive-difference decay and snapshot rank over probe times."""
    t = [r.t for r in rows]
    diffs = [max(r.diff_norm, 1e-300) for r in rows]
    ranks = [r.rank for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(t, diffs, marker="o", ms=3.5, color="tab:blue")
    ax.set_xlabel("t")
    ax.set_ylabel("successive difference", color="tab:blue")
    ax.grid(True, which="both", alpha=0.3)
    twin = ax.twinx()
    twin.step(t, ranks, where="post", color="tab:orange")
    twin.set_ylabel("snapshot rank", color="tab:orange")
    twin.set_ylim(bottom=0)
    ax.set_title("propagator settling")
    return _finish(fig, path)


def ensemble_figure(path, stats):
    """Histogram of the per-member margins."""
    margins = np.asarray(
        [m.margin for m in stats.members if np.isfinite(m.margin)], dtype=float
    )
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if margins.size:
        ax.hist(margins, bins=min(40, max(8, margins.size // 5)), color="tab:blue")
    ax.set_xlabel(stats.margin_label)
    ax.set_ylabel("members")
    ax.set_title(f"{stats.kind}: {stats.passes}/{stats.count} passed")
    return _finish(fig, path)
