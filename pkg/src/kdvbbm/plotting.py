"""Report figures written next to the CSV artifacts.

Figures are drawn on an Agg canvas without pyplot state, and PNG metadata
that would vary between runs is dropped so files are byte-stable.
"""

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

STYLE = {
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
}


def _figure(ncols=1, width=6.4, height=3.6):
    fig = Figure(figsize=(width * ncols, height))
    FigureCanvasAgg(fig)
    axes = fig.subplots(1, ncols, squeeze=False)[0]
    for ax in axes:
        ax.grid(True, alpha=STYLE["grid.alpha"])
        ax.tick_params(labelsize=STYLE["font.size"])
    return fig, axes


def _save(fig, path):
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})
    return path


def plot_simulation(times, energy, snapshots, x, path):
    """Profiles at a few times and the relative energy drift."""
    fig, (ax1, ax2) = _figure(2, width=5.0)
    for t, values in snapshots:
        ax1.plot(x, values, label=f"t={t:.3g}")
    ax1.set_xlabel("x")
    ax1.set_ylabel("eta")
    if len(snapshots) <= 6:
        ax1.legend(fontsize=7)
    drift = np.abs(np.asarray(energy) - energy[0]) / max(abs(energy[0]), 1e-300)
    ax2.semilogy(times[1:], np.maximum(drift[1:], 1e-18))
    ax2.set_xlabel("t")
    ax2.set_ylabel("|E(t) - E(0)| / E(0)")
    return _save(fig, path)


def plot_picard(differences, path):
    fig, (ax,) = _figure()
    ax.semilogy(np.arange(1, len(differences) + 1), np.maximum(differences, 1e-300), "o-")
    ax.set_xlabel("iteration")
    ax.set_ylabel("sup_t ||eta^(k+1) - eta^k||")
    return _save(fig, path)


def plot_ledger(rows, path):
    """E(u_k) against its envelope and the increments."""
    k = np.array([r["k"] for r in rows])
    fig, (ax1, ax2) = _figure(2, width=5.0)
    ax1.plot(k, [r["E_u"] for r in rows], "o-", label="E(u_k)")
    ax1.plot(k, [r["bound_envelope"] for r in rows], "--", label="envelope")
    ax1.set_xlabel("leg k")
    ax1.legend(fontsize=7)
    inc = np.abs([r["X_k"] for r in rows[1:]])
    if len(inc):
        ax2.semilogy(k[1:], np.maximum(inc, 1e-300), "o-", label="|X_k|")
        ax2.semilogy(k[1:], np.maximum([r["h_H2"] for r in rows[1:]], 1e-300), "s-",
                     label="||h||_H2")
        ax2.legend(fontsize=7)
    ax2.set_xlabel("leg k")
    return _save(fig, path)


def plot_bands(bands, weights, label, path):
    fig, (ax,) = _figure()
    ax.semilogy(bands, np.maximum(weights, 1e-300), ".")
    ax.set_xlabel("band n")
    ax.set_ylabel(label)
    return _save(fig, path)


def plot_campaign(summaries, path):
    """Ensemble max ratio against N for every kind and exponent pair."""
    fig, (ax,) = _figure(width=8.5, height=4.6)
    styles = ["-", "--", ":", "-."]
    markers = ["o", "s", "^", "D"]
    for i, summ in enumerate(summaries):
        color = f"C{i % 10}"
        for j, (key, maxima) in enumerate(summ["max_ratio"].items()):
            ns = [int(n) for n in maxima]
            ax.loglog(ns, list(maxima.values()), color=color, linestyle=styles[j % 4],
                      marker=markers[j % 4], markersize=4, label=f"{summ['kind']} {key}")
    ax.set_xlabel("N")
    ax.set_ylabel("ensemble max ratio")
    if summaries:
        ax.legend(fontsize=6, loc="center left", bbox_to_anchor=(1.01, 0.5))
    return _save(fig, path)


def plot_soliton(x, profile, evolved, path):
    fig, (ax,) = _figure()
    ax.plot(x, profile, label="exact")
    if evolved is not None:
        ax.plot(x, evolved, "--", label="evolved")
        ax.legend(fontsize=7)
    ax.set_xlabel("x")
    ax.set_ylabel("eta")
    return _save(fig, path)
