"""Figure rendering for the report paths.

Each command that writes a delimited results file also renders a PNG
next to it.  Uses the Agg backend; safe headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, out_path) -> None:
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def heat_figure(ts, entropies, dissipations, out_path) -> None:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 5.0), sharex=True)
    ax1.plot(ts, entropies, marker="o", ms=3, color="tab:blue")
    ax1.set_ylabel("entropy")
    ax1.grid(alpha=0.3)
    diss = np.asarray(dissipations, dtype=float)
    ax2.plot(ts, diss, marker="o", ms=3, color="tab:red")
    ax2.set_ylabel("dissipation")
    ax2.set_xlabel("t")
    ax2.grid(alpha=0.3)
    fig.suptitle("entropy along heat flow")
    _save(fig, out_path)


def geodesic_figure(times, eig_tracks, step_energies, out_path) -> None:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 5.0))
    tracks = np.asarray(eig_tracks, dtype=float)
    for i in range(tracks.shape[1]):
        ax1.plot(times, tracks[:, i], lw=1.2)
    ax1.set_ylabel("density eigenvalues")
    ax1.set_xlabel("t")
    ax1.grid(alpha=0.3)
    mids = 0.5 * (np.asarray(times)[:-1] + np.asarray(times)[1:])
    ax2.bar(mids, step_energies, width=0.8 / len(step_energies), color="tab:green")
    ax2.set_ylabel("step energy")
    ax2.set_xlabel("t")
    ax2.grid(alpha=0.3)
    fig.suptitle("geodesic profile")
    _save(fig, out_path)


def disintegration_figure(labels, contributions, out_path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    ax.bar(range(len(contributions)), contributions, color="tab:purple")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels)
    ax.set_ylabel("weighted squared fiber distance")
    ax.grid(alpha=0.3, axis="y")
    fig.suptitle("disintegration of the squared distance")
    _save(fig, out_path)


def curvature_figure(indices, gaps, estimate, out_path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    ax.scatter(indices, gaps, s=18, color="tab:orange")
    if np.isfinite(estimate):
        ax.axhline(estimate, color="k", ls="--", lw=1, label=f"estimate {estimate:.4g}")
        ax.legend()
    ax.set_xlabel("pair index")
    ax.set_ylabel("curvature gap")
    ax.grid(alpha=0.3)
    fig.suptitle("sampled curvature gaps")
    _save(fig, out_path)
