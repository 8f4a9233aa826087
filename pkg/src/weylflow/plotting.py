"""Figure rendering for CLI reports.

Every figure-producing helper takes arrays already computed by the command
and writes a PNG next to the delimited output.  Rendering is optional; the
data artifacts never depend on it.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SAVE_KW = dict(dpi=150, bbox_inches="tight", metadata={"Software": ""})


def _finish(fig, path):
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def plot_trajectory(times, states, path, ylabel="state"):
    fig, ax = plt.subplots(figsize=(6, 4))
    states = np.asarray(states)
    for i in range(states.shape[1]):
        ax.plot(times, states[:, i], lw=1.2, label=f"x{i+1}")
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    if states.shape[1] <= 8:
        ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def plot_bloch_profile(times, a_star, phi_star, omega0, omega_c, path):
    fig, axes = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    axes[0].plot(times, a_star, lw=1.4, label="a*")
    axes[0].plot(times, phi_star, lw=1.0, ls="--", label="phi*")
    axes[0].legend(loc="best", fontsize=8)
    axes[0].grid(alpha=0.3)
    w0 = np.clip(omega0, -50, 50)
    axes[1].plot(times, w0, lw=1.0, label="omega_0 (clipped)")
    axes[1].plot(times, omega_c, lw=1.0, label="omega_c")
    axes[1].set_xlabel("t")
    axes[1].legend(loc="best", fontsize=8)
    axes[1].grid(alpha=0.3)
    return _finish(fig, path)


def plot_envelope(a_grid, u_vals, phi_vals, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(a_grid, u_vals, lw=1.4, label="upper envelope")
    ax.plot(a_grid, phi_vals, lw=1.0, ls="--", label="achieving angle")
    ax.set_xlabel("a")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def plot_point_cloud(points, path):
    points = np.asarray(points)
    fig, ax = plt.subplots(figsize=(5, 5))
    if points.shape[1] == 1:
        ax.plot(points[:, 0], np.zeros(points.shape[0]), "o", ms=4, alpha=0.7)
        ax.set_xlabel("a")
    else:
        ax.plot(points[:, 0], points[:, 1], "o", ms=4, alpha=0.7)
        ax.set_xlabel("a1")
        ax.set_ylabel("a2")
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def plot_lift(times, p_coords, excised_mask, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    p_coords = np.asarray(p_coords)
    for i in range(min(p_coords.shape[1], 8)):
        ax.plot(times, p_coords[:, i], lw=1.0)
    mask = np.asarray(excised_mask, dtype=bool)
    if mask.any():
        ax.fill_between(times, *ax.get_ylim(), where=mask, alpha=0.15,
                        color="red", label="excised")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("t")
    ax.set_ylabel("ambient coordinates")
    ax.grid(alpha=0.3)
    return _finish(fig, path)
