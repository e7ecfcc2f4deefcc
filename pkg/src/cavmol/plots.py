"""Report figures rendered next to the delimited outputs.

Everything here is presentation only: functions take computed results and
a target path, render with the Agg backend, and return the path.  None of
the physics modules import this one.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .units import HARTREE_PER_EV

__all__ = [
    "plot_timeseries",
    "plot_eigentable",
    "plot_comparison",
    "plot_sweep",
    "plot_snapshot",
]

_DPI = 150


def plot_timeseries(series, path, title: str | None = None) -> str:
    """Populations on top, photon number below."""
    fig, (ax_pop, ax_phot) = plt.subplots(
        2, 1, figsize=(7.0, 5.6), sharex=True, constrained_layout=True
    )
    t = series.times
    ax_pop.plot(t, series.channels["P_g"], label="P_g", color="tab:blue")
    ax_pop.plot(t, series.channels["P_e"], label="P_e", color="tab:red")
    ax_pop.set_ylabel("population")
    ax_pop.set_ylim(-0.02, 1.02)
    ax_pop.legend(loc="best", frameon=False)
    if title:
        ax_pop.set_title(title)
    ax_phot.plot(t, series.channels["mean_photons"], color="tab:green")
    ax_phot.set_ylabel(r"$\langle \hat{n} \rangle$")
    ax_phot.set_xlabel("time (fs)")
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return str(path)


def plot_eigentable(table, path, title: str | None = None) -> str:
    fig, ax = plt.subplots(figsize=(7.0, 5.0), constrained_layout=True)
    energies_ev = table.energies / HARTREE_PER_EV
    ax.plot(table.values, energies_ev, color="tab:blue", lw=0.7)
    ax.set_xlabel(table.parameter)
    ax.set_ylabel("energy (eV)")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return str(path)


def plot_comparison(series_a, series_b, labels: tuple[str, str], path) -> str:
    """Overlay P_g from two methods with the pointwise gap below."""
    fig, (ax, ax_diff) = plt.subplots(
        2, 1, figsize=(7.0, 5.6), sharex=True, constrained_layout=True,
        height_ratios=(2.0, 1.0),
    )
    t = series_a.times
    ax.plot(t, series_a.channels["P_g"], label=labels[0], color="tab:blue")
    ax.plot(
        t, series_b.channels["P_g"], label=labels[1], color="tab:orange", ls="--"
    )
    ax.set_ylabel("P_g")
    ax.legend(loc="best", frameon=False)
    gap = np.abs(series_a.channels["P_g"] - series_b.channels["P_g"])
    ax_diff.semilogy(t, np.maximum(gap, 1e-16), color="tab:gray")
    ax_diff.set_ylabel("|difference|")
    ax_diff.set_xlabel("time (fs)")
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return str(path)


def plot_sweep(axis_names, points, values, path, ylabel="max mean photons") -> str:
    """Aggregate view: one curve per value of the second axis, if any.

    `points` is the list of per-point axis dicts in sweep order and `values`
    the aggregate numbers (NaN for failed points).
    """
    fig, ax = plt.subplots(figsize=(7.0, 5.0), constrained_layout=True)
    values = np.asarray(values, dtype=float)
    if len(axis_names) == 1:
        xs = [p[axis_names[0]] for p in points]
        ax.plot(xs, values, marker="o", ms=3, color="tab:blue")
        ax.set_xlabel(axis_names[0])
    elif len(axis_names) == 2:
        primary, secondary = axis_names
        groups: dict[float, tuple[list, list]] = {}
        for p, v in zip(points, values):
            xs, ys = groups.setdefault(p[secondary], ([], []))
            xs.append(p[primary])
            ys.append(v)
        for key, (xs, ys) in groups.items():
            ax.plot(xs, ys, marker="o", ms=3, label=f"{secondary}={key:g}")
        ax.set_xlabel(primary)
        ax.legend(loc="best", frameon=False, fontsize=8)
    else:
        ax.plot(np.arange(values.size), values, marker="o", ms=3)
        ax.set_xlabel("sweep index")
    ax.set_ylabel(ylabel)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return str(path)


def plot_snapshot(wf, path) -> str:
    """Two density panels over (q, x) at the snapshot time."""
    fig, axes = plt.subplots(
        1, 2, figsize=(9.0, 4.0), sharey=True, constrained_layout=True
    )
    grid = wf.grid
    extent = (grid.q_min, grid.q_max, grid.x_min, grid.x_max)
    for ax, surface in zip(axes, ("g", "e")):
        density = wf.density(surface)
        im = ax.imshow(
            density.T,
            origin="lower",
            aspect="auto",
            extent=extent,
            cmap="magma",
        )
        ax.set_title(f"|Psi_{surface}|^2, t = {wf.time:g} fs")
        ax.set_xlabel("q (bohr)")
        fig.colorbar(im, ax=ax, shrink=0.85)
    axes[0].set_ylabel("x")
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return str(path)
