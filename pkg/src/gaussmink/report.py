"""Figure rendering for flow runs, measures and polytope solutions.

All figures go to SVG files next to the delimited outputs.  Rendering is
deterministic: the SVG hash salt is pinned and creation dates are stripped.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "gaussmink"

import matplotlib.pyplot as plt
import numpy as np

from .body import BodyGeometry, boundary_curve

_SAVE_KW = {"metadata": {"Date": None}, "bbox_inches": "tight"}


def save_body_figure(path, labeled_geometries) -> None:
    """Closed boundary polylines of planar bodies, equal-aspect."""
    fig, ax = plt.subplots(figsize=(5, 5))
    for label, geom in labeled_geometries:
        curve = boundary_curve(geom)
        ax.plot(curve[:, 0], curve[:, 1], label=label, linewidth=1.2)
    ax.axhline(0.0, color="0.85", linewidth=0.6, zorder=0)
    ax.axvline(0.0, color="0.85", linewidth=0.6, zorder=0)
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_diagnostics_figure(path, diag) -> None:
    """Residual (log scale), Gaussian volume and functionals against time."""
    t = diag.times()
    fig, axes = plt.subplots(3, 1, figsize=(6, 7), sharex=True)
    axes[0].semilogy(t, diag.series("residual_stationary"), label="stationary")
    axes[0].semilogy(t, diag.series("residual_normalized"), label="normalized")
    axes[0].set_ylabel("residual")
    axes[0].legend(fontsize=8)
    axes[1].plot(t, diag.series("gamma"))
    axes[1].set_ylabel("gamma")
    psi = diag.series("psi")
    phi = diag.series("phi")
    axes[2].plot(t, psi, label="psi")
    if np.all(np.isfinite(phi)):
        axes[2].plot(t, phi, label="phi")
    axes[2].set_ylabel("functionals")
    axes[2].set_xlabel("t")
    axes[2].legend(fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_density_figure(path, field, label="density") -> None:
    """Line plot of a planar measure density against the normal angle."""
    grid = field.grid
    fig, ax = plt.subplots(figsize=(6, 3.5))
    if grid.dim == 1:
        ax.plot(grid.thetas, field.values)
        ax.set_xlabel("theta")
    else:
        V = field.values2d()
        im = ax.imshow(V, origin="lower", aspect="auto",
                       extent=(0, 2 * np.pi, grid.thetas[0], grid.thetas[-1]))
        fig.colorbar(im, ax=ax)
        ax.set_xlabel("phi")
        ax.set_ylabel("theta")
    ax.set_title(label)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_polygon_figure(path, polygon, label="solution") -> None:
    """Closed polygon outline with vertices marked."""
    V = np.vstack([polygon.vertices, polygon.vertices[:1]])
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(V[:, 0], V[:, 1], "-o", markersize=3, linewidth=1.2, label=label)
    ax.axhline(0.0, color="0.85", linewidth=0.6, zorder=0)
    ax.axvline(0.0, color="0.85", linewidth=0.6, zorder=0)
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
