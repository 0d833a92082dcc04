"""Matplotlib renderings of the CLI tables (written next to the CSV files)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402

REGION_COLORS = {"homogeneous": "gold", "bulk-homogeneous": "darkorange", "staggered": "c", "other": "0.5"}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def spectrum(lam, path, title=""):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(np.arange(1, len(lam) + 1), np.sort(lam), ".", ms=4)
    ax.set_xlabel("k")
    ax.set_ylabel(r"$\Lambda_k$")
    ax.set_title(title)
    return _save(fig, path)


def profile(sites, values, path, ylabel):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(sites, values, "o-", ms=3)
    ax.set_xlabel("site j")
    ax.set_ylabel(ylabel)
    return _save(fig, path)


def phase_diagram(grid, path):
    names = list(REGION_COLORS)
    lab = grid.labels()
    idx = np.vectorize(names.index)(lab)
    fig, ax = plt.subplots(figsize=(6, 4))
    du = grid.U[1] - grid.U[0] if grid.U.size > 1 else 1.0
    dl = grid.lam[1] - grid.lam[0] if grid.lam.size > 1 else 1.0
    extent = [grid.U[0] - du / 2, grid.U[-1] + du / 2, grid.lam[0] - dl / 2, grid.lam[-1] + dl / 2]
    ax.imshow(idx, origin="lower", aspect="auto", extent=extent,
              cmap=ListedColormap([REGION_COLORS[n] for n in names]), vmin=-0.5, vmax=len(names) - 0.5,
              interpolation="nearest")
    ax.set_xlabel("U / t")
    ax.set_ylabel(r"$\lambda$ / t")
    handles = [plt.Rectangle((0, 0), 1, 1, color=REGION_COLORS[n]) for n in names[:3]]
    ax.legend(handles, names[:3], loc="upper right", fontsize=8)
    ax.set_title(f"L = {grid.L}")
    return _save(fig, path)


def quench(traj, v_C, v_S, path):
    fig, axes = plt.subplots(1, 3, figsize=(13, 3.8))
    dC = traj.C - traj.C[0]
    lim = np.abs(dC).max() or 1.0
    im = axes[0].imshow(dC.T, origin="lower", aspect="auto", cmap="RdBu_r", vmin=-lim, vmax=lim,
                        extent=[traj.taus[0], traj.taus[-1], 0.5, traj.L - 0.5])
    fig.colorbar(im, ax=axes[0])
    axes[0].set_xlabel(r"$\tau$")
    axes[0].set_ylabel("i")
    axes[0].set_title(r"$C_i(\tau) - C_i(0)$")
    for f, lbl in (("C", "charge"), ("S", "spin")):
        R2 = traj.R2(f)
        axes[1].plot(traj.taus, np.sqrt(np.abs(R2 - R2[0])), label=lbl)
    axes[1].set_xlabel(r"$\tau$")
    axes[1].set_ylabel(r"$\sqrt{|R^2(\tau) - R^2(0)|}$")
    axes[1].legend()
    axes[2].plot(traj.taus, v_C, label="$v_C$")
    axes[2].plot(traj.taus, v_S, label="$v_S$")
    axes[2].set_xlabel(r"$\tau$")
    axes[2].set_ylabel("velocity")
    axes[2].legend()
    return _save(fig, path)


def velocity_curve(U, v_C, v_S, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(U, v_C, "o-", label="$v_C$")
    ax.plot(U, v_S, "s-", label="$v_S$")
    ax.set_xlabel("U / t")
    ax.set_ylabel(r"late-time velocity")
    ax.legend()
    return _save(fig, path)


def ramp(results, path):
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.8))
    for r in results:
        axes[0].plot(r.U, r.excess_power / r.L * r.tau_Q, label=rf"$\tau_Q$={r.tau_Q:g}")
    axes[0].set_xlabel("U / t")
    axes[0].set_ylabel(r"$(\mathcal{P}-\mathcal{P}_{ad})/(L\dot U)$")
    axes[0].legend(fontsize=8)
    tq = np.array([r.tau_Q for r in results])
    n = np.array([r.excitation for r in results])
    axes[1].loglog(tq, n, "o-", label="excitation density")
    axes[1].loglog(tq, n[0] * np.sqrt(tq[0] / tq), "k--", label=r"$\tau_Q^{-1/2}$")
    axes[1].set_xlabel(r"$\tau_Q$")
    axes[1].legend(fontsize=8)
    return _save(fig, path)


def beta_curve(N, beta, x, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(N, beta, "o-")
    ax.axhline(x / 2, ls="--", color="k", lw=0.8)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("N")
    ax.set_ylabel(r"$\beta_N(x)$")
    ax.set_title(f"x = {x:g}")
    return _save(fig, path)
