"""Report figures rendered straight to files (headless backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "energy_figure",
    "terminal_figure",
    "spectrum_figure",
    "sweep_figure",
    "decay_figure",
    "save_figure",
]

_STYLE = {
    "figure.figsize": (7.0, 4.2),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
}


def save_figure(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def energy_figure(traj):
    """Total energy on a log scale, with the conservation drift alongside."""
    with plt.rc_context(_STYLE):
        fig, (ax, ax2) = plt.subplots(1, 2, figsize=(9.5, 4.0))
        ax.semilogy(traj.times, np.maximum(traj.Etot, 1e-300), lw=1.2,
                    label="total energy")
        ax.semilogy(traj.times, np.maximum(traj.E0, 1e-300), lw=1.0, ls="--",
                    label="field energy")
        ax.set_xlabel("t")
        ax.set_ylabel("energy")
        ax.legend()
        ax2.plot(traj.times, traj.ell, lw=1.0)
        ax2.set_xlabel("t")
        ax2.set_ylabel("conserved functional drift")
        ax2.ticklabel_format(axis="y", style="sci", scilimits=(-2, 2))
        fig.suptitle("energy decay and conservation")
    return fig


def terminal_figure(traj, omega: float):
    """Final displacement against the predicted equilibrium constant."""
    state = traj.final_state
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(state.grid.x, state.y, lw=1.4, label=f"y at t={traj.times[-1]:g}")
        ax.axhline(omega, color="k", ls=":", lw=1.2,
                   label=f"predicted equilibrium {omega:.6g}")
        ax.set_xlabel("x")
        ax.set_ylabel("displacement")
        ax.legend()
        ax.set_title("terminal profile")
    return fig


def spectrum_figure(full_report, restricted_report=None):
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 5.2))
        lam = full_report.eigenvalues
        ax.scatter(lam.real, lam.imag, s=12, alpha=0.8, label="full operator")
        if restricted_report is not None:
            mu_ = restricted_report.eigenvalues
            ax.scatter(mu_.real, mu_.imag, s=10, marker="x", alpha=0.7,
                       label="restricted")
        ax.axvline(0.0, color="k", lw=0.8)
        ax.set_xlabel("Re")
        ax.set_ylabel("Im")
        ax.legend()
        ax.set_title("generator spectrum")
    return fig


def sweep_figure(sweep):
    with plt.rc_context(_STYLE):
        fig, (ax, ax2) = plt.subplots(1, 2, figsize=(9.5, 4.0))
        ax.loglog(sweep.gammas, sweep.norms, lw=1.2)
        ax.set_xlabel("gamma")
        ax.set_ylabel("resolvent norm")
        ax2.loglog(sweep.gammas, sweep.scaled, lw=1.2)
        ax2.axhline(sweep.sup_scaled, color="k", ls=":", lw=1.0,
                    label=f"sup {sweep.sup_scaled:.4g}")
        ax2.set_xlabel("gamma")
        ax2.set_ylabel("norm / gamma^2")
        ax2.legend()
        fig.suptitle("resolvent sweep on the imaginary axis")
    return fig


def decay_figure(traj, fit):
    """Deviation norm on log-log axes with the fitted power law overlaid."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        mask = traj.times > 0
        ax.loglog(traj.times[mask], np.maximum(traj.dev_norm[mask], 1e-300),
                  lw=1.1, label="deviation norm")
        t_lo, t_hi = fit.window
        ts = np.geomspace(t_lo, t_hi, 50)
        anchor = np.interp(t_lo, traj.times, traj.dev_norm)
        ax.loglog(ts, anchor * (ts / t_lo) ** fit.slope, "k--", lw=1.2,
                  label=f"slope {fit.slope:.3f}")
        ax.axvspan(t_lo, t_hi, alpha=0.08, color="tab:orange", label="fit window")
        ax.set_xlabel("t")
        ax.set_ylabel("deviation from equilibrium")
        ax.legend()
        ax.set_title("polynomial decay fit")
    return fig
