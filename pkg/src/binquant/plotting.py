"""Figure rendering for experiment reports.

Uses the object-oriented matplotlib API (no pyplot state), so figures can be
written from worker processes and tests without a display.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

__all__ = ["plot_estimates", "plot_errors", "plot_log_mse", "plot_rate_table"]

STYLE = {
    "figsize": (6.4, 4.0),
    "dpi": 120,
}


def _new(**kw):
    fig = Figure(figsize=kw.get("figsize", STYLE["figsize"]), dpi=STYLE["dpi"])
    return fig, fig.add_subplot(1, 1, 1)


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None} if path.suffix == ".png" else None)
    return path


def plot_estimates(result, truth, path, p: int | None = None, title: str | None = None) -> Path:
    """Trial-mean estimate trajectories with the true values as dashed lines."""
    fig, ax = _new()
    k = result.k
    p = 0 if p is None else p
    labels = [f"$a_{i + 1}$" for i in range(p)] + [f"$b_{j + 1}$" for j in range(len(truth) - p)]
    for i, value in enumerate(truth):
        line, = ax.plot(k, result.mean_theta[:, i], lw=1.2, label=labels[i])
        ax.axhline(value, color=line.get_color(), ls="--", lw=0.8)
    ax.set_xlabel("k")
    ax.set_ylabel("estimate")
    ax.set_title(title or "Trajectories of estimates")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_errors(results: dict, path, title: str | None = None) -> Path:
    """Squared parameter error against k, one line per labelled run."""
    fig, ax = _new()
    for label, res in results.items():
        ax.plot(res.k, res.mean_e_sq[res.k - 1], lw=1.0, label=label)
    ax.set_yscale("log")
    ax.set_xlabel("k")
    ax.set_ylabel(r"$\|e_k\|^2$")
    ax.set_title(title or "Squared estimation error")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_log_mse(results: dict, path, title: str | None = None) -> Path:
    """log(MSE) against log(k) with a 1/k guide through the first run's endpoint."""
    fig, ax = _new()
    first = None
    for label, res in results.items():
        k = res.k
        ax.plot(np.log10(k), np.log10(res.mean_e_sq[k - 1]), lw=1.0, label=label)
        first = first or res
    if first is not None:
        k = first.k.astype(float)
        anchor = first.mean_e_sq[-1] * first.horizon
        ax.plot(np.log10(k), np.log10(anchor / k), "k:", lw=0.8, label="1/k")
    ax.set_xlabel(r"$\log_{10} k$")
    ax.set_ylabel(r"$\log_{10}$ MSE")
    ax.set_title(title or "Log MSE versus log k")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_rate_table(rows, path) -> Path:
    """Fitted exponent against effective rate eta, with the predicted ``-min(eta, 1)`` curve."""
    fig, ax = _new()
    eta = np.array([r["eta"] for r in rows])
    fitted = np.array([r["fitted_exponent"] for r in rows])
    grid = np.linspace(min(eta.min(), 0.0), eta.max(), 200)
    ax.plot(grid, -np.clip(grid, 0.0, 1.0), "k--", lw=0.8, label="predicted")
    ax.plot(eta, fitted, "o", ms=4, label="fitted")
    ax.set_xlabel(r"$\eta$")
    ax.set_ylabel("fitted exponent")
    ax.legend(frameon=False)
    return _save(fig, path)
