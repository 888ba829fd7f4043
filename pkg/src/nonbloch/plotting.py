"""SVG renderings of the CLI datasets.

Output is byte-reproducible: the Agg backend, a fixed SVG hash salt and no
date metadata.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "nonbloch"
matplotlib.rcParams["svg.fonttype"] = "none"
matplotlib.rcParams["path.simplify"] = False


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_gbz(contour, path, dots=None, bloch=()):
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    t = np.linspace(0, 2 * np.pi, 400)
    ax.plot(np.cos(t), np.sin(t), "k--", lw=0.8, label="unit circle")
    beta = np.append(contour.beta, contour.beta[:1])
    ax.plot(beta.real, beta.imag, "-", color="C0", lw=1.2, label="GBZ")
    if dots:
        b = np.array([d.beta_lo for d in dots] + [d.beta_hi for d in dots])
        ax.plot(b.real, b.imag, ".", color="C1", ms=3, label="finite chain")
    for bp in bloch:
        ax.plot(bp.beta.real, bp.beta.imag, "o", mfc="none", color="C3", ms=8)
    ax.set_aspect("equal")
    ax.set_xlabel("Re beta")
    ax.set_ylabel("Im beta")
    ax.legend(loc="upper right", fontsize=7)
    return _save(fig, path)


def plot_spectrum(values, path, pbc=None, E_B=None):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if pbc is not None:
        ax.plot(np.real(pbc), np.imag(pbc), "--", color="0.5", lw=0.8, label="periodic")
    ax.plot(np.real(values), np.imag(values), ".", color="C0", ms=4, label="open")
    if E_B is not None:
        ax.plot([np.real(E_B)], [np.imag(E_B)], "x", color="C3", ms=8, label="E_B")
    ax.set_xlabel("Re E")
    ax.set_ylabel("Im E")
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_states(amplitudes, path, highlight=None):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for i, a in enumerate(amplitudes):
        if i != highlight:
            ax.plot(np.arange(1, len(a) + 1), a, color="0.7", lw=0.6)
    if highlight is not None:
        a = amplitudes[highlight]
        ax.plot(np.arange(1, len(a) + 1), a, color="C2", lw=1.6)
    ax.set_xlabel("cell")
    ax.set_ylabel("|psi|")
    return _save(fig, path)


def plot_scaling(series, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    L = series.L
    for y, fit, color, label in (
        (series.kappa, series.fit_kappa, "C0", "|kappa_m|"),
        (series.delta_E, series.fit_energy, "C3", "|E_m - E_B|"),
    ):
        ax.loglog(L, y, "o", color=color, ms=3, label=f"{label}  slope {fit.slope:.3f}")
        ax.loglog(L, fit.predict(L), "-", color=color, lw=0.8)
    ax.set_xlabel("L")
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_dos(result, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.loglog(result.epsilon, result.counts, "o", ms=3)
    ax.loglog(result.epsilon, result.fit.predict(result.epsilon), "-", lw=0.8)
    ax.set_xlabel("epsilon")
    ax.set_ylabel("N(epsilon)")
    ax.set_title(f"alpha = {result.alpha:.3f}", fontsize=9)
    return _save(fig, path)


def plot_periodicity(result, path):
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(5, 5))
    a1.plot(result.L, result.kappa, ".-", lw=0.6, ms=3)
    a1.set_ylabel("|kappa_m|")
    a2.plot(result.L, result.residual, ".-", lw=0.6, ms=3)
    a2.set_ylabel("relative residual")
    a2.set_xlabel("L")
    return _save(fig, path)


def plot_families(fits, path, pooled=None):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for i, f in enumerate(fits):
        ax.plot(f.slope, f.kappa, "o", ms=3, color=f"C{i}", label=f"theta_B = {f.theta_B:.4f}")
    if pooled is not None:
        x = np.array([0, max(f.slope.max() for f in fits)])
        ax.plot(x, pooled * x, "k-", lw=0.8)
    ax.set_xlabel("|d|beta|/dtheta| at theta_B")
    ax.set_ylabel("|kappa_m|")
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_profiles(grid, curves, sizes, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for c, L in zip(curves, sizes):
        ax.plot(grid, c, lw=1.0, label=f"L = {L}")
    ax.set_xlabel("x / L")
    ax.set_ylabel("envelope (peak = 1)")
    ax.legend(fontsize=7)
    return _save(fig, path)
