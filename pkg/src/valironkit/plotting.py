"""Figures rendered next to the CSV/JSON outputs when ``--figures`` is given.

The delimited files are the primary artifacts; these PNGs are a convenience
view of the same data and are never read back.
"""
from __future__ import annotations

import os

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 120,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path):
    fig.tight_layout()
    # no Software/date metadata so reruns produce the same bytes
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def orbit_figure(trace, path):
    """Orbit in the plane plus the step distances d_n on a log scale."""
    with plt.rc_context(STYLE):
        fig, (a0, a1) = plt.subplots(1, 2, figsize=(8.0, 3.4))
        p = trace.points
        if trace.domain == "disk":
            t = np.linspace(0, 2 * np.pi, 400)
            a0.plot(np.cos(t), np.sin(t), color="0.6", lw=0.8)
            a0.set_aspect("equal")
            a0.plot(p.real, p.imag, ".-", ms=3, lw=0.6)
        else:
            # half-plane orbits grow geometrically; show them in log-modulus/argument form
            a0.plot(np.log10(np.abs(p)), np.angle(p), ".-", ms=3, lw=0.6)
            a0.set_xlabel("log10 |z_n|")
            a0.set_ylabel("Arg z_n")
            a0.set_ylim(0, np.pi)
        if trace.steps.size:
            a1.semilogy(np.arange(trace.steps.size), np.maximum(trace.steps, 1e-300), lw=0.8)
        a1.set_xlabel("n")
        a1.set_ylabel("d(z_n, z_n+1)")
        return _save(fig, path)


def theta_field_figure(points, theta, path):
    points = np.asarray(points)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        sc = ax.scatter(points.real, points.imag, c=theta, cmap="viridis", vmin=0, vmax=np.pi, s=30)
        fig.colorbar(sc, ax=ax, label="theta")
        ax.set_xlabel("Re z0")
        ax.set_ylabel("Im z0")
        return _save(fig, path)


def heins_figure(samples, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for s in samples:
            if s.kind == "interior-fixed":
                ax.plot(s.value.real, s.value.imag, "o", color="C0", ms=4)
                ax.annotate(f"t={s.t:g}", (s.value.real, s.value.imag), fontsize=7,
                            xytext=(3, 3), textcoords="offset points")
            elif s.kind == "boundary-dw":
                ax.plot(s.value, 0.0, "s", color="C1", ms=4)
        inf = [s.t for s in samples if s.kind == "infinity-dw"]
        if inf:
            ax.set_title(f"T(t) = infinity for t in {sorted(inf)}", fontsize=8)
        ax.set_xlabel("Re T(t)")
        ax.set_ylabel("Im T(t)")
        return _save(fig, path)


def koranyi_figure(trace, path, threshold=None):
    with plt.rc_context(STYLE):
        fig, (a0, a1) = plt.subplots(1, 2, figsize=(8.0, 3.4))
        a0.plot(trace.L, lw=0.9)
        a0.axvline(0.75 * trace.L.size, color="0.5", ls=":", lw=0.8)
        a0.set_xlabel("n")
        a0.set_ylabel("L_n")
        a1.plot(trace.S, lw=0.9, label="S_n")
        if threshold is not None:
            a1.axhline(threshold, color="C3", ls="--", lw=0.8, label="3 - sqrt 8")
        a1.set_xlabel("n")
        a1.legend(frameon=False)
        return _save(fig, path)


def figure_path(out_dir, name):
    return os.path.join(out_dir, name)
