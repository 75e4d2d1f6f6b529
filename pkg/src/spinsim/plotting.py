"""Figure rendering for the CLI report path.

Each function takes already-computed data, writes one PNG and returns its
path. Only the Agg backend is used, so no display is needed.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (np.sqrt(5) - 1.0) / 2.0
FIG_WIDTH = 5.0

params = {
    "axes.labelsize": 9,
    "font.size": 8,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.dpi": 150,
    "savefig.dpi": 150,
    "svg.hashsalt": "spinsim",
}

# strip volatile PNG metadata so reruns produce identical bytes
_META = {"Software": None}


def _figure(nrows: int = 1, ncols: int = 1, height_scale: float = 1.0):
    with plt.rc_context(params):
        fig, ax = plt.subplots(nrows, ncols, figsize=(FIG_WIDTH, FIG_WIDTH * GOLDEN * height_scale))
    return fig, ax


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    with plt.rc_context(params):
        fig.tight_layout()
        fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def plot_pulse(t, v, envelope, path, title: str = "") -> Path:
    """Gated VCO output with the switch envelope."""
    fig, ax = _figure()
    t = np.asarray(t) * 1e12
    ax.plot(t, v, color="k", label="output")
    if envelope is not None:
        amp = np.max(np.abs(v)) if len(v) else 1.0
        ax.plot(t, amp * np.asarray(envelope), "--", color="tab:blue", label="switch envelope (scaled)")
    ax.set_xlabel("time (ps)")
    ax.set_ylabel("amplitude")
    ax.set_title(title)
    ax.legend(loc="upper right")
    return _save(fig, path)


def plot_phase_noise(f, L_dbc, path, reference: float | None = None) -> Path:
    fig, ax = _figure()
    ax.semilogx(f, L_dbc, color="k", label="estimate")
    if reference is not None:
        ax.semilogx(f, reference - 20 * np.log10(np.asarray(f) / 1e6), "--", color="tab:red", label="-20 dB/dec target")
    ax.set_xlabel("offset frequency (Hz)")
    ax.set_ylabel("L(f) (dBc/Hz)")
    ax.legend()
    return _save(fig, path)


def plot_rabi(t, p_up, path, title: str = "") -> Path:
    fig, ax = _figure()
    ax.plot(np.asarray(t) * 1e9, p_up, color="k")
    ax.set_xlabel("pulse duration (ns)")
    ax.set_ylabel("spin-up probability")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    return _save(fig, path)


def plot_rwa(ratios, worst, phase0, path) -> Path:
    fig, ax = _figure()
    ax.loglog(ratios, worst, "o-", color="k", label="worst case over phase")
    ax.loglog(ratios, phase0, "s--", color="tab:blue", label="phase 0")
    ax.set_xlabel("f_L / f_R")
    ax.set_ylabel("pi/2 gate infidelity")
    ax.legend()
    return _save(fig, path)


def plot_budget(report: dict, path) -> Path:
    fig, ax = _figure()
    rows = report["sources"]
    names = [r["source"] for r in rows]
    vals = [r["infidelity"] * 1e6 for r in rows]
    colors = ["tab:red" if r["overrun"] else "tab:gray" for r in rows]
    ax.bar(names, vals, color=colors)
    ax.axhline(report["allocation_per_source"] * 1e6, color="k", ls="--", label="allocation per source")
    ax.set_ylabel("infidelity (x1e-6)")
    ax.set_title(f"total {report['total_infidelity']:.3g} vs allowed {report['allowed_infidelity']:.3g}")
    ax.legend()
    return _save(fig, path)


def plot_tia(f, z_db, noise_f, noise_density, path, label: str = "") -> Path:
    fig, (ax0, ax1) = _figure(2, 1, height_scale=1.6)
    ax0.semilogx(f, z_db, color="k")
    ax0.set_ylabel("Z21 (dBOhm)")
    ax0.set_title(label)
    ax1.semilogx(noise_f, np.asarray(noise_density) * 1e12, color="k")
    ax1.set_xlabel("frequency (Hz)")
    ax1.set_ylabel("output noise / |Z| (pA/sqrt(Hz))")
    return _save(fig, path)


def plot_readout_trace(t, i, v, path, title: str = "") -> Path:
    fig, (ax0, ax1) = _figure(2, 1, height_scale=1.6)
    t = np.asarray(t) * 1e9
    ax0.plot(t, np.asarray(i) * 1e9, color="k")
    ax0.set_ylabel("sensor current (nA)")
    ax0.set_title(title)
    ax1.plot(t, np.asarray(v) * 1e3, color="tab:blue", lw=0.5)
    ax1.set_xlabel("time (ns)")
    ax1.set_ylabel("TIA output (mV)")
    return _save(fig, path)


def plot_sweep(rows: list[dict], path) -> Path:
    fig, ax = _figure()
    windows = sorted({r["window"] for r in rows})
    for w in windows:
        sel = sorted((r for r in rows if r["window"] == w), key=lambda r: r["i_peak"])
        ax.semilogx([r["i_peak"] for r in sel], [r["error_rate"] for r in sel], "o-", label=f"window {w:.3g} s")
    ax.set_xlabel("peak current (A)")
    ax.set_ylabel("error rate")
    ax.legend()
    return _save(fig, path)


def plot_stability(V_L, V_R, occupancy, path, points: dict | None = None, order: list[str] | None = None) -> Path:
    """Charge stability map with the sequence points and their visiting order."""
    fig, ax = _figure(height_scale=1.3)
    occ = np.asarray(occupancy)
    codes, rank = np.unique(occ[..., 0] * 100 + occ[..., 1], return_inverse=True)
    rank = rank.reshape(occ.shape[:-1])
    xl, yl = np.asarray(V_L) * 1e3, np.asarray(V_R) * 1e3
    ax.pcolormesh(xl, yl, rank, shading="auto", cmap="Pastel1", vmin=-0.5, vmax=8.5)
    for k, c in enumerate(codes):
        m = rank == k
        ax.text(xl[m].mean(), yl[m].mean(), f"({c // 100},{c % 100})", ha="center", va="center",
                fontsize=8, color="0.35")
    if points:
        for name, (vl, vr) in points.items():
            ax.plot(vl * 1e3, vr * 1e3, "ko", ms=3)
            ax.annotate(name, (vl * 1e3, vr * 1e3), textcoords="offset points", xytext=(3, 3))
        if order:
            xs = [points[n][0] * 1e3 for n in order]
            ys = [points[n][1] * 1e3 for n in order]
            ax.plot(xs, ys, "-", color="k", lw=0.6)
    ax.set_xlabel("V_L (mV)")
    ax.set_ylabel("V_R (mV)")
    ax.grid(False)
    return _save(fig, path)
