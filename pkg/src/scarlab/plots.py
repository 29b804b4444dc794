"""Figure rendering for the CLI report path.

Figures are a convenience view next to the delimited output; the CSV files
remain the authoritative record. Uses the Agg backend so runs work headless.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_quench_figure(path, fidelity_series, correlation_series, title=""):
    """Two stacked panels: fidelity and bond-averaged ZZ correlation."""
    fig, (ax_f, ax_c) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for label, ts in fidelity_series.items():
        ax_f.plot(ts.times, ts.values, lw=1.0, label=label)
    ax_f.set_ylabel("fidelity")
    ax_f.set_ylim(-0.02, 1.02)
    ax_f.grid(alpha=0.3)
    if len(fidelity_series) > 1:
        ax_f.legend(fontsize=8)
    for label, ts in correlation_series.items():
        ax_c.plot(ts.times, ts.values, lw=1.0, label=label)
    ax_c.set_ylabel(r"$\langle Z_i Z_{i+1} \rangle$")
    ax_c.set_xlabel("time")
    ax_c.grid(alpha=0.3)
    if title:
        ax_f.set_title(title)
    return _finish(fig, path)


def save_sweep_figure(path, result, fit=None, title=""):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.errorbar(
        result.w_values, result.mean_peaks, yerr=result.stderr_peaks,
        fmt="o", ms=4, capsize=3, label="ensemble mean",
    )
    if fit is not None:
        w_fine = np.linspace(result.w_values.min(), result.w_values.max(), 200)
        ax.plot(
            w_fine, fit.evaluate(w_fine), "-", lw=1.2,
            label=f"a e^(-b W^2)+c, b={fit.b:.2f}",
        )
    ax.set_xlabel("disorder strength W")
    ax.set_ylabel("peak fidelity magnitude")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    return _finish(fig, path)


def save_entropy_figure(path, scatters, title=""):
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for sc in scatters:
        ax.scatter(sc.energies, sc.entropies, s=6, alpha=0.6, label=f"W={sc.strength:g}")
    ax.set_xlabel("energy")
    ax.set_ylabel("entanglement entropy")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    return _finish(fig, path)


def save_overlap_figure(path, spectra, title=""):
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    floor = 1e-16
    for label, sp in spectra.items():
        ax.scatter(
            sp.energies, np.maximum(sp.overlaps, floor), s=8, alpha=0.7, label=label
        )
    ax.set_yscale("log")
    ax.set_ylim(bottom=1e-9)
    ax.set_xlabel("energy")
    ax.set_ylabel("squared overlap")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    return _finish(fig, path)


def save_defect_figure(path, study, title=""):
    """Fidelity traces of the intact and defect states plus the reduced chain."""
    fig, (ax_f, ax_c) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    styles = {
        "z2": dict(lw=1.2),
        "z2_defect_down": dict(lw=1.0),
        "z2_defect_up": dict(lw=1.0),
        "z2_defect_up_reduced": dict(lw=1.0, ls="--"),
    }
    for key, ts in study.fidelity.items():
        ax_f.plot(ts.times, ts.values, label=key, **styles.get(key, {}))
    ax_f.set_ylabel("fidelity")
    ax_f.grid(alpha=0.3)
    ax_f.legend(fontsize=8)
    for key, ts in study.correlation.items():
        ax_c.plot(ts.times, ts.values, label=key, **styles.get(key, {}))
    ax_c.set_ylabel(r"$\langle Z_i Z_{i+1} \rangle$")
    ax_c.set_xlabel("time")
    ax_c.grid(alpha=0.3)
    if title:
        ax_f.set_title(title)
    return _finish(fig, path)
