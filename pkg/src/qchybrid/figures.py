"""Report figures rendered next to the CSV output.

Static PNGs only; the CSV stays the authoritative record.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def run_record_figure(record, path) -> str:
    """Probe overview of a single run: moments, conservation, correlation."""
    t = record.times
    fig, axes = plt.subplots(2, 2, figsize=(9, 6.5), constrained_layout=True)

    ax = axes[0, 0]
    ax.plot(t, record.column("x_var"), label="var(x)")
    ax.plot(t, record.column("q_var"), label="var(q)")
    ax.plot(t, record.column("x_mean"), "--", label="mean(x)")
    ax.plot(t, record.column("q_mean"), "--", label="mean(q)")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    ax.set_title("configuration moments")

    ax = axes[0, 1]
    ax.plot(t, record.column("energy") - record.column("energy")[0], label="energy - E(0)")
    ax.plot(t, record.column("norm") - 1.0, label="norm - 1")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    ax.set_title("conservation drift")

    ax = axes[1, 0]
    ax.plot(t, record.column("separability_defect"))
    ax.set_xlabel("t")
    ax.set_title("separability defect")

    ax = axes[1, 1]
    ax.plot(t, record.column("px2"), label="<p_x^2>")
    ax.plot(t, record.column("pq2"), label="<p_q^2>")
    ax.plot(t, record.column("signal_integral"), label="signal integral")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    ax.set_title("momentum moments")

    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return str(path)


def signal_report_figures(report, outdir) -> list[str]:
    """Branch comparison and onset panel for a signaling report."""
    os.makedirs(outdir, exist_ok=True)
    t = report.times
    t_off = report.protocol.t_off
    paths = []

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4), constrained_layout=True)
    ax1.plot(t, report.series_a.x_second_moment(), label="branch A")
    ax1.plot(t, report.series_b.x_second_moment(), "--", label="branch B")
    ax1.axvline(t_off, color="k", lw=0.8, alpha=0.5)
    ax1.set_xlabel("t")
    ax1.set_ylabel("<x^2>")
    ax1.legend(fontsize=8)
    ax1.set_title("classical position variance per branch")

    ax2.plot(t, report.divergence)
    ax2.axvline(t_off, color="k", lw=0.8, alpha=0.5)
    ax2.axhline(report.threshold, color="r", lw=0.8, ls=":", label="threshold")
    ax2.axhline(-report.threshold, color="r", lw=0.8, ls=":")
    ax2.set_xlabel("t")
    ax2.set_ylabel("<x^2>_A - <x^2>_B")
    ax2.legend(fontsize=8)
    ax2.set_title(f"divergence (detected = {report.detected})")
    p1 = os.path.join(outdir, "divergence.png")
    fig.savefig(p1, dpi=DPI)
    plt.close(fig)
    paths.append(p1)

    post = report.post_branch()
    tau = t[post] - t_off
    d = np.abs(report.divergence[post])
    good = d > 0
    if good.sum() >= 3:
        fig, ax = plt.subplots(figsize=(5, 4), constrained_layout=True)
        ax.loglog(tau[good], d[good], ".", ms=3)
        if report.onset_power is not None:
            ax.loglog(
                tau[good],
                report.onset_coefficient * tau[good] ** report.onset_power,
                "r-",
                lw=1,
                label=f"fit: p = {report.onset_power:.2f}",
            )
            ax.legend(fontsize=8)
        ax.set_xlabel("t - t_off")
        ax.set_ylabel("|divergence|")
        ax.set_title("onset power law")
        p2 = os.path.join(outdir, "onset.png")
        fig.savefig(p2, dpi=DPI)
        plt.close(fig)
        paths.append(p2)
    return paths
