"""Figure rendering for sweep outputs (kept out of the sweep engine itself).

Renders recovery-rate and mean-overlap curves versus the SNR exponent, one
series per (n, d), with 2-standard-error bars and the n^4 / n^2 reference
exponents marked.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .mc import GridSummary

_RC = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 150,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
}


def _plot_metric(summary: GridSummary, metric: str, se_attr: str, ylabel: str,
                 reference: float, path: Path) -> None:
    by_nd: dict[tuple, list] = {}
    for cell in summary.cells:
        by_nd.setdefault((cell.n, cell.d), []).append(cell)

    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for (n, d), cells in sorted(by_nd.items()):
            cells = sorted(cells, key=lambda c: c.snr_exponent)
            xs = [c.snr_exponent for c in cells]
            ys = [getattr(c, metric) for c in cells]
            errs = [2.0 * getattr(c, se_attr) for c in cells]
            ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=3, label=f"n={n}, d={d}")
        ax.axvline(reference, color="gray", linestyle="--", linewidth=1,
                   label=f"$n^{{{reference:g}}}$")
        ax.set_xlabel("SNR exponent $c$  (SNR $= n^c$)")
        ax.set_ylabel(ylabel)
        ax.set_ylim(-0.05, 1.05)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def render_sweep_figures(summary: GridSummary, out_dir) -> list[Path]:
    """Write recovery_rate.png and mean_overlap.png; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    recovery = out_dir / "recovery_rate.png"
    overlap = out_dir / "mean_overlap.png"
    _plot_metric(summary, "recovery_rate", "recovery_se", "exact-recovery rate", 4.0, recovery)
    _plot_metric(summary, "mean_overlap", "overlap_se", "mean overlap", 2.0, overlap)
    return [recovery, overlap]
