"""Minimal SVG rendering of ensemble statistics: one line plus band per method."""

from __future__ import annotations

from pathlib import Path

from .serialize import read_stats_csv


def plot_stats(stats_csvs: dict[str, Path], out_svg, band: str = "std",
               title: str | None = None) -> Path:
    """Render method curves from stats CSVs into an SVG file.

    band="std" draws mean_log10 with a one-standard-deviation ribbon;
    band="quartile" draws median_log10 between the 0.25/0.75 quantiles.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if band not in ("std", "quartile"):
        raise ValueError(f"band must be 'std' or 'quartile', got {band!r}")
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for name, csv_path in stats_csvs.items():
        cols = read_stats_csv(csv_path)
        x = cols["index"]
        if band == "std":
            center = cols["mean_log10"]
            lo = center - cols["std_log10"]
            hi = center + cols["std_log10"]
        else:
            center = cols["median_log10"]
            lo = cols["q25_log10"]
            hi = cols["q75_log10"]
        line, = ax.plot(x, center, label=name, linewidth=1.4)
        ax.fill_between(x, lo, hi, alpha=0.2, color=line.get_color(), linewidth=0)
    ax.set_xlabel("singular value index")
    ax.set_ylabel(r"$\log_{10}\sigma$")
    if title:
        ax.set_title(title)
    ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    out_svg = Path(out_svg)
    fig.savefig(out_svg, format="svg")
    plt.close(fig)
    return out_svg
