#!/usr/bin/env python3
"""Render convergence plots from simulator trace CSVs.

Developer helper, not a product surface. Reads one or more trace files
produced by `ppgame run` or `ppgame compare` and plots the population
mean saved-noise scale and mean payment against the game iteration.

Usage:
    python scripts/plot_trace.py out/trace.csv
    python scripts/plot_trace.py out/trace-*.csv --window 100 -o curves.png
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def load_means(path: Path) -> pd.DataFrame:
    df = pd.read_csv(path)
    # One row per (t, do_id); the per-iteration means repeat per row.
    return df.groupby("t", as_index=False)[["mean_delta_sigma", "mean_price"]].first()


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("traces", nargs="+", type=Path, help="trace CSV files")
    parser.add_argument(
        "--window",
        type=int,
        default=1,
        help="rolling-mean window in iterations (default: raw values)",
    )
    parser.add_argument(
        "-o",
        "--output",
        type=Path,
        default=Path("trace_plot.png"),
        help="output image path (default: trace_plot.png)",
    )
    args = parser.parse_args()

    fig, (ax_noise, ax_price) = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
    for path in args.traces:
        means = load_means(path)
        label = path.stem.removeprefix("trace-").removeprefix("trace") or path.stem
        noise = means["mean_delta_sigma"].rolling(args.window, min_periods=1).mean()
        price = means["mean_price"].rolling(args.window, min_periods=1).mean()
        ax_noise.plot(means["t"], noise, label=label)
        ax_price.plot(means["t"], price, label=label)

    ax_noise.set_ylabel("mean saved noise scale")
    ax_price.set_ylabel("mean payment")
    ax_price.set_xlabel("iteration")
    ax_noise.legend()
    ax_noise.grid(alpha=0.3)
    ax_price.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
