#!/usr/bin/env python3
"""Render tracking-error plots from one or more metrics.csv files.

Each input is either a metrics.csv path or a run directory containing one.
The `ex` column (log10 mean tracking error) is plotted against time; pass
--column to plot another metrics column instead. Plotting is a convenience
on top of the CSV outputs, not part of the simulator contract.
"""

import argparse
import csv
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def resolve(path: pathlib.Path) -> pathlib.Path:
    if path.is_dir():
        path = path / "metrics.csv"
    if not path.is_file():
        sys.exit(f"error: {path} not found")
    return path


def load_column(path: pathlib.Path, column: str):
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or column not in reader.fieldnames:
            have = ", ".join(reader.fieldnames or [])
            sys.exit(f"error: {path} has no '{column}' column (columns: {have})")
        times, values = [], []
        for row in reader:
            times.append(float(row["t"]))
            values.append(float(row[column]))
    return times, values


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("inputs", nargs="+", type=pathlib.Path,
                        help="metrics.csv files or run directories")
    parser.add_argument("--column", default="ex",
                        help="metrics column to plot (default: ex)")
    parser.add_argument("--out", type=pathlib.Path, default=None,
                        help="output image (default: <column>.png next to the "
                             "first input)")
    parser.add_argument("--title", default=None, help="figure title")
    args = parser.parse_args()

    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for raw in args.inputs:
        path = resolve(raw)
        times, values = load_column(path, args.column)
        label = path.parent.name or str(path)
        ax.plot(times, values, label=label, linewidth=1.2)

    ax.set_xlabel("t [s]")
    if args.column == "ex":
        ax.set_ylabel("log10 mean tracking error")
    else:
        ax.set_ylabel(args.column)
    ax.grid(True, alpha=0.3)
    if len(args.inputs) > 1:
        ax.legend()
    if args.title:
        ax.set_title(args.title)

    out = args.out or resolve(args.inputs[0]).parent / f"{args.column}.png"
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
