#!/usr/bin/env python3
"""Render PNGs from the CSV files a run directory contains.

Out-of-process on purpose: the CSVs are the contract, this script is a
convenience consumer. Usage:

    python3 scripts/plot_results.py OUT_DIR [--dpi 140]

Looks for spectrum.csv, linear_decay_curves.csv, rate_table.csv,
lyapunov.csv, and diagnostics.csv; skips whatever is absent.
"""

import argparse
import csv
import math
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {}
    for j, name in enumerate(header):
        vals = []
        for row in body:
            try:
                vals.append(float(row[j]))
            except ValueError:
                vals.append(row[j])
        cols[name] = vals
    return cols


def save(fig, out_dir, name, dpi):
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=dpi, bbox_inches="tight")
    plt.close(fig)
    print(f"wrote {path}")


def plot_spectrum(cols, out_dir, dpi):
    k = cols["kmag"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    for j, style in zip((1, 2, 3), ("-", "--", ":")):
        ax1.plot(k, cols[f"re_lambda{j}"], style, label=f"Re lambda{j}")
    ax1.set_xscale("log")
    ax1.set_xlabel("|k|")
    ax1.legend()
    ax1.set_title("root real parts")
    for j, style in zip((1, 2, 3), ("-", "--", ":")):
        ax2.loglog(k, cols[f"gap_lambda{j}"], style, label=f"gap{j}")
    ax2.set_xlabel("|k|")
    ax2.legend()
    ax2.set_title("distance to small-k predictions")
    save(fig, out_dir, "spectrum.png", dpi)


def plot_decay_curves(cols, out_dir, dpi, name):
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    t = cols["t"]
    for col, vals in cols.items():
        if col == "t":
            continue
        if all(isinstance(v, float) and v > 0 for v in vals):
            ax.loglog(t, vals, label=col)
    ax.set_xlabel("t")
    ax.legend(fontsize=7)
    ax.set_title(name.replace(".csv", ""))
    save(fig, out_dir, name.replace(".csv", ".png"), dpi)


def plot_rate_table(cols, out_dir, dpi):
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    labels = [f"{q} (q={qq})" for q, qq in zip(cols["quantity"], cols["q"])]
    xs = range(len(labels))
    ax.scatter(xs, cols["theory_exponent"], marker="_", s=300,
               label="theory")
    fitted = [v if isinstance(v, float) else math.nan
              for v in cols["fitted_exponent"]]
    ax.scatter(xs, fitted, marker="o", s=25, label="fitted")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, rotation=35, ha="right", fontsize=7)
    ax.set_ylabel("log-log exponent")
    ax.legend()
    save(fig, out_dir, "rate_table.png", dpi)


def plot_lyapunov(cols, out_dir, dpi):
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    by_k = {}
    for kmag, t, e, env in zip(cols["kmag"], cols["t"], cols["energy"],
                               cols["envelope"]):
        by_k.setdefault(kmag, []).append((t, e, env))
    for kmag, rows in sorted(by_k.items()):
        rows.sort()
        ts = [r[0] for r in rows]
        ax.semilogy(ts, [max(r[1], 1e-300) for r in rows],
                    label=f"|k|={kmag:g}")
        ax.semilogy(ts, [max(r[2], 1e-300) for r in rows], "k:", lw=0.6)
    ax.set_xlabel("t")
    ax.set_ylabel("mode energy (dotted: envelope)")
    ax.legend(fontsize=7)
    save(fig, out_dir, "lyapunov.png", dpi)


def plot_diagnostics(cols, out_dir, dpi):
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    t = cols["t"]
    for name in ("l2_rho", "l2_u", "l2_phi", "h1_rho"):
        if any(v > 0 for v in cols[name]):
            axes[0].loglog([x + 1.0 for x in t], cols[name], label=name)
    axes[0].set_xlabel("1 + t")
    axes[0].legend(fontsize=7)
    axes[0].set_title("fluctuation norms")
    axes[1].plot(t, cols["F"], label="F")
    axes[1].plot(t, cols["E_N"], "--", label="E_N")
    axes[1].set_xlabel("t")
    axes[1].legend()
    axes[1].set_title("energy functionals")
    save(fig, out_dir, "diagnostics.png", dpi)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir")
    ap.add_argument("--dpi", type=int, default=140)
    args = ap.parse_args(argv)
    handlers = {
        "spectrum.csv": plot_spectrum,
        "rate_table.csv": plot_rate_table,
        "lyapunov.csv": plot_lyapunov,
        "diagnostics.csv": plot_diagnostics,
    }
    found = 0
    for name, handler in handlers.items():
        path = os.path.join(args.out_dir, name)
        if os.path.exists(path):
            handler(read_csv(path), args.out_dir, args.dpi)
            found += 1
    for name in ("linear_decay_curves.csv", "linf_envelope_rho.csv"):
        path = os.path.join(args.out_dir, name)
        if os.path.exists(path):
            plot_decay_curves(read_csv(path), args.out_dir, args.dpi, name)
            found += 1
    if not found:
        print(f"no known CSV files under {args.out_dir}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
