#!/usr/bin/env python3
"""Plot type-I-error and power surfaces from a calibration surface CSV
(written by `bmw-design calibrate`), shading the feasible region where the
null rejection rate stays at or below the nominal level.

Usage: python scripts/plot_surfaces.py surface_efficacy.csv --alpha 0.1 --out surfaces.png
"""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("surface_csv")
    parser.add_argument("--alpha", type=float, default=0.1)
    parser.add_argument("--out", default="surfaces.png")
    parser.add_argument("--mark", type=float, nargs=2, default=None,
                        metavar=("LAMBDA", "GAMMA"))
    args = parser.parse_args()

    rows = list(csv.DictReader(open(args.surface_csv)))
    lams = sorted({float(r["lambda"]) for r in rows})
    gams = sorted({float(r["gamma"]) for r in rows})
    t1 = np.full((len(gams), len(lams)), np.nan)
    pw = np.full_like(t1, np.nan)
    li = {v: i for i, v in enumerate(lams)}
    gi = {v: i for i, v in enumerate(gams)}
    for r in rows:
        t1[gi[float(r["gamma"])], li[float(r["lambda"])]] = float(r["poe_null"])
        pw[gi[float(r["gamma"])], li[float(r["lambda"])]] = float(r["poe_alt"])

    fig, axes = plt.subplots(1, 2, figsize=(12, 4.5), constrained_layout=True)
    extent = (min(lams), max(lams), min(gams), max(gams))
    for ax, surface, title in ((axes[0], t1, "null rejection rate"),
                               (axes[1], pw, "power")):
        im = ax.imshow(surface, origin="lower", aspect="auto", extent=extent,
                       cmap="viridis")
        ax.contourf(lams, gams, t1, levels=[0, args.alpha], colors=["#4477ff"],
                    alpha=0.35)
        ax.set_xlabel("lambda")
        ax.set_ylabel("gamma")
        ax.set_title(f"{title} (shaded: null rate <= {args.alpha})")
        if args.mark:
            ax.plot(*args.mark, "ro", markersize=8, fillstyle="none")
        fig.colorbar(im, ax=ax)
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
