#!/usr/bin/env python3
"""Plot simulation output CSVs produced by `maxcond simulate`.

For 1-d grids, draws the simulated fields per replicate and, when an
`atoms.csv` dump is present, the point-measure atoms with extremal atoms in
black and sub-extremal atoms in grey.

Usage: python3 python/plot_fields.py OUT_DIR [--replicates N] [--save FILE]
"""

import argparse
import csv
import pathlib
import sys
from collections import defaultdict


def read_rows(path):
    with open(path) as fh:
        rows = [r for r in csv.DictReader(line for line in fh if not line.startswith("#"))]
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--replicates", type=int, default=3, help="replicates to draw")
    ap.add_argument("--save", type=pathlib.Path, help="write a PNG instead of showing")
    args = ap.parse_args()

    import matplotlib

    if args.save:
        matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fields_path = args.out_dir / "fields.csv"
    if not fields_path.exists():
        sys.exit(f"no fields.csv under {args.out_dir}")
    fields = defaultdict(list)  # replicate -> [(x, value)]
    for row in read_rows(fields_path):
        fields[int(row["replicate"])].append((float(row["x"]), float(row["value"])))

    atoms_path = args.out_dir / "atoms.csv"
    atoms = defaultdict(lambda: defaultdict(list))  # replicate -> atom_id -> rows
    if atoms_path.exists():
        for row in read_rows(atoms_path):
            atoms[int(row["replicate"])][int(row["atom_id"])].append(row)

    reps = sorted(fields)[: args.replicates]
    fig, axes = plt.subplots(1, len(reps), figsize=(4.5 * len(reps), 3.4), squeeze=False)
    for ax, rep in zip(axes[0], reps):
        for atom_id, rows in sorted(atoms.get(rep, {}).items()):
            rows.sort(key=lambda r: float(r["x"]))
            xs = [float(r["x"]) for r in rows]
            vs = [float(r["value"]) for r in rows]
            extremal = rows[0]["extremal_flag"] == "1"
            ax.plot(
                xs,
                vs,
                color="black" if extremal else "0.75",
                lw=1.0 if extremal else 0.6,
                zorder=2 if extremal else 1,
            )
        pts = sorted(fields[rep])
        ax.plot(
            [x for x, _ in pts],
            [v for _, v in pts],
            "o-",
            color="tab:red",
            ms=4,
            lw=1.4,
            zorder=3,
            label="field",
        )
        ax.set_title(f"replicate {rep}")
        ax.set_xlabel("x")
    axes[0][0].set_ylabel("value")
    axes[0][0].legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=150)
        print(f"wrote {args.save}")
    else:
        plt.show()


if __name__ == "__main__":
    main()
