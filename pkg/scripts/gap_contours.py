#!/usr/bin/env python3
"""alpha_min over an (M, lambda) grid at two viscosities and two truncations.

Writes one CSV and one SVG contour plot per (nu, N); the red dotted level is
C*(R, nu). Usage: python scripts/gap_contours.py [out_dir]
"""
import sys
from pathlib import Path

import numpy as np

from chstab.gap import scan, write_scan_csv
from chstab.lab import svg
from chstab.spectral import Discretization

R = 1.0
CASES = [
    # nu, M range, lambda range
    (0.01, range(1, 9), np.geomspace(1, 200, 12)),
    (0.001, range(4, 17), np.geomspace(10, 1e5, 12)),
]


def main(out_dir="gap_contours"):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for nu, Ms, lams in CASES:
        for N in (16, 32):
            rows = scan(Discretization(2, N), nu, R, Ms, lams, workers=4)
            stem = out / f"nu{nu:g}_N{N}"
            write_scan_csv(rows, stem.with_suffix(".csv"))
            Z = np.array([r.alpha_min for r in rows]).reshape(len(Ms), len(lams))
            c_star = rows[0].c_star
            levels = list(np.linspace(0, 2 * c_star, 5)[1:])
            svg.contour_plot(list(Ms), lams, Z, levels, stem.with_suffix(".svg"),
                             highlight=c_star, xlabel="M", ylabel="lambda",
                             title=f"alpha_min, nu={nu:g}, N={N}")
            certified = [(r.M, r.lam) for r in rows if r.gamma > 0]
            smallest = min((m for m, _ in certified), default=None)
            print(f"nu={nu:g} N={N}: C*={c_star:.1f}, {len(certified)} certified points, "
                  f"smallest certified M={smallest}")


if __name__ == "__main__":
    main(*sys.argv[1:])
