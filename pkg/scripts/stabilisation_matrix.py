#!/usr/bin/env python3
"""Five-run stabilisation matrix plus a decay plot of the two stabilising runs.

Usage: python scripts/stabilisation_matrix.py [out_dir] [modes]
"""
import math
import sys
from pathlib import Path

import numpy as np

from chstab.lab import svg
from chstab.lab.experiments import reference_slope, run_figure3


def main(out_dir="stabilisation", modes="32"):
    out = Path(out_dir)
    results = run_figure3(out, modes=int(modes))
    series = []
    for r in results:
        print(f"M={r.config.M} lambda={r.config.lam:g}: |z(1)|/|z(0)|={r.ratio:.3e} "
              f"gamma_hat={r.gamma_hat:.3f} gamma_cert={r.gamma_cert:.3f} -> {r.verdict}")
        zz = r.record.z_norm_sq
        keep = zz > 0
        series.append((f"M={r.config.M}, lambda={r.config.lam:g}", r.record.t[keep], np.log(zz[keep])))
    best = results[-1]
    reference = None
    if best.gamma_cert > 0:
        t = best.record.t
        reference = ("certified rate", t, reference_slope(best.gamma_cert, best.config.tau, t,
                                                          best.record.z_norm_sq[0]))
    svg.line_plot(series, out / "decay.svg", title="log ||z(t)||^2", xlabel="t",
                  ylabel="log ||z||^2", reference=reference)
    print(f"wrote {out / 'verdicts.csv'} and {out / 'decay.svg'}")


if __name__ == "__main__":
    main(*sys.argv[1:])
