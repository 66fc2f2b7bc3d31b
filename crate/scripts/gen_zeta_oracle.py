#!/usr/bin/env python3
"""Generate reference values of the Riemann zeta function with mpmath.

Writes plain-text rows "sigma t re_zeta im_zeta" (15 significant digits)
used by the test suite and by `zrec verify`.
"""
import random
import sys

import mpmath

mpmath.mp.dps = 40


def row(sigma, t):
    z = mpmath.zeta(mpmath.mpc(sigma, t))
    return "%.15g %.15g %.15e %.15e" % (sigma, t, float(z.real), float(z.imag))


def main():
    rng = random.Random(20240611)
    rows = []
    # fixed anchors
    rows.append(row(0.75, 100.0))
    rows.append(row(0.75, 0.0))
    rows.append(row(0.6, 14.134725))
    # structured grid
    for sigma in (0.6, 0.7, 0.8, 0.9, 0.95):
        for t in (-1000.0, -250.0, -37.5, -1.0, 0.5, 3.0, 21.0, 77.7, 333.0, 999.0):
            rows.append(row(sigma, t))
    # random points
    while len(rows) < 240:
        sigma = round(rng.uniform(0.6, 0.95), 6)
        t = round(rng.uniform(-1000.0, 1000.0), 6)
        rows.append(row(sigma, t))
    out = sys.argv[1] if len(sys.argv) > 1 else "zeta_oracle.txt"
    with open(out, "w") as fh:
        fh.write("# sigma t re_zeta im_zeta (mpmath, 40 digits working precision)\n")
        for r in rows:
            fh.write(r + "\n")

    # large-height spot checks for the double-double phase path
    high = []
    for sigma, t in ((0.75, 1.0e4), (0.73, 54321.125), (0.77, -1.0e5), (0.75, 7.5e5), (0.74, 2.0e6)):
        high.append(row(sigma, t))
    out_high = out.replace(".txt", "_high.txt")
    with open(out_high, "w") as fh:
        fh.write("# sigma t re_zeta im_zeta (mpmath, large height)\n")
        for r in high:
            fh.write(r + "\n")


if __name__ == "__main__":
    main()
