"""Disk versus optimal annulus across a sigma grid in the perimeter-plus-elastica limit problem."""

import argparse
import sys

import numpy as np

from yil.limits import PHASE_CSV_HEADER, critical_sigma, phase_diagram


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sigma-min", type=float, default=0.01)
    ap.add_argument("--sigma-max", type=float, default=0.5)
    ap.add_argument("--count", type=int, default=50)
    args = ap.parse_args(argv)
    s_bar, r_bar = critical_sigma()
    sys.stderr.write(f"critical sigma {s_bar:.9f} at inner radius {r_bar:.7f}\n")
    sigmas = np.append(np.geomspace(args.sigma_min, args.sigma_max, args.count), s_bar)
    rows = phase_diagram(np.sort(sigmas))
    print(PHASE_CSV_HEADER)
    for row in rows:
        print(row.csv_row())
    return 0


if __name__ == "__main__":
    sys.exit(main())
