"""Self-interaction of the annulus with an off-centre hole, offsets up to the tangent position.

Numerical evidence only: a nondecreasing profile supports, and does not
prove, minimality of the concentric configuration.
"""

import argparse
import math
import sys

import numpy as np

from yil.energy import fmt12
from yil.limits import centered_hole_scan


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--radius", type=float, default=1.0)
    ap.add_argument("--lam", type=float, default=2.0)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--h", type=float, default=0.01)
    ap.add_argument("--count", type=int, default=9)
    args = ap.parse_args(argv)
    tangent = math.sqrt(1 + args.radius**2) - args.radius
    offsets = np.linspace(0.0, tangent, args.count)
    print("offset,f_value,est_error")
    for row in centered_hole_scan(args.radius, args.lam, args.alpha, offsets, args.h):
        print(",".join(map(fmt12, (row.offset, row.f_value, row.est_error))))
    return 0


if __name__ == "__main__":
    sys.exit(main())
