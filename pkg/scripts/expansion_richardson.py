"""lambda**2 (F - c P) on the unit disk at fixed alpha, by both boundary routes, with Richardson extrapolation."""

import argparse
import sys

from yil.curve import disk_system
from yil.energy import fmt12, second_order_terms
from yil.quadrature import richardson


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--lambdas", default="8,16,32,64")
    ap.add_argument("-n", type=int, default=256)
    args = ap.parse_args(argv)
    lams = [float(x) for x in args.lambdas.split(",")]
    disk = disk_system(1.0, args.n)
    target = 1.0 / (4.0 * args.alpha**4)
    print("quadrature,lambda,scaled_remainder,richardson,target")
    for quad in ("layer", "rays"):
        terms = second_order_terms(disk, args.alpha, lams, quadrature=quad)
        for k, (lam, val) in enumerate(terms):
            extra = fmt12(richardson([v for _, v in terms[: k + 1]])) if k else ""
            print(",".join([quad, fmt12(lam), fmt12(val), extra, fmt12(target)]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
