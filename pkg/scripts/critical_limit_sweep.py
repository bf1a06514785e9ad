"""lambda**2 F in the critical scaling against the perimeter-plus-elastica value, over a lambda sweep.

The annulus rows show how far lambda must grow before the two boundary
circles stop interacting: the screening length 1/(lambda alpha) has to be
small against the ring width sqrt(1 + r**2) - r.
"""

import argparse
import math
import sys

from yil.curve import annulus_system, disk_system
from yil.energy import fmt12
from yil.limits import critical_limit_check, elastica_energy
from yil.specfun import ScreeningParams


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambdas", default="16,32,64,128,256,512,1024")
    ap.add_argument("--annulus-r", type=float, default=4.0)
    ap.add_argument("--annulus-sigma", type=float, default=0.05)
    ap.add_argument("--disk-sigma", type=float, default=1.0)
    ap.add_argument("--quadrature", choices=("rays", "layer"), default="rays")
    args = ap.parse_args(argv)
    lams = [float(x) for x in args.lambdas.split(",")]
    cases = [("disk", disk_system(1.0, 256), args.disk_sigma),
             (f"annulus_r{args.annulus_r:g}", annulus_system(args.annulus_r, n=256), args.annulus_sigma)]
    print("shape,sigma,lambda,screening_length,scaled_energy,limit_value,rel_err")
    for name, system, sigma in cases:
        limit = elastica_energy(system, sigma)
        for lam, scaled in critical_limit_check(system, sigma, lams, quadrature=args.quadrature):
            length = 1.0 / ScreeningParams.from_sigma(lam, sigma).beta
            print(",".join([name, fmt12(sigma), fmt12(lam), fmt12(length), fmt12(scaled), fmt12(limit),
                            fmt12(abs(scaled - limit) / limit)]))
            sys.stdout.flush()
    width = math.sqrt(1 + args.annulus_r**2) - args.annulus_r
    sys.stderr.write(f"annulus ring width {width:.6f}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
