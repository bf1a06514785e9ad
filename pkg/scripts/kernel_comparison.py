"""Exact interface kernel against its Yukawa form for several permittivities; slope and crossover per row."""

import argparse
import sys

import numpy as np

from yil.energy import fmt12
from yil.physics import (MonolayerParams, exact_interface_kernel, farfield_slope, yukawa_crossover,
                         yukawa_interface_kernel)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps-d", default="20,80,320")
    args = ap.parse_args(argv)
    print("eps_d,max_rel_err_kr_0.1_3,rel_err_at_kr_1,farfield_slope,crossover_kr_10pct")
    for eps_d in (float(x) for x in args.eps_d.split(",")):
        p = MonolayerParams(q=1.0, rho=1.0, eps0=1.0, kappa_D=1.0, gamma_line=1.0, eps_d=eps_d)

        def rel(kr):
            ex = exact_interface_kernel(kr, p)
            return abs(yukawa_interface_kernel(kr, p) - ex) / ex

        worst = max(rel(float(kr)) for kr in np.linspace(0.1, 3.0, 30))
        cross = yukawa_crossover(p)
        print(",".join([fmt12(eps_d), fmt12(worst), fmt12(rel(1.0)), fmt12(farfield_slope(p)),
                        "" if cross is None else fmt12(cross)]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
