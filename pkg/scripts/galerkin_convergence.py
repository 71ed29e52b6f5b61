#!/usr/bin/env python3
"""Leading Galerkin eigenvalues at the golden rotation as the mode count and step size vary."""
import argparse
import json

from renormlab import cfrac, renorm


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--modes", type=int, nargs="+", default=[8, 16, 24])
    ap.add_argument("--fd-steps", type=float, nargs="+", default=[1e-4, 1e-5, 5e-6])
    ap.add_argument("--steps", type=int, default=2)
    args = ap.parse_args(argv)
    rows = []
    for M in args.modes:
        for h in args.fd_steps:
            sp = renorm.spectrum(renorm.galerkin_differential(cfrac.GOLDEN, M, h, args.steps))
            rows.append({"M": M, "fd_step": h, "leading": abs(sp.eigenvalues[0]),
                         "second": sp.second_modulus, "unstable_count": sp.unstable_count,
                         "angle": sp.angle_to_rotation})
    print(json.dumps({"target": cfrac.GOLDEN ** (-2 * args.steps), "rows": rows}, indent=1))


if __name__ == "__main__":
    main()
