#!/usr/bin/env python3
"""Shoot several slices of the example 2D family onto rotation number golden and certify each.

Slices are independent, so they run in parallel worker processes; results
are reported in input order.
"""
import argparse
import json
from concurrent.futures import ProcessPoolExecutor

from renormlab import cfrac, herman2d


def one(c):
    params = dict(herman2d.DEFAULTS, c=c)
    sh = herman2d.shoot2d(lambda t: herman2d.example_family(t, **params), cfrac.GOLDEN, (0.55, 0.70))
    cert = herman2d.certify_herman(sh.F, cfrac.GOLDEN, rho=sh.rho)
    return {"c": c, "t_star": sh.s_star, "residual": cert.residual,
            "decay_rate": cert.decay_rate, "passes": cert.passes}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, nargs="+", default=[0.0, 0.25, 0.5])
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(one, args.c))
    else:
        rows = [one(c) for c in args.c]
    print(json.dumps(rows, indent=1))


if __name__ == "__main__":
    main()
