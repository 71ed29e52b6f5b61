#!/usr/bin/env python3
"""Affinity defects of rescaled iterate pairs for a conjugated rotation, as CSV and a rate fit."""
import argparse
import json

from renormlab import experiments as ex
from renormlab import renorm


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, default=8)
    ap.add_argument("--mode", type=int, default=1)
    ap.add_argument("--sup", type=float, default=0.01)
    ap.add_argument("--csv", help="write k, scale, affinity_defect, nonlinearity")
    args = ap.parse_args(argv)
    cfg = ex.PairsConfig(args.levels, ex.RoundTripConfig(mode=args.mode, sup=args.sup))
    out = ex.run_pairs(cfg)
    if args.csv:
        f, _ = ex.conjugated_rotation_map(cfg.map)
        renorm.write_defects_csv(args.csv, renorm.pair_sequence(f, ex.GAMMA, range(1, args.levels + 1)))
    print(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
