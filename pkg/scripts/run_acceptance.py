#!/usr/bin/env python3
"""Run the acceptance experiments and print their results (or hashes) as JSON."""
import argparse
import hashlib
import json
import sys

from renormlab import experiments as ex


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--criteria", type=int, nargs="*", default=sorted(ex.RUNNERS))
    ap.add_argument("--hash", action="store_true", help="print sha256 of each result instead")
    args = ap.parse_args(argv)
    out = {}
    for n in args.criteria:
        res = ex.RUNNERS[n]()
        out[str(n)] = hashlib.sha256(ex.canonical_json(res).encode()).hexdigest() if args.hash else res
    sys.stdout.write(json.dumps(out, sort_keys=True, indent=None if args.hash else 1) + "\n")


if __name__ == "__main__":
    main()
