"""Sup-norm decay exponent of a bump against the zero solution (degenerate regime)."""

import argparse

from fracflow.experiments import power_decay


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, nargs="+", default=[3.0, 4.0])
    ap.add_argument("--N", type=int, default=256)
    ap.add_argument("--t-end", type=float, default=100.0)
    args = ap.parse_args()
    for p in args.p:
        r = power_decay(p=p, N=args.N, t_end=args.t_end)
        print(f"p={p:g}: {r.report.summary()}  monotone violations={r.monotone}  ({r.seconds:.1f}s)")


if __name__ == "__main__":
    main()
