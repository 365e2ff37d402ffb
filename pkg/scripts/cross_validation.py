"""Explicit against implicit: the sup-norm gap should halve with the step."""

import argparse

from fracflow.experiments import cross_validation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, nargs="+", default=[1.5, 2.0, 3.0])
    args = ap.parse_args()
    for p in args.p:
        c = cross_validation(p)
        errs = ", ".join(f"{dt:g}: {err:.3e}" for dt, err in zip(c.dts, c.errors))
        print(f"p={p:g}  {errs}  ratios={', '.join(f'{q:.3f}' for q in c.ratios)}")


if __name__ == "__main__":
    main()
