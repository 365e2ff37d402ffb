"""Track the separated solution t^(-1/(p-2)) F(x) started at t = 1."""

import argparse

from fracflow.experiments import self_similar


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=3.0)
    ap.add_argument("--N", type=int, default=256)
    ap.add_argument("--t-end", type=float, default=10.0)
    args = ap.parse_args()
    r = self_similar(p=args.p, N=args.N, t_end=args.t_end)
    print(f"lambda_h={r.profile.lambda_h:.10g} profile residual={r.profile.residual:.3g}")
    for t, d in zip(r.times[:: max(1, len(r.times) // 10)], r.deviation[:: max(1, len(r.times) // 10)]):
        print(f"  t={t:8.4f}  |v-U|/|U| = {d:.3e}")
    print(f"max deviation {r.max_deviation:.4g}  ({r.seconds:.1f}s)")


if __name__ == "__main__":
    main()
