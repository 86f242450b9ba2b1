#!/usr/bin/env python3
"""Second moment of Gamma-IS over that of exponential twisting, against N.

    python3 scripts/second_moment_ratio.py --dist weibull --param k=1.5 --gamma 0.05
"""

from __future__ import annotations

import argparse

from gammais.cli import _parse_params
from gammais.distributions import make_distribution
from gammais.gamma_is import second_moment_ratio


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--dist", default="weibull")
    ap.add_argument("--param", action="append", default=[])
    ap.add_argument("--gamma", type=float, default=0.05)
    ap.add_argument("--n", default="2,4,8,12,16")
    ap.add_argument("--samples", type=int, default=100_000)
    args = ap.parse_args(argv)
    d = make_distribution(args.dist, **(_parse_params(args.param) or {"k": 1.5}))
    print(f"{d!r}, gamma={args.gamma:g}")
    for n in (int(v) for v in args.n.split(",")):
        print(f"N={n:3d}  A1/A2 = {second_moment_ratio(d, args.gamma, n, args.samples, seed=n):.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
