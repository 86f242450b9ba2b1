#!/usr/bin/env python3
"""Run the benchmark sweeps and write one CSV per protocol.

    python3 scripts/figure_protocols.py --samples 10000 --out-dir results
    python3 scripts/figure_protocols.py --only lognormal-vs-gamma-n8

Each protocol is a plain ``gammais sweep`` command line, so any of them can
be replayed by hand from the printed argv.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from gammais.cli import main as cli_main

WEIBULL_GAMMAS = "0.2,0.3,0.4,0.5,0.6,0.8,1.0"
LN_METHODS = ["--method", "exp-twist", "--method", "ln-biased", "--method", "ln-gamma-kstar"]
TWO_WAY = ["--method", "gamma-is", "--method", "exp-twist"]

PROTOCOLS: dict[str, list[str]] = {
    # SCV against N, Weibull shape 1.5, unit scale
    "weibull-k1.5-vs-n": TWO_WAY + ["--dist", "weibull", "--param", "k=1.5", "--param", "lambda=1",
                                    "--gamma", "0.5", "--sweep-var", "n", "--sweep-values", "2..12"],
    # heavier mass at zero: shape 0.5, much smaller threshold
    "weibull-k0.5-vs-n": TWO_WAY + ["--dist", "weibull", "--param", "k=0.5", "--param", "lambda=1",
                                    "--gamma", "0.01", "--sweep-var", "n", "--sweep-values", "2..12"],
    "weibull-k1.5-vs-gamma-n8": TWO_WAY + ["--dist", "weibull", "--param", "k=1.5", "--n", "8",
                                           "--sweep-var", "gamma", "--sweep-values", WEIBULL_GAMMAS],
    "weibull-k1.5-vs-gamma-n10": TWO_WAY + ["--dist", "weibull", "--param", "k=1.5", "--n", "10",
                                            "--sweep-var", "gamma", "--sweep-values", WEIBULL_GAMMAS],
    "gamma-gamma-vs-n": TWO_WAY + ["--dist", "gamma-gamma", "--param", "k=1.7", "--param", "m=4",
                                   "--param", "omega=1", "--gamma", "0.5", "--sweep-var", "n",
                                   "--sweep-values", "2..12"],
    "lognormal-vs-n": LN_METHODS + ["--dist", "lognormal", "--gamma", "0.5", "--epsilon", "0.05",
                                    "--sweep-var", "n", "--sweep-values", "2..9"],
    # SCV and WNRV against gamma come from the same rows
    "lognormal-vs-gamma-n8": LN_METHODS + ["--dist", "lognormal", "--n", "8", "--epsilon", "0.05",
                                           "--sweep-var", "gamma", "--sweep-values", "0.6..1.4:0.1"],
    "lognormal-vs-gamma-n10": LN_METHODS + ["--dist", "lognormal", "--n", "10", "--epsilon", "0.05",
                                            "--sweep-var", "gamma", "--sweep-values", "0.6..1.4:0.1"],
}


def protocol_argv(name: str, samples: int, seed: int, out: Path) -> list[str]:
    return ["sweep", *PROTOCOLS[name], "--samples", str(samples), "--seed", str(seed), "--out", str(out)]


def run_all(out_dir: Path, samples: int = 10_000, seed: int = 0, only=None, verbose=True) -> dict[str, float]:
    out_dir.mkdir(parents=True, exist_ok=True)
    timings = {}
    for name in PROTOCOLS:
        if only and name not in only:
            continue
        argv = protocol_argv(name, samples, seed, out_dir / f"{name}.csv")
        t0 = time.perf_counter()
        status = cli_main(argv)
        timings[name] = time.perf_counter() - t0
        if status != 0:
            raise RuntimeError(f"protocol {name} exited with status {status}")
        if verbose:
            print(f"{name:28s} {timings[name]:7.1f} s  gammais {' '.join(argv)}", flush=True)
    return timings


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    ap.add_argument("--only", action="append", choices=sorted(PROTOCOLS))
    args = ap.parse_args(argv)
    timings = run_all(args.out_dir, args.samples, args.seed, args.only)
    print(f"total {sum(timings.values()):.1f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
