#!/usr/bin/env python3
"""Measure traveling-wave speeds of mollified single peakons for the four
named reductions and compare against the closed form (1 - a) gamma^k."""

import argparse
import math

from kabc import diagnostics
from kabc.dynamics import SimConfig, simulate
from kabc.exact import PeakonSpec, peakon_initial_condition
from kabc.params import preset
from kabc.spectral import Grid

CASES = [
    ("ch", 1.0),
    ("dp", 1.0),
    ("novikov", math.sqrt(2.0)),
    ("forq", 1.0),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=8192)
    ap.add_argument("--t-end", type=float, default=5.0)
    args = ap.parse_args()

    grid = Grid(args.n, 40 * math.pi)
    print(f"grid n={args.n}, L=40pi, T={args.t_end}")
    print(f"{'preset':>8} {'gamma':>8} {'expected':>10} {'measured':>10} {'rel err':>9}")
    for name, gamma in CASES:
        p = preset(name)
        u0 = peakon_initial_condition(gamma, grid.dx, grid)
        traj = simulate(SimConfig(params=p, grid=grid, t_end=args.t_end, output_stride=8), u0)
        expected = PeakonSpec(gamma, p).speed
        measured = diagnostics.crest_track(traj)
        rel = abs(measured - expected) / abs(expected)
        print(f"{name:>8} {gamma:8.4f} {expected:10.5f} {measured:10.5f} {rel:9.2%}")


if __name__ == "__main__":
    main()
