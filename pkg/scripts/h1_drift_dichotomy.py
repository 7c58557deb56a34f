#!/usr/bin/env python3
"""Energy drift on identical data for parameter sets on and off the
H^1-conservation manifold (9a + b + 4c = 9 at k = 2)."""

import argparse
import math

import numpy as np

from kabc import diagnostics
from kabc.dynamics import SimConfig, simulate
from kabc.exact import bump_values
from kabc.params import h1_conserved, preset, validate
from kabc.spectral import Field, Grid


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=512)
    ap.add_argument("--t-end", type=float, default=1.0)
    args = ap.parse_args()

    grid = Grid(args.n, 40 * math.pi)
    x = grid.nodes
    u0 = Field(grid, 0.5 * np.sin(x) * bump_values(x - grid.length / 2, 10.0))

    cases = [
        ("novikov", preset("novikov")),
        ("forq", preset("forq")),
        ("(2,0,1,1)", validate(2, 0.0, 1.0, 1.0)),
        ("(2,0.5,1,1)", validate(2, 0.5, 1.0, 1.0)),
    ]
    print(f"u0 = 0.5 sin(x) * bump(10), n={args.n}, T={args.t_end}")
    print(f"{'params':>12} {'condition':>10} {'max |dE|/E0':>12}")
    for label, p in cases:
        cfg = SimConfig(params=p, grid=grid, t_end=args.t_end, dt_max=5e-3)
        drift = diagnostics.h1_drift(simulate(cfg, u0))
        print(f"{label:>12} {str(h1_conserved(p)):>10} {drift:12.3e}")


if __name__ == "__main__":
    main()
