"""Mesh and domain refinement of the reference and Henon-weight instances.

Prints the Nehari level, residual, iteration count and wall time for each
(R, M) pair, plus the relative change from the previous row.

    python3 scripts/refinement_study.py
"""
from __future__ import annotations

import argparse
import time

from mixedhenon import Params, make_grid, solve_ground_state


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, nargs="+", default=[0.0, 1.0])
    ap.add_argument("--s", type=float, default=1.0)
    args = ap.parse_args(argv)
    meshes = ((15.0, 200), (15.0, 400), (15.0, 800), (30.0, 800), (30.0, 1600))
    if args.s < 1:
        meshes = ((8.0, 40), (8.0, 80), (8.0, 160), (16.0, 160))
    for alpha in args.alpha:
        P = Params(3 if args.s == 1 else 2, 2.0, 4.0 if args.s == 1 else 3.0, args.s,
                   1.0 if args.s == 1 else 0.0, alpha, 2.0)
        print(f"# {P}")
        prev = None
        for R, M in meshes:
            t0 = time.perf_counter()
            rep = solve_ground_state(P, make_grid(P.N, R, M))
            dt = time.perf_counter() - t0
            change = "" if prev is None else f"{rep.nehari_level / prev - 1:+.2e}"
            print(f"R={R:5g} M={M:5d} level={rep.nehari_level:.8f} residual={rep.residual:.1e} "
                  f"iterations={rep.iterations:4d} time={dt:6.2f}s {change}")
            prev = rep.nehari_level
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
