"""Existence phase diagram over (q, alpha) at the reference parameters.

Runs the ``sweep`` subcommand twice: a classification-only pass on a fine
grid, and a solving pass on a coarse grid that adds Nehari levels to the
classified points.  Produces ``<out>.csv`` / ``<out>.plot.csv`` and
``<out>_solved.csv``.

    python3 scripts/phase_diagram.py --out phase
"""
from __future__ import annotations

import argparse

from mixedhenon.cli import main as cli


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="phase")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    base = ["sweep", "--N", "3", "--p", "2", "--s", "1", "--beta", "2", "--workers", str(args.workers)]
    code = cli(base + ["--q", "2.2:10.0:0.2", "--alpha=-1:4:0.25", "--classify-only",
                       "--out", f"{args.out}.csv"])
    if code:
        return code
    return cli(base + ["--q", "3:9:1", "--alpha", "0:3:1", "--R", "15", "--M", "200", "--restarts", "1",
                       "--out", f"{args.out}_solved.csv", "--plot-data", f"{args.out}_solved.plot.csv"])


if __name__ == "__main__":
    raise SystemExit(main())
