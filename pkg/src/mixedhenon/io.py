"""JSON persistence for radial solutions.

Layout: ``{"params": {...}, "grid": {"R", "M", "grading", "order"}, "values": [...]}``.
Floats are written with ``repr`` precision, so a save/load cycle is bit-exact.
"""
from __future__ import annotations

import json
import os

import numpy as np

from .params import Params
from .radial import DEFAULT_ORDER, RadialFunction, make_grid


def solution_to_dict(f: RadialFunction, params: Params) -> dict:
    return {
        "params": params.to_dict(),
        "grid": f.grid.to_dict(),
        "values": [float(v) for v in f.values],
    }


def solution_from_dict(d: dict) -> tuple[RadialFunction, Params]:
    params = Params.from_dict(d["params"])
    g = d["grid"]
    grid = make_grid(params.N, g["R"], g["M"], g.get("grading", 2.0), g.get("order", DEFAULT_ORDER))
    return RadialFunction(grid, np.asarray(d["values"], dtype=float)), params


def save_solution(f: RadialFunction, params: Params, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(solution_to_dict(f, params), fh)


def load_solution(path: str | os.PathLike) -> tuple[RadialFunction, Params]:
    with open(path) as fh:
        return solution_from_dict(json.load(fh))
