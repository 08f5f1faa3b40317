"""Seeded families of nonnegative radial test profiles."""
from __future__ import annotations

import numpy as np

from .radial import RadialFunction, RadialGrid


def bump(grid: RadialGrid, center: float = 0.0, width: float = 1.0, amplitude: float = 1.0) -> RadialFunction:
    """Gaussian bump ``amplitude * exp(-((r - center)/width)^2)`` cut to 0 at R."""
    return RadialFunction.from_callable(
        grid, lambda r: amplitude * np.exp(-(((r - center) / width) ** 2))
    )


def gaussian(grid: RadialGrid, scale: float = 1.0) -> RadialFunction:
    return bump(grid, 0.0, scale)


def bump_family(grid: RadialGrid, n: int, seed: int, max_center: float | None = None,
                widths: tuple[float, float] | None = None) -> list[RadialFunction]:
    """``n`` bumps with seeded centers in ``[0, max_center]`` and log-uniform widths.

    Defaults keep every bump negligible at R: centers up to R/3, widths in
    [R/30, R/8].
    """
    R = grid.R
    rng = np.random.default_rng(seed)
    max_center = R / 3.0 if max_center is None else max_center
    lo, hi = widths if widths is not None else (R / 30.0, R / 8.0)
    centers = rng.uniform(0.0, max_center, n)
    w = np.exp(rng.uniform(np.log(lo), np.log(hi), n))
    amps = rng.uniform(0.5, 2.0, n)
    return [bump(grid, c, wi, a) for c, wi, a in zip(centers, w, amps)]


def start_family(grid: RadialGrid, seed: int, count: int = 3) -> list[RadialFunction]:
    """Initial guesses centred at 0, R/8 and R/4 (cycled), widths jittered by ``seed``."""
    R = grid.R
    rng = np.random.default_rng(seed)
    centers = (0.0, R / 8.0, R / 4.0)
    out = []
    for k in range(count):
        width = R / 10.0 * rng.uniform(0.7, 1.3)
        out.append(bump(grid, centers[k % 3], width))
    return out
