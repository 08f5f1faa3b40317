"""Ground states by Nehari reduction and projected preconditioned descent.

The quotient ``Q(u) = A(u) / B(u)^(p/q)`` is invariant under ``u -> t u``.
Its minimizer over ``u >= 0``, scaled by ``t* = (A/B)^(1/(q-p))``, is a
critical point of ``J`` on the Nehari manifold with level
``(1/p - 1/q) A(t* u)``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import cho_factor, cho_solve
from scipy.sparse.linalg import splu

from .errors import ConfigurationError, DegenerateDirectionError, NoCandidateError
from .functional import (
    EnergyBreakdown,
    Verdict,
    _integral_gradients,
    _integrals,
    _kernel_for,
    classify,
    energy_values,
    full_norm,
    hat_norms,
)
from .kernel import KernelMatrix
from .params import Params
from .profiles import bump, start_family
from .radial import RadialFunction, RadialGrid

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 5000
    residual_tolerance: float = 1e-6
    initial_step: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    max_step: float = 1.0
    restarts: int = 3
    seed: int = 0

    def __post_init__(self):
        if not self.residual_tolerance > 0:
            raise ConfigurationError("residual tolerance must be positive")
        if not 0 < self.shrink < 1:
            raise ConfigurationError("shrink factor must lie in (0, 1)")
        if not 0 < self.armijo < 1:
            raise ConfigurationError("sufficient-decrease constant must lie in (0, 1)")
        if self.max_iterations < 1 or self.restarts < 1:
            raise ConfigurationError("max_iterations and restarts must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Diagnostics:
    decay_exponent_fit: float
    concentration_index: float
    peak_radius: float
    ps_constant: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SolveReport:
    solution: RadialFunction
    params: Params
    energy: EnergyBreakdown
    residual: float
    nehari_level: float
    iterations: int
    converged: bool
    diagnostics: Diagnostics
    restart: int = 0
    history: tuple = field(default=(), repr=False)

    def to_dict(self, include_history: bool = False) -> dict:
        d = {
            "params": self.params.to_dict(),
            "grid": self.solution.grid.to_dict(),
            "verdict": classify(self.params).verdict.value,
            "converged": self.converged,
            "residual": self.residual,
            "nehari_level": self.nehari_level,
            "iterations": self.iterations,
            "restart": self.restart,
            "energy": self.energy.to_dict(),
            "diagnostics": self.diagnostics.to_dict(),
            "values": [float(v) for v in self.solution.values],
        }
        if include_history:
            d["history"] = [list(h) for h in self.history]
        return d


def nehari_scale(f: RadialFunction, params: Params, kernel: KernelMatrix | None = None) -> float:
    """``t* = (A/B)^(1/(q-p))``, the root of ``t^p A - t^q B = 0``."""
    kernel = _kernel_for(f.grid, params, kernel)
    e = energy_values(f.values, f.grid, params, kernel)
    return _scale_from(e.A, e.B, params)


def _scale_from(A: float, B: float, params: Params) -> float:
    if not B > 0:
        raise DegenerateDirectionError("B(f) = 0: f vanishes where the source weight lives")
    if not A > 0:
        raise DegenerateDirectionError("A(f) = 0")
    if params.q == params.p:
        raise DegenerateDirectionError("q = p: the fibre map has no interior critical point")
    return (A / B) ** (1.0 / (params.q - params.p))


def nehari_quotient(f: RadialFunction, params: Params, kernel: KernelMatrix | None = None) -> float:
    kernel = _kernel_for(f.grid, params, kernel)
    e = energy_values(f.values, f.grid, params, kernel)
    if not e.B > 0:
        raise DegenerateDirectionError("B(f) = 0")
    return e.A / e.B ** (params.p / params.q)


class _Metric:
    """Sobolev preconditioner: the p = 2 form of ``A``, frozen at the iterate for p != 2."""

    def __init__(self, grid: RadialGrid, params: Params, kernel):
        self.grid, self.params, self.kernel = grid, params, kernel
        self._fixed = None
        if params.p == 2:
            self._fixed = self._factor(None)

    def _matrix(self, values):
        g, P = self.grid, self.params
        Dg = g.slope_operator
        Pm = g.interpolation
        e = P.p - 2.0
        if values is None or e == 0:
            m = g.cell_mass
            wb = g.lp_weights(P.beta)
        else:
            # frozen weights, regularized relative to the iterate's scale
            scale = np.max(np.abs(values))
            slopes = Dg @ values
            delta_s = 1e-3 * scale / g.R
            m = g.cell_mass * (np.abs(slopes) + delta_s) ** e
            wb = g.lp_weights(P.beta) * (np.abs(Pm @ values) + 1e-3 * scale) ** e
        H = Pm.T @ sparse.diags(wb) @ Pm
        local = Dg.T @ sparse.diags(m) @ Dg
        if P.s == 1:
            H = H + local
            return sparse.csc_matrix(H), None
        delta = None if values is None else 1e-3 * np.max(np.abs(values))
        Hn = self.kernel.quadratic_matrix(values, delta or 0.0) if P.p != 2 else self.kernel.quadratic_matrix()
        dense = (1.0 - P.gamma) * Hn + H.toarray() + P.gamma * local.toarray()
        return None, dense

    def _factor(self, values):
        Hs, Hd = self._matrix(values)
        n = self.grid.M - 1
        if Hs is not None:
            lu = splu(sparse.csc_matrix(Hs[:n, :n]))
            return lambda r: lu.solve(r)
        cf = cho_factor(Hd[:n, :n])
        return lambda r: cho_solve(cf, r)

    def solve(self, rhs, values):
        solver = self._fixed if self._fixed is not None else self._factor(values)
        out = np.zeros_like(rhs)
        out[:-1] = solver(rhs[:-1])
        return out


def _diagnostics(values: np.ndarray, grid: RadialGrid, params: Params, ps_constant: float) -> Diagnostics:
    wa = grid.lp_weights(params.alpha)
    dens = wa * np.abs(grid.interpolation @ values) ** params.q
    total = dens.sum()
    conc = float(dens[grid.points < 0.05 * grid.R].sum() / total) if total > 0 else 0.0
    i = int(np.argmax(values))
    peak = 0.0 if i == 0 else float(grid.nodes[i])
    # power-law slope of the decaying tail, between 1e-2 and 1e-8 of the peak
    vmax = values[i]
    sel = (grid.nodes > peak) & (values < 1e-2 * vmax) & (values > 1e-8 * vmax)
    if np.count_nonzero(sel) >= 3:
        slope = float(np.polyfit(np.log(grid.nodes[sel]), np.log(values[sel]), 1)[0])
    else:
        slope = float("nan")
    return Diagnostics(slope, conc, peak, ps_constant)


def _descend(v0, grid, params, kernel, config, metric, hat):
    P = params
    p, q = P.p, P.q
    pq = p / q

    def quotient(v):
        e = energy_values(v, grid, P, kernel)
        return e.A / e.B**pq, e.A, e.B

    v = np.abs(np.asarray(v0, dtype=float))
    v[-1] = 0.0
    Q, A, B = quotient(v)
    if not B > 0:
        raise DegenerateDirectionError("initial guess has B = 0")
    v = v / B ** (1.0 / q)
    Q, A, B = quotient(v)
    step = config.initial_step
    history = []
    ps_const = 0.0
    res = np.inf
    it = 0
    for it in range(config.max_iterations + 1):
        da, db = _integral_gradients(v, grid, P, kernel)
        # gradient of Q; with B = 1 this is p (da - A db)
        gQ = p * (da - (A / B) * db) / B**pq
        t = (A / B) ** (1.0 / (q - p))
        # J'(t v) = t^(p-1) (da - (A/B) db)
        jg = t ** (p - 1.0) * (da - (A / B) * db)
        nrm = t * full_norm(v, grid, P, kernel)
        res = float(np.max(np.abs(jg[:-1]) / hat[:-1]) / max(1.0, nrm ** (p - 1.0)))
        ps_const = max(ps_const, (1.0 - p / q) * nrm**p / (p + nrm))
        history.append((it, Q, res))
        if res <= config.residual_tolerance or it == config.max_iterations:
            break
        # unit step is a Newton step on the high-frequency part of Q
        d = -metric.solve(gQ, v) * B**pq / (p * (p - 1.0))
        accepted = False
        tau = step
        while tau > 1e-14:
            w = np.abs(v + tau * d)
            w[-1] = 0.0
            Qw, Aw, Bw = quotient(w)
            if Bw > 0 and Qw <= Q + config.armijo * float(gQ @ (w - v)):
                accepted = True
                break
            tau *= config.shrink
        if not accepted:
            log.debug("line search stalled at iteration %d (residual %.3e)", it, res)
            break
        step = min(config.max_step, tau / config.shrink)
        v = w / Bw ** (1.0 / q)
        Q, A, B = quotient(v)
    return v, Q, A, B, res, it, ps_const, tuple(history)


def solve_ground_state(
    params: Params,
    grid: RadialGrid,
    kernel: KernelMatrix | None = None,
    config: SolverConfig | None = None,
    initial: RadialFunction | None = None,
) -> SolveReport:
    """Minimize the Nehari quotient from several starts and keep the lowest level.

    ``initial``, when given and nonzero, is tried first; the seeded bump
    starts at radii 0, R/8 and R/4 follow.
    """
    config = config or SolverConfig()
    kernel = _kernel_for(grid, params, kernel)
    if classify(params).verdict is Verdict.NONEXISTENCE_GUARANTEED:
        warnings.warn("parameters lie in the nonexistence region; running anyway", RuntimeWarning, stacklevel=2)
    starts = []
    if initial is not None:
        if np.any(initial.values):
            starts.append(initial.values)
        else:
            log.info("zero initial guess rejected; using the bump family")
    starts += [f.values for f in start_family(grid, config.seed, config.restarts)]
    starts = starts[: max(config.restarts, 1) + (initial is not None and np.any(initial.values))]

    metric = _Metric(grid, params, kernel)
    hat = hat_norms(grid, params, kernel)
    best = None
    for k, v0 in enumerate(starts):
        try:
            out = _descend(v0, grid, params, kernel, config, metric, hat)
        except (DegenerateDirectionError, FloatingPointError, np.linalg.LinAlgError) as exc:
            log.info("restart %d discarded: %s", k, exc)
            continue
        v, Q, A, B, res, it, ps_const, hist = out
        if not np.isfinite(Q):
            continue
        # ties go to the earlier start
        if best is None or Q < best[1][1] * (1 - 1e-12):
            best = (k, out)
    if best is None:
        raise NoCandidateError("no restart produced a usable candidate")
    k, (v, Q, A, B, res, it, ps_const, hist) = best
    t = _scale_from(A, B, params)
    u = t * v
    u[-1] = 0.0
    sol = RadialFunction(grid, u)
    e = energy_values(u, grid, params, kernel)
    level = (1.0 / params.p - 1.0 / params.q) * e.A
    return SolveReport(
        solution=sol,
        params=params,
        energy=e,
        residual=res,
        nehari_level=level,
        iterations=it,
        converged=bool(res <= config.residual_tolerance),
        diagnostics=_diagnostics(u, grid, params, ps_const),
        restart=k,
        history=hist,
    )


@dataclass(frozen=True)
class MountainPassReport:
    radius: float
    min_energy_on_sphere: float
    condition_i: bool
    witness_t: float | None
    witness_energy: float | None
    condition_ii: bool

    @property
    def mountain_pass(self) -> bool:
        return self.condition_i and self.condition_ii

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mountain_pass"] = self.mountain_pass
        return d


def mountain_pass_geometry_check(
    params: Params,
    grid: RadialGrid,
    kernel: KernelMatrix | None = None,
    radius: float = 1e-2,
    samples: int = 100,
    seed: int = 0,
    t_max: float = 1e3,
) -> MountainPassReport:
    """Sample ``J`` on the sphere ``||u||_{s,p,beta} = radius`` and search a ray for ``J < 0``.

    Directions are random nodal vectors mixed with seeded bumps.  The witness
    must keep ``J(t w) < 0`` for every sampled larger ``t`` up to ``t_max``,
    which rules out the small-``t`` negativity of sublinear (q < p) problems.
    """
    kernel = _kernel_for(grid, params, kernel)
    rng = np.random.default_rng(seed)
    M = grid.M
    Jmin = np.inf
    for k in range(samples):
        if k % 2 == 0:
            v = rng.standard_normal(M)
        else:
            c = rng.uniform(0, grid.R / 3)
            w = rng.uniform(grid.R / 30, grid.R / 5)
            v = bump(grid, c, w).values * rng.choice([-1.0, 1.0])
        v = v.copy()
        v[-1] = 0.0
        v *= radius / full_norm(v, grid, params, kernel)
        Jmin = min(Jmin, energy_values(v, grid, params, kernel).J)
    cond_i = bool(Jmin > 0)

    w = bump(grid, 0.0, grid.R / 10.0).values
    t0 = radius / full_norm(w, grid, params, kernel)
    ts = np.geomspace(t0, t_max, 400)
    ts = ts[ts > t0]
    Js = np.array([energy_values(t * w, grid, params, kernel).J for t in ts])
    neg = Js < 0
    # first index from which J stays negative up to t_max
    tail = np.flip(np.logical_and.accumulate(np.flip(neg)))
    if tail.any():
        j = int(np.argmax(tail))
        wt, wj = float(ts[j]), float(Js[j])
    else:
        wt = wj = None
    return MountainPassReport(radius, float(Jmin), cond_i, wt, wj, wt is not None)
