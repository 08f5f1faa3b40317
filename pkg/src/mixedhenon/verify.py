"""Numerical checkers for the embedding, boundedness and nonexistence machinery.

Each checker returns a :class:`CheckReport` whose ``to_dict`` gives
``{name, params, pass, measured, bound, tolerance}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ExponentDerivationError, PreconditionError, UndefinedRatioError
from .functional import (
    _kernel_for,
    energy_values,
    gradient,
    interpolation_exponents,
)
from .kernel import KernelMatrix, assemble_kernel_matrix, seminorm_integral, seminorm_oracle
from .params import Params
from .profiles import bump
from .radial import RadialFunction, RadialGrid, interpolate, make_grid, weighted_lp_integral

__all__ = [
    "CheckReport",
    "DeGiorgiTrace",
    "compactness_probe",
    "degiorgi_trace",
    "gradient_check",
    "interpolation_check",
    "kernel_oracle_check",
    "pohozaev_sign_check",
    "scaling_decay_check",
    "sobolev_norm",
    "strauss_check",
]


@dataclass(frozen=True)
class CheckReport:
    name: str
    params: dict
    passed: bool
    measured: dict
    bound: dict | float | None = None
    tolerance: float | None = None
    status: str = ""
    details: dict = field(default_factory=dict, repr=False)

    def __getitem__(self, key):
        return self.measured[key]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "params": self.params,
            "pass": bool(self.passed),
            "measured": _plain(self.measured),
            "bound": _plain(self.bound),
            "tolerance": self.tolerance,
            "status": self.status or ("pass" if self.passed else "fail"),
            "details": _plain(self.details),
        }


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def sobolev_norm(f: RadialFunction, params: Params, kernel=None, weighted: bool = False) -> float:
    """``||f||_p + [f]_{s,p}``, or ``||f||_{p,beta} + [f]_{s,p}`` when ``weighted``."""
    p = params.p
    w = params.beta if weighted else 0.0
    return weighted_lp_integral(f, p, w) ** (1 / p) + seminorm_integral(f, params, kernel) ** (1 / p)


def strauss_check(f: RadialFunction, params: Params, kernel: KernelMatrix | None = None) -> CheckReport:
    """``C_est = max_i |f(r_i)| r_i^((N-1)/p) / ||f||_{s,p}``."""
    P = params
    if not (1.0 / P.p < P.s and P.sp < P.N):
        raise PreconditionError("decay estimate needs 1/p < s and sp < N")
    if not np.any(f.values):
        raise UndefinedRatioError("f = 0 has no decay ratio")
    kernel = _kernel_for(f.grid, P, kernel)
    r = f.grid.nodes
    weighted = np.abs(f.values) * r ** ((P.N - 1) / P.p)
    i = int(np.argmax(weighted))
    C = float(weighted[i] / sobolev_norm(f, P, kernel))
    return CheckReport(
        "strauss", P.to_dict(), bool(np.isfinite(C)), {"C_est": C, "argmax_radius": float(r[i])}
    )


def interpolation_check(
    family: list[RadialFunction], params: Params, kernel: KernelMatrix | None = None
) -> CheckReport:
    """``max ||u||_{q,alpha}^q / (||u||_{s,p}^eta ||u||_{p,beta}^omega)`` over ``family``.

    The ratio is also reported with the alternative ``eta`` and its drift
    under ``u -> 2u``.
    """
    P = params
    ex = interpolation_exponents(P, "consistent")
    exp_alt = interpolation_exponents(P, "printed")
    ratios, ratios_alt = [], []
    for f in family:
        kernel = _kernel_for(f.grid, P, kernel)
        src = weighted_lp_integral(f, P.q, P.alpha)
        nsp = sobolev_norm(f, P, kernel)
        nb = weighted_lp_integral(f, P.p, P.beta) ** (1 / P.p)
        if nsp == 0 or nb == 0:
            raise UndefinedRatioError("zero profile in the family")
        ratios.append(src / (nsp**ex.eta * nb**ex.omega))
        ratios_alt.append(src / (nsp**exp_alt.eta * nb**exp_alt.omega))
    ratios = np.array(ratios)
    drift = 2.0 ** (P.q - exp_alt.eta - exp_alt.omega)
    return CheckReport(
        "interpolation",
        P.to_dict(),
        bool(np.all(np.isfinite(ratios))),
        {
            "max_ratio": float(ratios.max()),
            "max_ratio_printed": float(np.max(ratios_alt)),
            "printed_scale_drift": float(drift),
        },
        details={"exponents": ex.to_dict(), "exponents_printed": exp_alt.to_dict(), "ratios": ratios},
    )


def _translating(grid: RadialGrid, steps: int, width: float):
    centers = np.linspace(0.0, 0.75 * grid.R, steps)
    return [bump(grid, c, width) for c in centers], {"centers": centers}


def _concentrating(grid: RadialGrid, steps: int, width: float):
    # shrink by 4 per step; stop once fewer than 8 nodes resolve the bump
    widths = width * 0.25 ** np.arange(steps)
    widths = [w for w in widths if np.count_nonzero(grid.nodes < w) >= 8]
    return [bump(grid, 0.0, w) for w in widths], {"widths": widths}


def compactness_probe(
    params: Params,
    grid: RadialGrid,
    kernel: KernelMatrix | None = None,
    kind: str = "translate",
    steps: int = 10,
    fraction: float = 0.1,
    width: float | None = None,
    sequence: list[RadialFunction] | None = None,
) -> CheckReport:
    """Track ``||u_n||_{q,alpha}`` along a weakly vanishing sequence bounded in ``||.||_{s,p,beta}``.

    ``kind`` is ``"translate"`` (bumps moving out toward R), ``"concentrate"``
    (bumps shrinking at 0) or ``"constant"``; ``sequence`` overrides all of
    them.  Each term is scaled to unit norm.  PASS when the last value is
    below ``fraction`` times the first.  A sequence whose pairing with its
    first term does not decay is reported as not applicable.
    """
    P = params
    kernel = _kernel_for(grid, P, kernel)
    width = grid.R / 20.0 if width is None else width
    info: dict = {"kind": kind}
    if sequence is not None:
        seq = list(sequence)
        info["kind"] = "custom"
    elif kind == "translate":
        seq, extra = _translating(grid, steps, width)
        info.update(extra)
    elif kind == "concentrate":
        seq, extra = _concentrating(grid, steps, width)
        info.update(extra)
    elif kind == "constant":
        seq = [bump(grid, 0.0, width)] * steps
    else:
        raise ValueError(f"unknown probe kind {kind!r}")
    if len(seq) < 3:
        return CheckReport("compactness", P.to_dict(), False, {"values": []}, fraction, status="inconclusive",
                           details={**info, "guidance": "refine the mesh near 0 or raise R"})

    normed = []
    for f in seq:
        n = sobolev_norm(f, P, kernel, weighted=True)
        normed.append(f.scaled(1.0 / n))
    vals = np.array([weighted_lp_integral(f, P.q, P.alpha) ** (1 / P.q) for f in normed])
    w0 = grid.lp_weights(0.0)
    F0 = normed[0].at_points()
    pair = np.array([abs(np.dot(w0, F0 * f.at_points())) for f in normed])
    info["pairing"] = pair / pair[0]
    info["values"] = vals

    if pair[-1] > 0.5 * pair[0]:
        return CheckReport("compactness", P.to_dict(), False, {"values": vals}, fraction,
                           status="not-applicable", details=info)
    if kind == "translate" and sequence is None:
        tail = np.array([abs(f.values[-2]) for f in normed]) / np.array([np.max(np.abs(f.values)) for f in normed])
        if np.any(tail > 1e-6):
            info["guidance"] = "bumps reach the truncation radius; raise R"
            return CheckReport("compactness", P.to_dict(), False, {"values": vals}, fraction,
                               status="inconclusive", details=info)
    ratio = float(vals[-1] / vals[0])
    ok = ratio <= fraction
    return CheckReport("compactness", P.to_dict(), ok, {"values": vals, "final_ratio": ratio}, fraction,
                       status="pass" if ok else "fail", details=info)


@dataclass(frozen=True)
class DeGiorgiTrace:
    levels: np.ndarray
    truncations: list
    energies: np.ndarray
    constants: np.ndarray
    delta: float
    c_hat: np.ndarray
    vanishes: bool
    recursion_spread: float
    recursion_holds: bool
    scale: float = 1.0
    printed_exponent: float | None = None

    def to_dict(self) -> dict:
        return _plain({
            "levels": self.levels,
            "energies": self.energies,
            "constants": self.constants,
            "delta": self.delta,
            "c_hat": self.c_hat,
            "vanishes": self.vanishes,
            "recursion_spread": self.recursion_spread,
            "recursion_holds": self.recursion_holds,
            "scale": self.scale,
            "printed_exponent": self.printed_exponent,
        })


def degiorgi_trace(f: RadialFunction, params: Params, K: int = 30, epsilon: float | None = None,
                   target: float = 0.5) -> DeGiorgiTrace:
    """Level-set truncations ``w_k = (u - (1 - 2^-k))_+`` and energies ``E_k``.

    With ``epsilon`` set, ``u`` is first rescaled so that
    ``int |x|^alpha u_+^q = target * epsilon``.  ``c_hat[k]`` is
    ``E_{k+1} / (C_{k+1}^(q/p) E_k^(q/p))`` (NaN where ``E_k = 0``).
    """
    P = params
    if np.any(f.values < 0):
        raise PreconditionError("the trace needs a nonnegative profile")
    grid = f.grid
    scale = 1.0
    if epsilon is not None:
        B = weighted_lp_integral(f, P.q, P.alpha)
        if B > 0:
            scale = (target * epsilon / B) ** (1.0 / P.q)
    u = scale * f.values
    U = grid.interpolation @ u
    wa = grid.lp_weights(P.alpha)
    ks = np.arange(K + 1)
    thresholds = 1.0 - 0.5**ks
    truncs = [RadialFunction(grid, np.maximum(u - th, 0.0)) for th in thresholds]
    E = np.array([float(np.dot(wa, np.maximum(U - th, 0.0) ** P.q)) for th in thresholds])
    C = (2.0 ** (ks[1:]) - 1.0) ** P.q  # C_{k+1}, k = 0..K-1
    a = P.q / P.p
    with np.errstate(divide="ignore", invalid="ignore"):
        c_hat = np.where(E[:-1] > 0, E[1:] / (C**a * E[:-1] ** a), np.nan)
    vanishes = bool(E[-1] <= 1e-12 * E[0]) if E[0] > 0 else True
    informative = c_hat[np.isfinite(c_hat) & (c_hat > 0)]
    spread = float(informative.max() / informative.min()) if informative.size >= 2 else 1.0
    try:
        ex = interpolation_exponents(P)
        printed_exp = (P.p * ex.e2 + P.q * ex.e1) / (P.p * ex.e1 + P.p * ex.e2)
    except ExponentDerivationError:
        printed_exp = None
    return DeGiorgiTrace(
        levels=ks,
        truncations=truncs,
        energies=E,
        constants=C,
        delta=(P.q - P.p) / P.p,
        c_hat=c_hat,
        vanishes=vanishes,
        recursion_spread=spread,
        recursion_holds=spread < 10.0,
        scale=scale,
        printed_exponent=printed_exp,
    )


def _resample(f: RadialFunction, lam: float) -> RadialFunction:
    """``u_lambda(r) = u(lambda r)`` on the same grid."""
    v = interpolate(f, lam * f.grid.nodes)
    v = np.asarray(v, dtype=float)
    v[-1] = 0.0
    return RadialFunction(f.grid, v)


def _difference_quotient(f: RadialFunction, lam: float, r: float, order: int = 8) -> float:
    """``int |(u(lam x) - u(x)) / (lam - 1)|^r dx`` on the merged breakpoints."""
    g = f.grid
    brk = np.union1d(g.edges, g.edges / lam)
    x, w = np.polynomial.legendre.leggauss(order)
    x, w = 0.5 * (x + 1), 0.5 * w
    a, b = brk[:-1], brk[1:]
    pts = (a[:, None] + (b - a)[:, None] * x[None, :]).ravel()
    wts = ((b - a)[:, None] * w[None, :]).ravel() * g.omega * pts ** (g.N - 1)
    d = (interpolate(f, lam * pts) - interpolate(f, pts)) / (lam - 1.0)
    return float(np.dot(wts, np.abs(d) ** r))


def _weighted_gradient(f: RadialFunction, r: float) -> float:
    """``int |u'|^r |x|^r dx``, exact for piecewise-linear profiles."""
    g = f.grid
    slopes = g.slope_operator @ f.values
    mom = np.array([g.moment(c, r) for c in range(g.M)])
    return float(np.dot(mom, np.abs(slopes) ** r))


def scaling_decay_check(
    f: RadialFunction,
    params: Params,
    lambdas=(1.5, 2.0, 4.0),
    r: float = 2.0,
    kernel: KernelMatrix | None = None,
    tolerance: float = 1e-6,
) -> CheckReport:
    """``||u_lam||_{s,p,beta} <= lam^-tau ||u||_{s,p,beta}`` and the difference-quotient bound."""
    P = params
    if not P.beta > P.p * (1.0 - P.s):
        raise PreconditionError(f"scaling bound needs beta > p(1-s) = {P.p * (1 - P.s):g}")
    if not r > 1:
        raise PreconditionError("r must exceed 1")
    lambdas = [float(l) for l in lambdas]
    if any(l <= 1 for l in lambdas):
        raise PreconditionError("every lambda must exceed 1")
    kernel = _kernel_for(f.grid, P, kernel)
    tau = P.tau
    base = sobolev_norm(f, P, kernel, weighted=True)
    rhs_grad = _weighted_gradient(f, r)
    rows = []
    ok = True
    for lam in lambdas:
        ul = _resample(f, lam)
        nl = sobolev_norm(ul, P, kernel, weighted=True)
        bound = lam**-tau * base
        c_nr = (1.0 - lam ** (-(P.N + r - 1))) / ((P.N + r - 1) * (lam - 1.0))
        lhs = _difference_quotient(f, lam, r)
        rhs = c_nr * rhs_grad
        norm_ok = nl <= bound * (1 + tolerance) + 1e-300
        dq_ok = lhs <= rhs * (1 + tolerance) + 1e-300
        ok &= bool(norm_ok and dq_ok)
        rows.append({
            "lambda": lam,
            "norm_ratio": nl / base if base > 0 else 0.0,
            "decay_bound": lam**-tau,
            "dq_lhs": lhs,
            "dq_rhs": rhs,
            "constant": c_nr,
            "dq_ratio": lhs / rhs if rhs > 0 else 0.0,
            "norm_ok": bool(norm_ok),
            "dq_ok": bool(dq_ok),
        })
    return CheckReport("scaling", P.to_dict(), ok, {"rows": rows, "tau": tau},
                       {"decay": [row["decay_bound"] for row in rows]}, tolerance)


def pohozaev_sign_check(params: Params, samples: int = 1000, seed: int = 0, radius: float = 10.0) -> CheckReport:
    """Check ``tau t f(x,t) > N F(x,t) + x . F_x(x,t)`` on sampled ``(x, t)``.

    ``f = |x|^alpha |t|^(q-2) t`` and ``F = |x|^alpha |t|^q / q``; the sign is
    that of ``tau - (N + alpha)/q``, so it holds exactly when
    ``q > p(N+alpha)/(N-sp)``.
    """
    P = params
    tau = P.tau
    if not tau > 0:
        raise PreconditionError("tau = (N - sp)/p must be positive")
    threshold = P.p * (P.N + P.alpha) / (P.N - P.sp)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((samples, P.N))
    x *= (radius * rng.uniform(1e-3, 1.0, samples) / np.linalg.norm(x, axis=1))[:, None]
    t = rng.uniform(0.05, 5.0, samples) * rng.choice([-1.0, 1.0], samples)
    rx = np.linalg.norm(x, axis=1)
    wx = rx**P.alpha
    f = wx * np.abs(t) ** (P.q - 2) * t
    F = wx * np.abs(t) ** P.q / P.q
    xFx = P.alpha * rx ** (P.alpha - 2) * np.einsum("ij,ij->i", x, x) * np.abs(t) ** P.q / P.q
    lhs = tau * t * f
    rhs = P.N * F + xFx
    coeff = tau - (P.N + P.alpha) / P.q
    predicted = coeff > 8 * np.finfo(float).eps * max(tau, 1.0)
    pointwise = bool(np.all(lhs > rhs))
    holds = bool(predicted and pointwise)
    consistent = holds == predicted
    return CheckReport(
        "pohozaev",
        P.to_dict(),
        consistent,
        {"threshold": threshold, "holds": holds, "coefficient": coeff,
         "fraction_pointwise": float(np.mean(lhs > rhs))},
        threshold,
        details={"samples": samples},
    )


def gradient_check(count: int = 20, seed: int = 0, h: float = 1e-6, tolerance: float = 1e-5) -> CheckReport:
    """Central finite differences of ``J`` against the nodal gradient on random triples."""
    rng = np.random.default_rng(seed)
    errors, cases = [], []
    for k in range(count):
        N = int(rng.integers(1, 4))
        p = float(rng.choice([2.0, 2.5, 3.0]))
        local = rng.random() < 0.5
        s = 1.0 if local else float(rng.uniform(max(0.15, 1.0 / p + 0.05), 0.9))
        gamma = float(rng.uniform(0.0, 1.0)) if local else 0.0
        q = float(p + rng.uniform(0.3, 2.0))
        alpha = float(rng.uniform(0.0, 1.5))
        beta = float(rng.uniform(0.5, 2.5))
        P = Params(N, p, q, s, gamma, alpha, beta)
        grid = make_grid(N, float(rng.uniform(4, 8)), int(rng.integers(16, 40)), float(rng.uniform(1, 2.5)))
        kernel = None if s == 1 else assemble_kernel_matrix(grid, P)
        c = rng.uniform(0, grid.R / 3)
        w = rng.uniform(grid.R / 10, grid.R / 4)
        v = bump(grid, c, w).values * (1 + 0.2 * rng.standard_normal(grid.M))
        v[-1] = 0.0
        f = RadialFunction(grid, v)
        d = rng.standard_normal(grid.M)
        d[-1] = 0.0
        g = float(gradient(f, P, kernel).values @ d)
        fd = (energy_values(v + h * d, grid, P, kernel).J - energy_values(v - h * d, grid, P, kernel).J) / (2 * h)
        err = abs(fd - g) / max(abs(fd), abs(g), 1e-300)
        errors.append(err)
        cases.append({"params": P.to_dict(), "M": grid.M, "rel_error": err})
    errors = np.array(errors)
    passed = int(np.sum(errors < tolerance))
    return CheckReport("gradient", {}, passed == count, {"passed": passed, "count": count,
                       "max_rel_error": float(errors.max())}, None, tolerance, details={"cases": cases})


def kernel_oracle_check(
    N: int = 2, s: float = 0.5, p: float = 2.0, samples: int = 10**6, seed: int = 7,
    R: float = 6.0, M: int = 120, grading: float = 1.5, rel_tol: float = 0.02,
) -> CheckReport:
    """Quadrature seminorm of ``exp(-r^2)`` against the Monte Carlo oracle.

    PASS when the gap is within ``max(rel_tol * value, 3 stderr)``.
    """
    P = Params(N, p, p + 1.0, s, 0.0, 0.0, 2.0)
    grid = make_grid(N, R, M, grading)
    f = RadialFunction.from_callable(grid, lambda r: np.exp(-(r**2)))
    kernel = assemble_kernel_matrix(grid, P)
    quad = seminorm_integral(f, P, kernel)
    mean, err = seminorm_oracle(f, P, samples, seed)
    allowed = max(rel_tol * abs(quad), 3.0 * err)
    gap = abs(quad - mean)
    return CheckReport(
        "kernel-oracle",
        {"N": N, "s": s, "p": p},
        bool(gap <= allowed),
        {"quadrature": quad, "oracle": mean, "stderr": err, "gap": gap},
        allowed,
        rel_tol,
        details={"samples": samples, "seed": seed, "R": R, "M": M},
    )
