"""Energy functional, its discrete gradient, weak-form residual, admissibility.

All quantities are for radial profiles on a truncated mesh.  With

    A(u) = gamma ||u'||_p^p + (1-gamma) [u]_{s,p}^p + ||u||_{p,beta}^p,
    B(u) = ||u||_{q,alpha}^q,

the energy is ``J(u) = A(u)/p - B(u)/q``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .errors import ExponentDerivationError, SupercriticalDimensionError
from .kernel import KernelMatrix, assemble_kernel_matrix
from .params import Params, p_star
from .radial import RadialFunction, RadialGrid

__all__ = [
    "AdmissibilityReport",
    "EnergyBreakdown",
    "InterpolationExponents",
    "Verdict",
    "classify",
    "energy",
    "gradient",
    "interpolation_exponents",
    "p_star",
    "phi_p",
    "residual",
]


def phi_p(t, p: float):
    """``|t|^(p-2) t``, extended by 0 at t = 0."""
    t = np.asarray(t, dtype=float)
    out = np.sign(t) * np.abs(t) ** (p - 1.0)
    return float(out) if out.ndim == 0 else out


class Verdict(str, Enum):
    EXISTS_GUARANTEED = "EXISTS_GUARANTEED"
    NONEXISTENCE_GUARANTEED = "NONEXISTENCE_GUARANTEED"
    UNCLASSIFIED = "UNCLASSIFIED"


@dataclass(frozen=True)
class AdmissibilityReport:
    s_range: bool
    alpha_range: bool
    q_range: bool
    condition_2: bool
    beta_nonexist: bool
    verdict: Verdict
    p_star: float | None = None

    @property
    def checks(self) -> dict:
        return {
            "s_range": self.s_range,
            "alpha_range": self.alpha_range,
            "q_range": self.q_range,
            "condition_2": self.condition_2,
            "beta_nonexist": self.beta_nonexist,
        }

    def to_dict(self) -> dict:
        return {"checks": self.checks, "verdict": self.verdict.value, "p_star": self.p_star}


def classify(params: Params) -> AdmissibilityReport:
    """Place ``params`` in the existence region, the nonexistence region, or neither.

    All inequalities are strict, so boundary values come out UNCLASSIFIED.
    """
    P = params
    sp = P.s * P.p
    s_range = 1.0 / P.p < P.s < P.N / P.p
    alpha_range = P.alpha > -sp
    try:
        ps = p_star(P)
    except SupercriticalDimensionError:
        ps = None
    q_range = ps is not None and P.p < P.q < ps
    condition_2 = P.alpha - P.beta + (P.q - P.p) * (1.0 - P.N) / P.p < 0
    beta_nonexist = P.beta > P.p * (1.0 - P.s)
    if s_range and alpha_range and q_range and condition_2:
        verdict = Verdict.EXISTS_GUARANTEED
    elif s_range and alpha_range and beta_nonexist and ps is not None and P.q > ps:
        verdict = Verdict.NONEXISTENCE_GUARANTEED
    else:
        verdict = Verdict.UNCLASSIFIED
    return AdmissibilityReport(s_range, alpha_range, q_range, condition_2, beta_nonexist, verdict, ps)


@dataclass(frozen=True)
class EnergyBreakdown:
    grad_term: float
    nonlocal_term: float
    confinement_term: float
    source_term: float
    J: float
    A: float
    B: float

    def to_dict(self) -> dict:
        return asdict(self)


def _kernel_for(grid: RadialGrid, params: Params, kernel: KernelMatrix | None):
    if params.s == 1:
        return None
    if kernel is None:
        kernel = assemble_kernel_matrix(grid, params)
    kernel.check(grid, params.N, params.s, params.p)
    return kernel


def _integrals(values: np.ndarray, grid: RadialGrid, params: Params, kernel):
    """(G, S, C, B): gradient, seminorm, confinement and source integrals."""
    P = params
    slopes = grid.slope_operator @ values
    G = float(np.dot(grid.cell_mass, np.abs(slopes) ** P.p))
    S = G if P.s == 1 else kernel.integral(values)
    F = grid.interpolation @ values
    aF = np.abs(F)
    C = float(np.dot(grid.lp_weights(P.beta), aF**P.p))
    B = float(np.dot(grid.lp_weights(P.alpha), aF**P.q))
    return G, S, C, B


def _integral_gradients(values: np.ndarray, grid: RadialGrid, params: Params, kernel):
    """Gradients of ``A/p`` and ``B/q`` with respect to the nodal values."""
    P = params
    Dg = grid.slope_operator
    slopes = Dg @ values
    dG = Dg.T @ (grid.cell_mass * phi_p(slopes, P.p))
    if P.s == 1:
        dS = dG
    else:
        dS = kernel.integral_gradient(values) / P.p
    F = grid.interpolation @ values
    Pt = grid.interpolation.T
    dC = Pt @ (grid.lp_weights(P.beta) * phi_p(F, P.p))
    dB = Pt @ (grid.lp_weights(P.alpha) * phi_p(F, P.q))
    da = P.gamma * dG + (1.0 - P.gamma) * dS + dC
    da = np.asarray(da, dtype=float)
    db = np.asarray(dB, dtype=float)
    da[-1] = 0.0
    db[-1] = 0.0
    return da, db


def energy_values(values, grid: RadialGrid, params: Params, kernel=None) -> EnergyBreakdown:
    P = params
    G, S, C, B = _integrals(values, grid, P, kernel)
    grad_term = P.gamma / P.p * G
    nonlocal_term = (1.0 - P.gamma) / P.p * S
    confinement_term = C / P.p
    source_term = B / P.q
    A = P.gamma * G + (1.0 - P.gamma) * S + C
    J = grad_term + nonlocal_term + confinement_term - source_term
    return EnergyBreakdown(grad_term, nonlocal_term, confinement_term, source_term, J, A, B)


def energy(f: RadialFunction, params: Params, kernel: KernelMatrix | None = None) -> EnergyBreakdown:
    kernel = _kernel_for(f.grid, params, kernel)
    return energy_values(f.values, f.grid, params, kernel)


def gradient(f: RadialFunction, params: Params, kernel: KernelMatrix | None = None) -> RadialFunction:
    """Nodal gradient ``<J'(f), phi_i>``; the pinned boundary node reads 0."""
    kernel = _kernel_for(f.grid, params, kernel)
    da, db = _integral_gradients(f.values, f.grid, params, kernel)
    return RadialFunction(f.grid, da - db)


def hat_norms(grid: RadialGrid, params: Params, kernel=None) -> np.ndarray:
    """``||phi_i||_{s,p,beta}`` for the nodal hat functions (boundary node: inf)."""
    key = ("hat_norms", params.p, params.s, params.beta, None if kernel is None else kernel.key)
    cache = grid.__dict__.setdefault("_hat_cache", {})
    if key in cache:
        return cache[key]
    P = params
    M = grid.M
    Pm = grid.interpolation.tocsc()
    wb = grid.lp_weights(P.beta)
    Dg = grid.slope_operator.tocsc()
    out = np.full(M, np.inf)
    for i in range(M - 1):
        col = Pm.getcol(i)
        lp = float(np.dot(wb[col.indices], np.abs(col.data) ** P.p)) ** (1.0 / P.p)
        if P.s == 1:
            dcol = Dg.getcol(i)
            semi = float(np.dot(grid.cell_mass[dcol.indices], np.abs(dcol.data) ** P.p)) ** (1.0 / P.p)
        else:
            e = np.zeros(M)
            e[i] = 1.0
            semi = kernel.integral(e) ** (1.0 / P.p)
        out[i] = lp + semi
    out.flags.writeable = False
    cache[key] = out
    return out


def full_norm(values, grid: RadialGrid, params: Params, kernel=None) -> float:
    """``||u||_{s,p,beta} = ||u||_{p,beta} + [u]_{s,p}``."""
    G, S, C, _ = _integrals(values, grid, params, kernel)
    return C ** (1.0 / params.p) + S ** (1.0 / params.p)


def residual_values(values, grid: RadialGrid, params: Params, kernel=None) -> float:
    if not np.any(values):
        return 0.0
    da, db = _integral_gradients(values, grid, params, kernel)
    g = (da - db)[:-1]
    scale = max(1.0, full_norm(values, grid, params, kernel) ** (params.p - 1.0))
    return float(np.max(np.abs(g) / hat_norms(grid, params, kernel)[:-1]) / scale)


def residual(f: RadialFunction, params: Params, kernel: KernelMatrix | None = None) -> float:
    """Scale-invariant weak-form residual ``max_i |<J'(f), phi_i>| / (||phi_i|| max(1, ||f||^(p-1)))``."""
    kernel = _kernel_for(f.grid, params, kernel)
    return residual_values(f.values, f.grid, params, kernel)


@dataclass(frozen=True)
class InterpolationExponents:
    c: float
    e1: float
    e2: float
    eta: float
    omega: float
    variant: str = "consistent"

    def to_dict(self) -> dict:
        return asdict(self)


def interpolation_exponents(params: Params, variant: str = "consistent") -> InterpolationExponents:
    """Exponents of ``int |x|^alpha |u|^q <= C ||u||_{s,p}^eta ||u||_{p,beta}^omega``.

    ``variant="consistent"`` balances the small-ball term ``eps^e1 ||u||^q``
    against ``eps^-e2 ||u||_{p,beta}^p ||u||^(q-p)``, which gives
    ``eta + omega = q``; ``variant="printed"`` uses ``||u||^p`` for the first
    term instead and keeps the resulting ``eta`` for comparison.
    """
    if variant not in ("consistent", "printed"):
        raise ValueError(f"unknown variant {variant!r}")
    P = params
    rep = classify(P)
    if not rep.q_range:
        raise ExponentDerivationError(f"q={P.q} outside (p, p*) = ({P.p}, {rep.p_star})")
    sp = P.s * P.p
    e2 = -(P.alpha - P.beta + (P.q - P.p) * (1.0 - P.N) / P.p)
    if not e2 > 0:
        raise ExponentDerivationError(f"decay exponent e2 = {e2:g} must be positive")
    c = P.q * (P.N - sp) / P.p - P.N
    if not -sp < c < P.alpha:
        raise ExponentDerivationError(f"auxiliary weight c = {c:g} outside ({-sp:g}, {P.alpha:g})")
    e1 = P.alpha - c
    lead = P.q if variant == "consistent" else P.p
    eta = (lead * e2 + (P.q - P.p) * e1) / (e1 + e2)
    omega = P.p * e1 / (e1 + e2)
    return InterpolationExponents(c, e1, e2, eta, omega, variant)
