import json

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from mixedhenon.errors import ConfigurationError, ExponentDerivationError, StaleKernelError, SupercriticalDimensionError
from mixedhenon.functional import (
    Verdict,
    classify,
    energy,
    energy_values,
    gradient,
    interpolation_exponents,
    phi_p,
    residual,
)
from mixedhenon.kernel import assemble_kernel_matrix, gagliardo_seminorm
from mixedhenon.params import Params, p_star
from mixedhenon.profiles import bump, bump_family
from mixedhenon.radial import RadialFunction, make_grid, radial_gradient_norm, weighted_lp_norm


@pytest.mark.parametrize("t, p, expected", [(-2.0, 3.0, -4.0), (0.0, 1.5, 0.0), (0.0, 3.0, 0.0), (3.0, 2.0, 3.0)])
def test_phi_p_values(t, p, expected):
    assert phi_p(t, p) == expected


@given(st.floats(-1e3, 1e3), st.floats(1.01, 6))
def test_phi_p_is_odd(t, p):
    assert phi_p(-t, p) == -phi_p(t, p)


@pytest.mark.parametrize(
    "params, expected",
    [
        (Params(3, 2, 4, s=1, gamma=1, alpha=0), 6.0),
        (Params(3, 2, 4, s=0.5, gamma=0, alpha=0), 3.0),
        (Params(3, 2, 4, s=1, gamma=1, alpha=1), 8.0),
    ],
)
def test_p_star_values(params, expected):
    assert p_star(params) == expected


def test_p_star_supercritical_dimension():
    with pytest.raises(SupercriticalDimensionError):
        p_star(Params(2, 2, 4))


def test_params_space_rule():
    with pytest.raises(ConfigurationError):
        Params(3, 2, 4, s=0.5, gamma=0.5)


def test_classify_examples():
    exists = classify(Params(3, 2, 4, s=1, gamma=1, alpha=0, beta=2))
    assert exists.verdict is Verdict.EXISTS_GUARANTEED
    assert all(exists.checks[k] for k in ("s_range", "alpha_range", "q_range", "condition_2"))
    assert classify(Params(3, 2, 7, s=1, gamma=1, alpha=0, beta=2)).verdict is Verdict.NONEXISTENCE_GUARANTEED
    assert classify(Params(3, 2, 6, s=1, gamma=1, alpha=0, beta=2)).verdict is Verdict.UNCLASSIFIED


def test_report_serialization():
    rep = classify(Params(3, 2, 4))
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["verdict"] == "EXISTS_GUARANTEED"
    assert set(d["checks"]) == {"s_range", "alpha_range", "q_range", "condition_2", "beta_nonexist"}
    P = Params(3, 2, 4, alpha=0.5)
    assert Params.from_dict(json.loads(json.dumps(P.to_dict()))) == P


@st.composite
def params(draw):
    N = draw(st.integers(1, 4))
    p = draw(st.floats(1.1, 4))
    local = draw(st.booleans())
    s = 1.0 if local else draw(st.floats(0.05, 0.99))
    gamma = draw(st.floats(0, 1)) if local else 0.0
    return Params(N, p, draw(st.floats(1.05, 12)), s, gamma, draw(st.floats(-3, 3)), draw(st.floats(0.01, 4)))


@given(params())
def test_classify_regions_disjoint(P):
    rep = classify(P)
    exists = rep.s_range and rep.alpha_range and rep.q_range and rep.condition_2
    assert (rep.verdict is Verdict.EXISTS_GUARANTEED) == exists
    if rep.verdict is Verdict.NONEXISTENCE_GUARANTEED:
        assert not rep.q_range and P.q > rep.p_star


@given(params())
def test_boundary_is_unclassified(P):
    try:
        ps = p_star(P)
    except SupercriticalDimensionError:
        return
    assume(ps > 1)
    assert classify(P.replace(q=ps)).verdict is Verdict.UNCLASSIFIED


@given(st.integers(2, 5), st.floats(1.1, 3), st.floats(0.1, 0.9), st.floats(-0.5, 2), st.floats(0.01, 1))
def test_p_star_monotone(N, p, s, alpha, d):
    P = Params(N, p, 2 * p, s=s, gamma=0.0, alpha=alpha)
    assume(P.sp < N and s + d * (1 - s) < 1 and P.replace(s=s + d * (1 - s)).sp < N)
    assert p_star(P.replace(alpha=alpha + d)) > p_star(P)
    assert p_star(P.replace(s=s + d * (1 - s))) > p_star(P)


@given(params())
def test_threshold_identity(P):
    assume(P.gamma == 0 or P.s == 1)
    assume(P.N - P.sp > 0 and P.N + P.alpha > 0)
    assert (P.N + P.alpha) / P.tau == pytest.approx(p_star(P), rel=4e-16, abs=0)


# -- energy, gradient, residual -------------------------------------------------

REF = Params(3, 2, 4, s=1, gamma=1, alpha=0, beta=2)


def test_zero_energy_and_gradient():
    g = make_grid(3, 6.0, 20)
    z = RadialFunction.zeros(g)
    e = energy(z, REF)
    assert (e.grad_term, e.nonlocal_term, e.confinement_term, e.source_term, e.J, e.A, e.B) == (0,) * 7
    assert np.all(gradient(z, REF).values == 0)
    assert residual(z, REF) == 0


@pytest.mark.parametrize("P", [REF, Params(2, 3, 4.5, s=0.6, gamma=0, alpha=0.5, beta=1)])
def test_energy_homogeneity(P):
    g = make_grid(P.N, 6.0, 24)
    km = None if P.s == 1 else assemble_kernel_matrix(g, P)
    f = bump(g, 0.5, 1.5)
    e = energy(f, P, km)
    for t in (0.5, 2.0):
        expected = t**P.p / P.p * e.A - t**P.q / P.q * e.B
        assert energy(f.scaled(t), P, km).J == pytest.approx(expected, rel=1e-12)


def test_energy_matches_term_recomputation():
    g = make_grid(3, 10.0, 60)
    f = bump(g, 0.0, 1.3, 2.0)
    e = energy(f, REF)
    grad = radial_gradient_norm(f, 2) ** 2
    conf = weighted_lp_norm(f, 2, 2) ** 2
    src = weighted_lp_norm(f, 4, 0) ** 4
    J = grad / 2 + conf / 2 - src / 4
    assert e.J == pytest.approx(J, rel=1e-12)
    assert e.A / 2 - e.B / 4 == pytest.approx(e.J, rel=1e-12)
    assert min(e.grad_term, e.nonlocal_term, e.confinement_term, e.source_term) >= 0


def test_mixed_weights_enter_energy():
    g = make_grid(3, 6.0, 30)
    f = bump(g, 0.0, 1.0)
    P = Params(3, 2, 4, s=1, gamma=0.3)
    e = energy(f, P)
    G = radial_gradient_norm(f, 2) ** 2
    assert e.grad_term == pytest.approx(0.3 / 2 * G, rel=1e-14)
    assert e.nonlocal_term == pytest.approx(0.7 / 2 * G, rel=1e-14)
    assert e.A == pytest.approx(G + weighted_lp_norm(f, 2, 2) ** 2, rel=1e-14)


def _random_case(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(1, 4))
    p = float(rng.choice([2.0, 2.5, 3.0]))
    if rng.random() < 0.5:
        P = Params(N, p, p + rng.uniform(0.3, 2), 1.0, rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0.5, 2.5))
    else:
        P = Params(N, p, p + rng.uniform(0.3, 2), rng.uniform(0.55, 0.9), 0.0, rng.uniform(0, 1), rng.uniform(0.5, 2.5))
    g = make_grid(N, 6.0, int(rng.integers(12, 30)), rng.uniform(1, 2.5))
    v = bump(g, rng.uniform(0, 2), rng.uniform(0.8, 2)).values * (1 + 0.2 * rng.standard_normal(g.M))
    v[-1] = 0
    d = rng.standard_normal(g.M)
    d[-1] = 0
    km = None if P.s == 1 else assemble_kernel_matrix(g, P)
    return P, g, km, RadialFunction(g, v), d


@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_finite_differences(seed):
    P, g, km, f, d = _random_case(seed)
    h = 1e-6
    fd = (energy_values(f.values + h * d, g, P, km).J - energy_values(f.values - h * d, g, P, km).J) / (2 * h)
    an = gradient(f, P, km).values @ d
    assert an == pytest.approx(fd, rel=1e-5)


@pytest.mark.parametrize("seed", range(5))
def test_gradient_pairing_identity(seed):
    P, g, km, f, _ = _random_case(seed)
    e = energy(f, P, km)
    assert gradient(f, P, km).values @ f.values == pytest.approx(e.A - e.B, rel=1e-10)


def test_residual_of_random_profile_is_positive():
    P, g, km, f, _ = _random_case(3)
    assert residual(f, P, km) > 0


def test_kernel_mismatch_is_reported():
    P = Params(2, 2, 3, s=0.5, gamma=0)
    km = assemble_kernel_matrix(make_grid(2, 4.0, 12), P)
    f = bump(make_grid(2, 4.0, 14), 0, 1)
    with pytest.raises(StaleKernelError):
        energy(f, P, km)


# -- interpolation exponents ----------------------------------------------------


def test_reference_exponents():
    ex = interpolation_exponents(REF)
    assert (ex.c, ex.e1, ex.e2) == (-1.0, 1.0, 4.0)
    assert ex.eta == pytest.approx(3.6, abs=1e-15) and ex.omega == pytest.approx(0.4, abs=1e-15)
    assert ex.eta + ex.omega == pytest.approx(4.0, abs=1e-15)
    printed = interpolation_exponents(REF, variant="printed")
    assert printed.eta == pytest.approx((2 * 4 + 2 * 1) / 5)


def test_boundary_of_condition_two():
    # alpha - beta + (q - p)(1 - N)/p vanishes for alpha=3, beta=1 at the reference point
    edge = Params(3, 2, 4, alpha=3.0, beta=1.0)
    assert edge.alpha - edge.beta + (edge.q - edge.p) * (1 - edge.N) / edge.p == 0.0
    assert classify(edge).verdict is Verdict.UNCLASSIFIED
    with pytest.raises(ExponentDerivationError):
        interpolation_exponents(edge)


def test_exponents_need_subcritical_q():
    with pytest.raises(ExponentDerivationError):
        interpolation_exponents(Params(3, 2, 7))


@st.composite
def admissible(draw):
    N = draw(st.integers(2, 4))
    p = draw(st.floats(1.2, 3))
    s = draw(st.sampled_from([1.0, draw(st.floats(0.3, 0.95))]))
    gamma = 1.0 if s == 1 else 0.0
    alpha = draw(st.floats(-0.5, 2))
    beta = draw(st.floats(0.1, 4))
    P = Params(N, p, 2.0 * p, s, gamma, alpha, beta)
    assume(P.sp < N)
    lo, hi = p, p_star(P)
    q = lo + draw(st.floats(0.05, 0.95)) * (hi - lo)
    P = P.replace(q=q)
    rep = classify(P)
    assume(rep.q_range and rep.condition_2)
    return P


@given(admissible())
def test_exponent_identities(P):
    ex = interpolation_exponents(P)
    assert ex.e1 > 0 and ex.e2 > 0 and ex.eta > 0 and ex.omega > 0
    assert ex.eta + ex.omega == pytest.approx(P.q, rel=1e-14)
    assert ex.omega * (ex.e1 + ex.e2) == pytest.approx(P.p * ex.e1, rel=1e-14)
