import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixedhenon.errors import PreconditionError, UndefinedRatioError
from mixedhenon.params import Params, p_star
from mixedhenon.profiles import bump, bump_family, gaussian
from mixedhenon.radial import RadialFunction, make_grid, weighted_lp_integral
from mixedhenon.verify import (
    compactness_probe,
    degiorgi_trace,
    gradient_check,
    interpolation_check,
    pohozaev_sign_check,
    scaling_decay_check,
    strauss_check,
)

REF = Params(3, 2, 4, s=1, gamma=1, alpha=0, beta=2)


# -- decay estimate ---------------------------------------------------------------


@given(st.floats(-1e3, 1e3).filter(lambda t: abs(t) > 1e-3))
def test_strauss_is_scale_invariant(t):
    g = make_grid(3, 10.0, 40)
    f = bump(g, 1.0, 1.5)
    assert strauss_check(f.scaled(t), REF)["C_est"] == pytest.approx(strauss_check(f, REF)["C_est"], rel=1e-13)


def test_strauss_zero_profile():
    with pytest.raises(UndefinedRatioError):
        strauss_check(RadialFunction.zeros(make_grid(3, 5.0, 10)), REF)


def test_strauss_precondition():
    with pytest.raises(PreconditionError):
        strauss_check(gaussian(make_grid(2, 5.0, 10)), Params(2, 2, 3, s=0.4, gamma=0))


def _family_max(M):
    g = make_grid(3, 15.0, M)
    return max(strauss_check(f, REF)["C_est"] for f in bump_family(g, 50, seed=11))


def test_strauss_family_stable_under_refinement():
    a, b = _family_max(200), _family_max(400)
    assert np.isfinite(a) and abs(b - a) <= 0.1 * a


def test_strauss_spreading_bumps_stay_bounded():
    g = make_grid(3, 60.0, 600)
    C = [strauss_check(bump(g, n, 1.0), REF)["C_est"] for n in range(0, 40, 4)]
    assert max(C) < 2.0 * max(C[:3])
    assert C[-1] <= 1.2 * C[-2]


# -- interpolation ------------------------------------------------------------------


def test_interpolation_scale_invariance_and_printed_drift():
    g = make_grid(3, 15.0, 200)
    fam = bump_family(g, 10, seed=3)
    base = interpolation_check(fam, REF)
    scaled = interpolation_check([f.scaled(2.0) for f in fam], REF)
    assert scaled["max_ratio"] == pytest.approx(base["max_ratio"], rel=1e-13)
    drift = scaled["max_ratio_printed"] / base["max_ratio_printed"]
    assert drift == pytest.approx(base["printed_scale_drift"], rel=1e-12)
    assert base["printed_scale_drift"] == pytest.approx(2.0 ** (4 - 2.0 - 0.4))


def test_interpolation_stable_under_refinement():
    vals = [interpolation_check(bump_family(make_grid(3, 15.0, M), 50, seed=5), REF)["max_ratio"] for M in (200, 400)]
    assert abs(vals[1] - vals[0]) <= 0.1 * vals[0]


def test_interpolation_fractional_case():
    P = Params(2, 2, 3, s=0.7, gamma=0, alpha=0.5, beta=1)
    g = make_grid(2, 8.0, 40)
    rep = interpolation_check(bump_family(g, 5, seed=1), P)
    assert rep.passed and rep["max_ratio"] > 0


# -- compactness ----------------------------------------------------------------------


def test_compactness_translate():
    g = make_grid(3, 30.0, 300)
    rep = compactness_probe(REF, g, kind="translate", width=1.5)
    vals = rep["values"]
    assert rep.status == "pass" and rep.passed
    assert np.all(np.diff(vals) < 0)


def test_compactness_translate_escaping_domain_is_inconclusive():
    g = make_grid(3, 10.0, 100)
    rep = compactness_probe(REF, g, kind="translate", width=2.0)
    assert rep.status == "inconclusive" and not rep.passed
    assert "raise R" in rep.details["guidance"]


def test_compactness_concentrate():
    g = make_grid(3, 15.0, 400, grading=4.0)
    rep = compactness_probe(REF, g, kind="concentrate")
    assert rep.status == "pass"
    assert rep["final_ratio"] < 0.1


def test_compactness_constant_sequence_not_applicable():
    g = make_grid(3, 15.0, 100)
    rep = compactness_probe(REF, g, kind="constant")
    assert rep.status == "not-applicable" and not rep.passed


def test_compactness_report_serializes():
    g = make_grid(3, 15.0, 100)
    d = json.loads(json.dumps(compactness_probe(REF, g, kind="constant").to_dict()))
    assert set(d) >= {"name", "params", "pass", "measured", "bound", "tolerance"}


# -- level-set iteration ------------------------------------------------------------------


def test_degiorgi_half_profile():
    g = make_grid(3, 5.0, 20)
    v = np.full(g.M, 0.5)
    v[-1] = 0.0
    tr = degiorgi_trace(RadialFunction(g, v), REF, K=5)
    assert np.all(tr.truncations[0].values[:-1] == 0.5)
    for w in tr.truncations[1:]:
        assert np.all(w.values == 0.0)
    assert np.all(tr.energies[1:] == 0)


def test_degiorgi_constants():
    tr = degiorgi_trace(gaussian(make_grid(3, 5.0, 20)), REF, K=4)
    assert tr.constants[0] == 1.0  # C_1 = (2 - 1)^4
    assert tr.constants[1] == 81.0  # C_2 = (4 - 1)^4
    assert tr.delta == 1.0


def test_degiorgi_reference_vanishes(reference_solution):
    tr = degiorgi_trace(reference_solution.solution, REF, K=30, epsilon=1e-3)
    assert tr.vanishes
    assert weighted_lp_integral(reference_solution.solution.scaled(tr.scale), 4, 0) < 1e-3
    assert json.loads(json.dumps(tr.to_dict()))["vanishes"] is True


def test_degiorgi_rejects_negative_profile():
    g = make_grid(3, 5.0, 20)
    with pytest.raises(PreconditionError):
        degiorgi_trace(gaussian(g).scaled(-1.0), REF)


@given(st.floats(0.2, 4), st.floats(0.3, 3), st.floats(0, 2), st.integers(3, 25))
def test_degiorgi_invariants(amp, width, center, K):
    g = make_grid(3, 8.0, 60)
    f = bump(g, center, width, amp)
    tr = degiorgi_trace(f, REF, K=K)
    assert np.all(np.diff(tr.energies) <= 0)
    for k in range(K):
        a, b = tr.truncations[k].values, tr.truncations[k + 1].values
        assert np.all(b <= a)
        assert np.all(a[b > 0] > 0.5 ** (k + 1))


@pytest.mark.parametrize("amp", [1.5, 3.0])
def test_degiorgi_limit_identity(amp):
    g = make_grid(3, 8.0, 80)
    f = bump(g, 0.5, 1.5, amp)
    tr = degiorgi_trace(f, REF, K=45)
    U = g.interpolation @ f.values
    limit = float(np.dot(g.lp_weights(0.0), np.maximum(U - 1.0, 0.0) ** 4))
    assert tr.energies[-1] == pytest.approx(limit, rel=1e-9)


# -- scaling and difference quotients -----------------------------------------------------------


def test_scaling_zero_profile_passes():
    rep = scaling_decay_check(RadialFunction.zeros(make_grid(3, 10.0, 40)), REF)
    assert rep.passed


def test_scaling_decay_factor_reference():
    rep = scaling_decay_check(gaussian(make_grid(3, 10.0, 200)), REF, lambdas=(4.0,))
    assert rep["tau"] == 0.5
    assert rep["rows"][0]["decay_bound"] == 0.5


def test_scaling_gaussian_passes():
    rep = scaling_decay_check(gaussian(make_grid(3, 10.0, 200)), REF, lambdas=(1.5, 2.0, 4.0), r=2.0)
    assert rep.passed
    for row in rep["rows"]:
        c = (1 - row["lambda"] ** -4) / (4 * (row["lambda"] - 1))
        assert row["constant"] == pytest.approx(c, rel=1e-15)
        assert row["dq_lhs"] <= row["dq_rhs"]


def test_scaling_precondition():
    with pytest.raises(PreconditionError):
        scaling_decay_check(gaussian(make_grid(2, 5.0, 20)), Params(2, 2, 3, s=0.5, gamma=0, beta=0.5))


@pytest.mark.parametrize("seed", range(3))
def test_scaling_bound_over_family(seed):
    g = make_grid(3, 15.0, 300)
    rng = np.random.default_rng(seed)
    lams = rng.uniform(1.05, 5.0, 4)
    for f in bump_family(g, 8, seed=seed):
        rep = scaling_decay_check(f, REF, lambdas=lams)
        for row in rep["rows"]:
            assert row["norm_ratio"] <= row["decay_bound"] * (1 + 1e-6)


# -- sign condition ------------------------------------------------------------------------------


def test_pohozaev_reference_threshold():
    rep = pohozaev_sign_check(REF)
    assert rep["threshold"] == 6.0 == p_star(REF)


def test_pohozaev_boundary_fails_strictly():
    rep = pohozaev_sign_check(REF.replace(q=6.0))
    assert rep["holds"] is False and rep["coefficient"] == 0.0
    assert rep.passed


def test_pohozaev_above_threshold_holds_everywhere():
    rep = pohozaev_sign_check(REF.replace(q=6.5), samples=1000)
    assert rep["holds"] and rep["fraction_pointwise"] == 1.0 and rep.passed


def test_pohozaev_below_threshold():
    rep = pohozaev_sign_check(REF)
    assert not rep["holds"] and rep["fraction_pointwise"] == 0.0 and rep.passed


@given(st.integers(1, 5), st.floats(1.1, 4), st.floats(0.1, 1), st.floats(-0.5, 3), st.floats(1.1, 10))
def test_pohozaev_threshold_matches_critical_exponent(N, p, s, alpha, q):
    P = Params(N, p, q, s, 1.0 if s == 1 else 0.0, alpha, 1.0)
    if not P.tau > 0:
        return
    rep = pohozaev_sign_check(P, samples=50)
    assert rep["threshold"] == pytest.approx(p_star(P), rel=1e-14)
    assert rep.passed


def test_gradient_check_passes():
    rep = gradient_check(count=20, seed=0)
    assert rep.passed and rep["passed"] == 20
