import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leibenson import (
    DomainError,
    RegimeError,
    classify_regime,
    derive_constants,
    normalization_constant_by_quadrature,
    unit_sphere_area,
)
from leibenson.quad import integrate_radial

from conftest import random_valid_triples


def test_constants_231():
    # hand evaluation: beta = 3 + 2*(2-1) = 5, gamma = 2/1 = 2,
    # kappa = (1/3) * 5^(-1/2) = 1/(3 sqrt 5)
    p = derive_constants(2, 3.0, 1.0)
    assert p.beta == 5.0
    assert p.gamma == 2.0
    assert p.kappa == pytest.approx(1.0 / (3.0 * math.sqrt(5.0)), rel=1e-15)


def test_constants_222_pme_crosscheck():
    # p=2 is the porous-medium special case: beta = 2 + 2*(2-1) = 4,
    # gamma = 1/(2-1) = 1, kappa = (1/4) * 4^(-1) = 1/16
    p = derive_constants(2, 2.0, 2.0)
    assert p.beta == 4.0
    assert p.gamma == 1.0
    assert p.kappa == pytest.approx(1.0 / 16.0, rel=1e-15)


def test_regime_gate_rejected():
    with pytest.raises(RegimeError):
        derive_constants(2, 2.0, 1.0)   # q(p-1) = 1 exactly
    with pytest.raises(DomainError):
        derive_constants(2, 1.0, 2.0)
    with pytest.raises(DomainError):
        derive_constants(2, 3.0, -1.0)
    with pytest.raises(DomainError):
        derive_constants(0, 3.0, 1.0)


def test_normalization_dual_route_231():
    # independent oracle: bracketing root-solve on the quadrature mass
    p = derive_constants(2, 3.0, 1.0)
    c_quad = normalization_constant_by_quadrature(2, 3.0, 1.0, p.beta, p.gamma, p.kappa)
    assert abs(c_quad - p.c_norm) / p.c_norm <= 1e-10
    # value frozen from the dual-route computation (both agree to machine precision)
    assert p.c_norm == pytest.approx(0.4979207164920791, rel=1e-12)


def test_normalization_oracle_t_invariance():
    # change of variables x = t^(1/beta) xi: the root cannot depend on t
    p = derive_constants(2, 3.0, 1.0)
    for t in (0.5, 2.0):
        c = normalization_constant_by_quadrature(2, 3.0, 1.0, p.beta, p.gamma, p.kappa, t=t)
        assert abs(c - p.c_norm) / p.c_norm <= 1e-12


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_unit_mass(t, param_quartet):
    for p in param_quartet:
        radius = p.r_unit * t ** (1.0 / p.beta)
        kt = p.kappa * t ** (-p.s / p.beta)

        def g(r):
            return (p.omega * t ** (-p.d / p.beta)
                    * np.maximum(p.c_norm - kt * r ** p.s, 0.0) ** p.gamma * r ** (p.d - 1))

        res = integrate_radial(g, 0.0, radius, tol=1e-11)
        assert res.converged
        assert abs(res.value - 1.0) <= 1e-9


def test_sphere_areas():
    assert unit_sphere_area(1) == pytest.approx(2.0)
    assert unit_sphere_area(2) == pytest.approx(2.0 * math.pi)
    assert unit_sphere_area(3) == pytest.approx(4.0 * math.pi)


# -- defining identities of the exponents -----------------------------------

@settings(max_examples=300, deadline=None)
@given(st.integers(1, 3), st.floats(1.05, 6.0), st.floats(0.05, 6.0))
def test_exponent_identities(d, p, q):
    if q * (p - 1.0) <= 1.0 + 1e-9:
        return
    beta = p + d * (q * (p - 1) - 1)
    gamma = (p - 1) / (q * (p - 1) - 1)
    # defining relation of gamma
    assert abs((p - 1) * (gamma * q - 1) - gamma) <= 1e-12 * max(1.0, gamma)
    # the exponent identity that collapses the coefficient to f_+^1
    assert abs((gamma - 1) * (p - 2) + gamma * (q - 1) * (p - 1) - 1.0) <= 1e-12
    assert beta > p and gamma > 0


def test_derived_constants_positive():
    rng = np.random.default_rng(2024)
    for d, p, q in random_valid_triples(rng, 25):
        par = derive_constants(d, p, q)
        assert par.beta > par.p
        assert par.gamma > 0 and par.kappa > 0 and par.c_norm > 0


# -- regime classification ---------------------------------------------------

def test_regime_231_all_true():
    # p=3 > 2, q(p-1)=2 < 1 + d(p-1)^2 = 9, q=1 > (1+2)/(2*2) = 3/4
    rep = classify_regime(2, 3.0, 1.0)
    assert all(rep.as_dict().values())


def test_regime_19_11_all_false():
    # q(p-1) = 1.1 * 0.9 = 0.99 < 1
    rep = classify_regime(2, 1.9, 1.1)
    assert not any(rep.as_dict().values())


def test_regime_3_15_3():
    # q(p-1) = 1.5 > 1; p = 1.5 is not > d/(d-1) = 1.5 (strict), so the
    # markov/strong predicates fail even though q(p-1) > (2-p+d)/d = 3.5/3
    rep = classify_regime(3, 1.5, 3.0)
    assert rep.barenblatt_ok
    assert rep.superposition_ok          # p = 1.5 > (1+3)/3
    assert not rep.markov_ok
    assert not rep.strong_solution_ok
    assert not rep.uniqueness_ii_ok


def test_regime_accepts_params_object(params231):
    assert classify_regime(params231) == classify_regime(2, 3.0, 1.0)


def test_strong_iff_uniqueness_ii():
    rng = np.random.default_rng(11)
    for _ in range(500):
        d = int(rng.integers(1, 4))
        p = float(rng.uniform(1.05, 5.0))
        q = float(rng.uniform(0.05, 5.0))
        rep = classify_regime(d, p, q)
        assert rep.strong_solution_ok == rep.uniqueness_ii_ok


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 3), st.floats(1.05, 5.0), st.floats(0.05, 5.0),
       st.floats(0.0, 3.0))
def test_strong_flag_monotone_in_q(d, p, q, dq):
    before = classify_regime(d, p, q).strong_solution_ok
    after = classify_regime(d, p, q + dq).strong_solution_ok
    assert not (before and not after)


def test_markov_matches_barenblatt_for_p_above_2():
    # for p > 2 the extra fast-diffusion condition is vacuous
    rng = np.random.default_rng(5)
    for _ in range(300):
        d = int(rng.integers(2, 4))
        p = float(rng.uniform(2.0 + 1e-9, 5.0))
        q = float(rng.uniform(0.05, 5.0))
        rep = classify_regime(d, p, q)
        expected = rep.barenblatt_ok and p > d / (d - 1.0)
        assert rep.markov_ok == expected
