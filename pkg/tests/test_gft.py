import cmath
import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from nulllab.errors import EmptySample, ExponentOverflow, NonFiniteInput, ZeroFrequency, ZeroModulus
from nulllab.gft import (
    OMEGA,
    NullFunctionalInput,
    eps_functional,
    eps_functional_raw,
    gchar,
    perturbation_bound_check,
    sigma0_functional,
    u0_functional,
)
from nulllab.mixtures import MixtureSpec, PointMass, phi0, phi0_deriv, population_gchar


def symbolic_phi0(u0, s2, eps):
    """phi0 and its derivative as callables, differentiated by sympy."""
    t = sp.symbols("t", real=True)
    w = -(1 + sp.I) / sp.sqrt(2)
    expr = (1 - sp.Rational(str(eps))) * sp.exp(
        w * sp.nsimplify(u0) * t + sp.I * sp.nsimplify(s2) * t**2 / 2
    )
    f = sp.lambdify(t, expr, "mpmath")
    df = sp.lambdify(t, sp.diff(expr, t), "mpmath")
    return (lambda x: complex(f(x))), (lambda x: complex(df(x)))


def exact_input(t, u0, s2, eps):
    spec = MixtureSpec(u0, s2, eps, PointMass(u0 + 1.0, s2))
    return NullFunctionalInput(phi0(t, spec), phi0_deriv(t, spec), t)


# -- gchar -----------------------------------------------------------------


def test_gchar_at_zero_is_one():
    x = np.random.default_rng(0).normal(size=1000)
    pair = gchar(x, 0.0)
    assert pair.value == complex(1.0, 0.0)
    assert math.copysign(1.0, pair.value.imag) == 1.0
    assert pair.deriv == pytest.approx(OMEGA * np.mean(x), abs=1e-15)


def test_gchar_zero_sample():
    pair = gchar([0.0], 3.7)
    assert pair.value == 1 + 0j
    assert pair.deriv == 0j


def test_gchar_single_point_closed_form():
    pair = gchar([math.sqrt(2)], 1.0)
    expected = math.exp(-1) * complex(math.cos(1), -math.sin(1))
    assert pair.value.real == pytest.approx(0.198766, abs=1e-6)
    assert pair.value.imag == pytest.approx(-0.309560, abs=1e-6)
    assert abs(pair.value - expected) < 1e-15


def test_gchar_derivative_matches_finite_difference():
    x = np.random.default_rng(1).normal(-1, 1, size=500)
    t, h = 1.3, 1e-5
    fd = (gchar(x, t + h).value - gchar(x, t - h).value) / (2 * h)
    assert abs(gchar(x, t).deriv - fd) < 1e-7


def test_gchar_errors():
    with pytest.raises(EmptySample):
        gchar([], 1.0)
    with pytest.raises(NonFiniteInput):
        gchar([0.0, math.nan], 1.0)
    with pytest.raises(ExponentOverflow) as info:
        gchar([0.0, 1.0, -2000.0, 3.0], 1.0)
    assert info.value.index == 2


def test_gchar_is_deterministic():
    x = np.random.default_rng(2).normal(size=20_000)
    a, b = gchar(x, 1.47), gchar(x, 1.47)
    assert a.value == b.value and a.deriv == b.deriv


def test_gchar_order_independent():
    x = np.random.default_rng(3).normal(size=10_000)
    a = gchar(x, 1.2)
    b = gchar(x[::-1].copy(), 1.2)
    assert a.value == b.value


@given(
    x=st.lists(st.floats(-20, 20), min_size=1, max_size=50),
    t=st.floats(0, 5),
)
def test_gchar_modulus_bound(x, t):
    pair = gchar(x, t)
    bound = np.mean(np.exp(-t * np.asarray(x) / math.sqrt(2)))
    assert abs(pair.value) <= bound * (1 + 1e-12) + 1e-300


# -- null functionals -------------------------------------------------------


def test_u0_functional_exact_on_phi0():
    assert u0_functional(exact_input(2.0, -1.0, 1.0, 0.05)) == pytest.approx(-1.0, abs=1e-14)


def test_u0_functional_symmetric_null():
    for t in (0.3, 1.0, 4.0):
        assert u0_functional(exact_input(t, 0.0, 1.0, 0.0)) == pytest.approx(0.0, abs=1e-14)


def test_u0_functional_point_mass():
    t = 1.0
    g = cmath.exp(OMEGA * 3 * t)
    # hand derivative of exp(omega 3 t)
    assert u0_functional(NullFunctionalInput(g, 3 * OMEGA * g, t)) == pytest.approx(3.0, rel=1e-14)


def test_sigma0_functional_exact_on_phi0():
    assert sigma0_functional(exact_input(1.5, -1.0, 1.0, 0.05)) == pytest.approx(1.0, rel=1e-14)


def test_sigma0_functional_symbolic_oracle():
    f, df = symbolic_phi0(5, 0.25, 0.3)
    t = 0.7
    inp = NullFunctionalInput(f(t), df(t), t)
    assert sigma0_functional(inp) == pytest.approx(0.25, rel=1e-12)
    assert u0_functional(inp) == pytest.approx(5.0, rel=1e-12)


def test_sigma0_functional_pure_phase_decay():
    for t in (0.5, 2.0):
        g = cmath.exp(OMEGA * 1.7 * t)
        assert sigma0_functional(NullFunctionalInput(g, 1.7 * OMEGA * g, t)) == pytest.approx(0, abs=1e-14)


def test_functional_errors():
    with pytest.raises(ZeroFrequency):
        sigma0_functional(NullFunctionalInput(1 + 0j, 1j, 0.0))
    with pytest.raises(ZeroModulus):
        sigma0_functional(NullFunctionalInput(0j, 1j, 1.0))
    with pytest.raises(ZeroModulus):
        u0_functional(NullFunctionalInput(0j, 1j, 1.0))
    with pytest.raises(NonFiniteInput):
        u0_functional(NullFunctionalInput(complex(math.inf, 0), 1j, 1.0))


def test_sigma0_functional_not_clamped():
    x = np.random.default_rng(4).normal(0, 0.05, size=50)
    raw = sigma0_functional(NullFunctionalInput.from_pair(gchar(x, 5.0)))
    assert math.isfinite(raw)


@settings(max_examples=200)
@given(
    u0=st.floats(-5, 5),
    s2=st.floats(0.01, 5),
    eps=st.floats(0, 0.49),
    t=st.floats(0.1, 5),
    scale=st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3),
)
def test_functionals_scale_invariant(u0, s2, eps, t, scale):
    inp = exact_input(t, u0, s2, eps)
    scaled = NullFunctionalInput(inp.g * scale, inp.g_prime * scale, t)
    assert u0_functional(scaled) == pytest.approx(u0_functional(inp), rel=1e-12, abs=1e-12)
    assert sigma0_functional(scaled) == pytest.approx(sigma0_functional(inp), rel=1e-12, abs=1e-12)


# -- proportion functional --------------------------------------------------


def test_eps_functional_identity_on_phi0():
    spec = MixtureSpec(-1.0, 1.0, 0.05, PointMass(1.5, 1.0))
    t = 1.4711
    assert eps_functional(phi0(t, spec), t, -1.0, 1.0) == pytest.approx(0.05, abs=1e-14)


def test_eps_functional_pure_null():
    spec = MixtureSpec(0.3, 2.0, 0.0, PointMass(1.5, 1.0))
    assert eps_functional(phi0(1.1, spec), 1.1, 0.3, 2.0) == pytest.approx(0.0, abs=1e-14)


def test_eps_functional_point_mass_alternative():
    spec = MixtureSpec(-1.0, 1.0, 0.05, PointMass(1.5, 1.0))
    t = 1.4711
    a = 2.5 * t / math.sqrt(2)
    expected = 0.05 * (1 - math.exp(-a) * math.cos(a))
    got = eps_functional(population_gchar(t, spec), t, -1.0, 1.0)
    assert expected == pytest.approx(0.0531815, abs=1e-7)
    assert expected == pytest.approx(0.053186, abs=1e-5)
    assert got == pytest.approx(expected, abs=1e-14)


def test_eps_functional_clamps():
    assert eps_functional(2.0 + 0j, 0.0, 0.0, 1.0) == 0.0
    assert eps_functional(-1.0 + 0j, 0.0, 0.0, 1.0) == 1.0
    assert eps_functional(2.0 + 0j, 0.0, 0.0, 1.0, clamp=False) == -1.0
    with pytest.raises(ExponentOverflow):
        eps_functional_raw(1 + 0j, 10.0, 200.0, 1.0)


# -- perturbation inequalities ----------------------------------------------


def test_perturbation_identical_inputs():
    f = exact_input(1.0, -1.0, 1.0, 0.05)
    b = perturbation_bound_check(f, f)
    assert b.lhs_u0 == 0 and b.rhs_u0 == 0


def test_perturbation_nearby_null():
    f = exact_input(1.0, -1.0, 1.0, 0.05)
    g = exact_input(1.0, -1.1, 1.0, 0.05)
    b = perturbation_bound_check(f, g)
    assert 0 < b.lhs_u0 <= b.rhs_u0
    assert b.lhs_sigma <= b.rhs_sigma


def test_perturbation_scaling_leaves_u0():
    f = exact_input(2.0, 0.0, 1.0, 0.0)
    g = NullFunctionalInput(1.01 * f.g, 1.01 * f.g_prime, 2.0)
    b = perturbation_bound_check(f, g)
    assert b.lhs_u0 == pytest.approx(0.0, abs=1e-15)
    assert b.rhs_u0 >= 0


@settings(max_examples=300)
@given(
    u0=st.floats(-3, 3),
    s2=st.floats(0.1, 3),
    eps=st.floats(0, 0.45),
    du=st.floats(-0.3, 0.3),
    ds=st.floats(-0.05, 0.3),
    de=st.floats(-0.04, 0.04),
    t=st.floats(0.1, 3),
)
def test_perturbation_inequalities_hold(u0, s2, eps, du, ds, de, t):
    f = exact_input(t, u0, s2, eps)
    g = exact_input(t, u0 + du, s2 + ds, min(max(eps + de, 0.0), 0.49))
    b = perturbation_bound_check(f, g)
    assert b.lhs_u0 <= b.rhs_u0 * (1 + 1e-9) + 1e-15
    assert b.lhs_sigma <= b.rhs_sigma * (1 + 1e-9) + 1e-15


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0.2, 2.0))
def test_perturbation_empirical_vs_population(seed, t):
    spec = MixtureSpec(-1.0, 1.0, 0.1, PointMass(1.5, 1.5))
    rng = np.random.default_rng(seed)
    x = rng.normal(-1, 1, 2000)
    f = NullFunctionalInput.from_pair(gchar(x, t))
    g = NullFunctionalInput(phi0(t, spec), phi0_deriv(t, spec), t)
    b = perturbation_bound_check(f, g)
    assert b.lhs_u0 <= b.rhs_u0 * (1 + 1e-9)
    assert b.lhs_sigma <= b.rhs_sigma * (1 + 1e-9)
