import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from relaxkit import continuum as co
from relaxkit.errors import DomainError, UnknownRegime

P = co.ContinuumParams


def test_sink_reduces_to_gaussian():
    p = P(D=1.5, g=0.0, x=0.7, x0=-0.2, t=2.0)
    assert np.isclose(co.diffusion_with_sink(p), co.gaussian(0.9, 1.5, 2.0))


def test_strong_sink_absorbs():
    assert co.diffusion_with_sink(P(g=1e9, x=0.0, x0=1.0, xs=0.0, t=1.0)) < 1e-6


def test_sink_domain_errors():
    with pytest.raises(DomainError):
        co.diffusion_with_sink(P(x=1.0, x0=1.0, t=0.0))
    with pytest.raises(DomainError):
        P(D=-1.0)


@settings(max_examples=30, deadline=None)
@given(g=st.floats(0.05, 5), x0=st.floats(-3, 3), xs=st.floats(-2, 2), t=st.floats(0.1, 20))
def test_sink_flux_matching(g, x0, xs, t):
    D = 1.0
    h = 1e-5

    def C(x):
        return co.diffusion_with_sink(P(D, g, x, x0, xs, t))
    left = (3 * C(xs) - 4 * C(xs - h) + C(xs - 2 * h)) / (2 * h)
    right = (-3 * C(xs) + 4 * C(xs + h) - C(xs + 2 * h)) / (2 * h)
    c = C(xs)
    assert abs(D * (right - left) - g * c) <= 1e-4 * g * c + 1e-12


@pytest.mark.parametrize("t", [0.01, 1.0, 50.0])
def test_free_kernel_normalized(t):
    val, _ = integrate.quad(lambda x: co.diffusion_with_sink(P(1.0, 0.0, x, 0.0, 0.0, t)), -np.inf, np.inf)
    assert abs(val - 1) < 1e-6


def test_boundary_limits():
    x, x0, t = 1.3, 0.4, 2.0
    refl = co.diffusion_boundary_impurity(P(1.0, 0.0, x, x0, 0.0, t))
    assert np.isclose(refl, co.gaussian(x - x0, 1, t) + co.gaussian(x + x0, 1, t))
    absb = co.diffusion_boundary_impurity(P(1.0, 1e12, x, x0, 0.0, t))
    ref = math.exp(-(x * x + x0 * x0) / (4 * t)) * math.sinh(x * x0 / (2 * t)) / math.sqrt(math.pi * t)
    assert np.isclose(absb, ref, rtol=1e-6)
    with pytest.raises(DomainError):
        co.diffusion_boundary_impurity(P(1.0, 1.0, -1.0, x0, 0.0, t))


def test_remaining_charge_against_quadrature():
    x0, t = 0.5, 400.0
    val, _ = integrate.quad(lambda x: co.diffusion_boundary_impurity(P(1.0, 1e12, x, x0, 0.0, t)), 0, np.inf)
    assert abs(val - x0 / math.sqrt(math.pi * t)) / val < 0.01
    assert np.isclose(co.remaining_charge(x0, t), val, rtol=1e-6)


def test_rg_dimension():
    assert co.rg_dimension(1) == (1, "relevant")
    assert co.rg_dimension(2) == (0, "marginal")
    assert co.rg_dimension(3) == (-1, "irrelevant")


def test_subdiffusion_infinite_and_edges():
    t = 1e4
    g14 = math.gamma(0.25)
    bulk = co.subdiffusion_kernel(P(1.0, 0.0, 3.0, 3.0, 0.0, t), "infinite")
    assert np.isclose(bulk, g14 / (4 * math.pi * t ** 0.25), rtol=1e-8)
    sym = co.subdiffusion_kernel(P(1.0, 0.0, 1e-3, 1e-3, 0.0, 1e12), "semi_symmetric")
    assert np.isclose(sym, g14 / (math.pi * 1e3), rtol=1e-3)
    cp = co.subdiffusion_kernel(P(1.0, 0.0, 1e-3, 1e-3, 0.0, 1e12), "semi_charge_preserving")
    assert np.isclose(cp, g14 / (2 * math.pi * 1e3), rtol=1e-3)


def test_symmetric_roots():
    fam = co.biharmonic_modes(7.0, "symmetric", 2)
    r = fam.roots * 7.0 / math.pi
    assert abs(r[0] - 1.50562) < 1e-5 and abs(r[1] - 2.49975) < 1e-5


@pytest.mark.parametrize("kind", co.BC_KINDS)
def test_modes_residual_and_orthonormality(kind):
    L = 5.0
    fam = co.biharmonic_modes(L, kind, 4)
    assert max(abs(r) for r in fam.meta["residuals"]) < 1e-10
    for a in range(4):
        for b in range(a, 4):
            val, _ = integrate.quad(lambda x: fam.evaluate(a, x) * fam.evaluate(b, x), 0, L, limit=200)
            assert abs(val - (a == b)) < 1e-6
        for z in fam.zero_mode_basis(np.linspace(0, L, 3)):
            pass
    assert len(fam.zero_mode_basis(np.zeros(1))) == {"symmetric": 2, "charge_preserving": 1, "fully_breaking": 0}[kind]


@pytest.mark.parametrize("kind,geom", [("symmetric", "semi_symmetric"),
                                       ("charge_preserving", "semi_charge_preserving"),
                                       ("fully_breaking", "semi_fully_breaking")])
def test_kernel_matches_mode_sum(kind, geom):
    L, t, x, x0 = 60.0, 50.0, 1.5, 2.5
    fam = co.biharmonic_modes(L, kind, 60)
    exact = co.subdiffusion_kernel(P(1.0, 0.0, x, x0, 0.0, t), geom)
    assert abs(co.mode_sum_kernel(fam, x, x0, t) - exact) < 1e-4


def test_catalogue_lookup():
    law = co.asymptotic_law("U1", "none", "bulk")
    assert law.exponent == -0.5
    assert np.isclose(law.predict(P(D=2.0, t=3.0)), 1 / math.sqrt(4 * math.pi * 6.0))
    law = co.asymptotic_law("dipole", "full_breaking", "late")
    assert law.exponent == -1.25
    with pytest.raises(UnknownRegime):
        co.asymptotic_law("dipole", "none", "late")


def test_diffusive_catalogue_entries_within_five_percent():
    rep = co.validate_catalogue(10.0)
    for key, row in rep.items():
        if key[0] == "U1":
            assert row["rel_dev"] < 0.05, key
