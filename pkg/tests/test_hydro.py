import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaxkit import hydro
from relaxkit.errors import NonPositiveValue, SpanError, WindowError
from relaxkit.series import CorrelationSeries, log_time_grid


@pytest.mark.parametrize("L", [3, 8, 17])
def test_u1_pbc_closed_form(L):
    E = hydro.eigh(hydro.build_u1(L, "PBC")).energies
    ref = np.sort(16 * (1 - np.cos(2 * np.pi * np.arange(L) / L)))
    assert np.allclose(E, ref, atol=1e-11)


def test_u1_zero_modes():
    assert hydro.zero_mode_count(hydro.build_u1(30)) == 1
    assert hydro.zero_mode_count(hydro.build_u1(30, impurity=(1, 1.0))) == 0


def test_dipole_zero_modes_per_boundary():
    L = 40
    assert hydro.zero_mode_count(hydro.build_dipole(L)) == 2
    assert hydro.zero_mode_count(hydro.build_dipole(L, impurity=("charge_preserving", 1.0))) == 1
    assert hydro.zero_mode_count(hydro.build_dipole(L, impurity=("full_breaking", 1.0))) == 0


def test_dipole_conserves_charge_and_moment():
    H = hydro.build_dipole(25).to_dense()
    x = np.arange(25.0)
    assert np.allclose(H @ np.ones(25), 0)
    assert np.allclose(H @ x, 0)


def test_banded_matvec_matches_dense(rng):
    H = hydro.build_dipole(20, impurity=("full_breaking", 0.3))
    v = rng.normal(size=(20, 3))
    assert np.allclose(H.matvec(v), H.to_dense() @ v)


def test_eigh_rows_matches_full():
    H = hydro.build_u1(50, impurity=(1, 0.5))
    full = hydro.eigh(H)
    part = hydro.eigh_rows(H, [3, 7])
    assert np.allclose(np.abs(part.row(7)), np.abs(full.row(7)))


def test_spectral_correlation_initial_value_and_mazur():
    H = hydro.build_u1(12)
    s = hydro.spectral_correlation(H, [1, (3, 5)], [0.0, 1e6])
    assert np.isclose(s[0].values[0], 1.0)
    assert np.isclose(s[1].values[0], 0.0)
    assert np.isclose(s[0].values[1], 1 / 12)


def test_span_error():
    with pytest.raises(SpanError):
        hydro.build_u1(1)
    with pytest.raises(SpanError):
        hydro.build_dipole(5)


def test_fit_power_law_exact():
    t = log_time_grid(1, 1e4)
    s = CorrelationSeries(t, 3.0 * t ** -0.75, np.zeros_like(t))
    f = hydro.fit_power_law(s, (1, 1e4))
    assert abs(f.exponent + 0.75) < 1e-12 and abs(f.amplitude - 3) < 1e-10
    with pytest.raises(WindowError):
        hydro.fit_power_law(s, (10, 11))
    neg = CorrelationSeries(t, -s.values, np.zeros_like(t))
    with pytest.raises(NonPositiveValue):
        hydro.fit_power_law(neg, (1, 1e4))


def test_crossover_time_of_two_laws():
    t = log_time_grid(1, 1e4)
    a = hydro.fit_power_law(CorrelationSeries(t, t ** -0.5, 0 * t), (1, 1e4))
    b = hydro.fit_power_law(CorrelationSeries(t, 100 * t ** -1.5, 0 * t), (1, 1e4))
    assert np.isclose(hydro.crossover_time(a, b), 100.0)


def test_magnetization_decays_with_impurity():
    H = hydro.build_u1(20, impurity=(1, 1.0))
    m = hydro.magnetization_from_modes(H, [0.0, 1e5])
    assert np.isclose(m.values[0], 20.0) and m.values[1] < 1e-3


@settings(max_examples=40, deadline=None)
@given(L=st.integers(8, 30), g=st.floats(0, 5), kind=st.sampled_from(["charge_preserving", "full_breaking"]))
def test_operators_positive_semidefinite(L, g, kind):
    for H in (hydro.build_u1(L, impurity=(1, g)), hydro.build_dipole(L, impurity=(kind, g))):
        D = H.to_dense()
        assert np.allclose(D, D.T)
        assert np.linalg.eigvalsh(D).min() > -1e-10
