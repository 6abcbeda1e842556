import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaxkit import automaton as ca
from relaxkit import hydro
from relaxkit import superham as sh
from relaxkit.errors import OverlapError, SizeError, UnsupportedImpurity

CA_NAME = {"U1": "U1_half", "dip_half": "Dip_half_W4W5", "tJz": "TJz", "H3": "Dip_one_H3", "H3H4": "Dip_one_H3H4"}


@pytest.mark.parametrize("model,L", [("U1", 5), ("dip_half", 7), ("tJz", 4), ("H3", 5), ("H3H4", 5)])
def test_kernel_equals_krylov_count(model, L):
    k = sh.kernel_dimension(sh.build_super_hamiltonian(model, L))
    n = ca.enumerate_krylov(ca.build_gate_set(CA_NAME[model], L)).subspace_count
    assert k == n


@pytest.mark.parametrize("model,L,imp", [("U1", 5, ("flip", (2,))), ("dip_half", 8, ("flip", (1, 2, 3))),
                                         ("H3H4", 5, ("state_flip", (4, 5)))])
def test_fully_breaking_impurity_leaves_identity(model, L, imp):
    H = sh.build_super_hamiltonian(model, L, imp)
    assert sh.kernel_dimension(H) == 1
    one = sh.identity_vector(model, L)
    assert np.abs(H.matrix @ one).max() < 1e-12


def test_operator_symmetric_psd():
    H = sh.build_super_hamiltonian("tJz", 4, ("state_flip", (2,)), 0.7).dense()
    assert np.allclose(H, H.T)
    assert np.linalg.eigvalsh(H).min() > -1e-12


@pytest.mark.parametrize("imp,hyd", [(None, None), (("swap", (1, 2)), ("charge_preserving", 1.0)),
                                     (("flip", (1, 2, 3)), ("full_breaking", 1.0))])
def test_single_flip_projection_is_dipole_hydro_operator(imp, hyd):
    L = 8
    H = sh.build_super_hamiltonian("dip_half", L, imp, 1.0)
    S = np.stack([sh.site_vector("dip_half", L, j) for j in range(1, L + 1)], axis=1)
    proj = S.T @ (H.matrix @ S) / 2 ** L
    assert np.allclose(proj, hydro.build_dipole(L, impurity=hyd).to_dense(), atol=1e-12)


def test_single_flip_projection_is_u1_hydro_operator():
    L = 7
    H = sh.build_super_hamiltonian("U1", L, ("flip", (1,)), 1.0)
    S = np.stack([sh.site_vector("U1", L, j) for j in range(1, L + 1)], axis=1)
    assert np.allclose(S.T @ (H.matrix @ S) / 2 ** L, hydro.build_u1(L, impurity=(1, 1.0)).to_dense())


def test_unsupported_impurity_and_size():
    with pytest.raises(UnsupportedImpurity):
        sh.build_super_hamiltonian("tJz", 4, ("swap", (1, 2)))
    with pytest.raises(SizeError):
        sh.build_super_hamiltonian("tJz", 12)


def test_low_spectrum_iterative_matches_dense():
    H = sh.build_super_hamiltonian("tJz", 8, ("state_flip", (8,)))
    it = sh.low_spectrum(H, 3)
    assert np.all(it.residuals < 1e-8 * H.norm())
    small = sh.build_super_hamiltonian("tJz", 5, ("state_flip", (5,)))
    dense = np.linalg.eigvalsh(small.dense())[:3]
    assert np.allclose(sh.low_spectrum(small, 3).energies, dense)


def test_variational_closed_forms():
    assert sh.sliom_variational_energy("tJz", 4, 1) == Fraction(3, 80)
    assert sh.sliom_variational_energy("tJz", 6, 1) == Fraction(3, 3 ** 6 - 1)
    assert sh.sliom_variational_energy("H3", 6, "left") == Fraction(14, 3 ** 6 - 1)
    assert sh.sliom_variational_energy("H3", 9, ("blockade", 3)) == Fraction(8, 3 ** 5 - 1)
    assert sh.sliom_decay_bound("tJz", 5, 1) == Fraction(3, 3 ** 5 - 1)


@pytest.mark.parametrize("L,k,js", [(5, 1, 5), (5, 2, 5), (5, 3, 5), (5, 1, 3), (6, 1, 2), (6, 4, 6)])
def test_tjz_variational_matches_explicit_vector(L, k, js):
    exact = float(sh.sliom_variational_energy("tJz", L, k, js))
    vec = sh.q_vector(L, k)
    assert np.isclose(sh.trial_energy_explicit("tJz", L, vec, ("state_flip", (js,))), exact, rtol=1e-12)


@pytest.mark.parametrize("L", [4, 5, 6])
def test_h3_trial_vectors_are_zero_modes(L):
    P = sh.build_super_hamiltonian("H3", L)
    assert np.abs(P.matrix @ sh.h3_left_vector(L)).max() == 0
    if L >= 5:
        assert np.abs(P.matrix @ sh.h3_blockade_vector(L, 2)).max() == 0
    val = sh.trial_energy_explicit("H3", L, sh.h3_left_vector(L), ("state_flip", (L - 1, L)))
    assert np.isclose(val, 14 / (3 ** L - 1))


def test_blockade_explicit():
    L = 7
    for j0 in (2, 3, 4):
        v = sh.h3_blockade_vector(L, j0)
        e = sh.trial_energy_explicit("H3", L, v, ("state_flip", (L - 1, L)))
        assert np.isclose(e, float(sh.sliom_variational_energy("H3", L, ("blockade", j0))))


def test_variational_dominance():
    for L in (4, 5, 6):
        gap = sh.low_spectrum(sh.build_super_hamiltonian("tJz", L, ("state_flip", (L,))), 2).energies[1]
        for k in range(1, L + 1):
            assert gap <= float(sh.sliom_variational_energy("tJz", L, k)) + 1e-12


def test_approximate_energy_tracks_exact():
    L, k = 300, 100
    exact = float(sh.sliom_variational_energy("tJz", L, k))
    assert abs(sh.sliom_variational_energy_approx(L, k) / exact - 1) < 0.05


def test_q_vectors_are_kernel_vectors():
    L = 5
    P = sh.build_super_hamiltonian("tJz", L)
    for k in range(1, L + 1):
        q = sh.q_vector(L, k)
        assert np.abs(P.matrix @ q).max() < 1e-12
        assert np.isclose(q @ q, sum(2 ** l * math.comb(L, l) for l in range(k, L + 1)))


def test_hk_small_case():
    assert np.allclose(sh.build_effective_hk(2, 1).dense(), [[1.25, -0.5], [-0.5, 0.5]])


def test_parent_h0_small():
    op, ref = sh.parent_h0(4)
    assert np.allclose(np.sort(op.eigh()[0]), [0, 3 / 8, 3 / 4, 9 / 8, 3 / 2])
    assert np.allclose(ref, [0, 3 / 8, 3 / 4, 9 / 8, 3 / 2])


@pytest.mark.parametrize("L", [4, 5, 6])
def test_hk_matches_composite_projection(L):
    basis = np.stack([sh.kl_vector(L, 1, l) for l in range(1, L + 1)], axis=1)
    _, V = sh.build_super_hamiltonian("tJz", L, ("state_flip", (L,)), 1.0, parts=True)
    assert np.allclose(basis.T @ basis, np.eye(L))
    assert np.allclose(basis.T @ (V.matrix @ basis), sh.build_effective_hk(L, 1).dense())


@pytest.mark.parametrize("L,j", [(5, 1), (5, 3), (6, 4)])
def test_overlap_weights_against_composite(L, j):
    S = sh.site_vector("tJz", L, j)
    for k in range(1, j + 1):
        direct = [S @ sh.kl_vector(L, k, l) / 3 ** (L / 2) for l in range(k, L + 1)]
        assert np.allclose(direct, sh.overlap_weights(L, j, k))


def test_effective_correlation_start_and_plateau():
    L = 16
    c = sh.effective_correlation_tjz(L, 1, [0.0])
    assert np.isclose(c.values[0], 2 * (2 * L + 1) / (9 * L))
    assert np.isclose(sh.mazur_single_flip(L, 1), 2 * (2 * L + 1) / (9 * L))


def test_overlap_error_guard(monkeypatch):
    monkeypatch.setattr(sh, "overlap_weights", lambda L, j, k: np.zeros(L - k + 1))
    with pytest.raises(OverlapError):
        sh.effective_correlation_tjz(6, 1, [0.0])


@settings(max_examples=25, deadline=None)
@given(L=st.integers(2, 40), k=st.integers(1, 40))
def test_hk_is_psd(L, k):
    k = min(k, L)
    E, _ = sh.build_effective_hk(L, k).eigh()
    assert E.min() > -1e-12


def test_graph_cut_and_projection():
    rep = sh.graph_laplacian_tjz(5)
    assert rep.cut_boundary == 1 and rep.cut_volume == (3 ** 5 - 1) / 2
    assert np.isclose(rep.cheeger_bound, 4 / (3 ** 5 - 1))
    lap = np.linalg.eigvalsh(rep.laplacian.toarray())[1]
    assert np.isclose(lap, np.linalg.eigvalsh(sh.projected_impurity_tjz(5))[1], atol=1e-10)
    with pytest.raises(SizeError):
        sh.graph_laplacian_tjz(14)


def test_two_impurity_sliom_elements():
    op, gap = sh.two_impurity_effective(90)
    assert np.isclose(op.diagonal[0], 4 / 3, atol=1e-3)
    assert np.allclose(op.diagonal[1:20], 2 / 3, atol=1e-3)
    assert np.allclose(op.offdiagonal[:40], -1 / 3, atol=1e-3)
    assert gap > 0


def test_full_eff_bounds_exact_gap():
    for L in (3, 4, 5):
        H = sh.build_super_hamiltonian("tJz", L, ("state_flip", (1, L)))
        exact = sh.low_spectrum(H, 2).energies[1]
        assert exact <= sh.two_impurity_effective(L, "full_eff")[1] + 1e-12


def test_naive_splitting():
    e = sh.naive_u1_splitting(10, 1.0)
    assert e[0] == 0 and np.isclose(e[1], 0.4)
    true_gap = hydro.eigh(hydro.build_u1(200, impurity=(1, 1.0))).energies[0]
    assert true_gap < 0.1 * sh.naive_u1_splitting(200)[1]
