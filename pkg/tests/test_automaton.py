import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaxkit import automaton as ca
from relaxkit.errors import BudgetError, SizeError, SpanError, UnsupportedImpurity


def test_two_site_u1_oracle_is_one_half():
    gs = ca.build_gate_set("U1_half", 2)
    c = ca.markov_oracle(gs, [1], 5)[0]
    assert c.values[0] == 1.0
    assert np.allclose(c.values[1:], 0.5)


@pytest.mark.parametrize("model,L,imp", [
    ("U1_half", 5, None), ("U1_half", 5, ca.ImpuritySpec("flip", (1,))),
    ("Dip_half_W4W5", 6, ca.ImpuritySpec("swap", (1, 2))),
    ("Dip_one_H3H4", 4, ca.ImpuritySpec("state_flip", (4,))),
    ("TJz", 4, ca.ImpuritySpec("state_flip", (4,))),
])
def test_transition_matrix_symmetric_and_stochastic(model, L, imp):
    T = ca.transition_matrix(ca.build_gate_set(model, L, imp)).toarray()
    assert np.allclose(T, T.T)
    assert np.allclose(T.sum(axis=1), 1.0)
    assert np.all(T >= 0)


def test_tjz_krylov_small():
    assert ca.enumerate_krylov(ca.build_gate_set("TJz", 3)).subspace_count == 15


def test_krylov_histogram_sums_to_dimension():
    rep = ca.enumerate_krylov(ca.build_gate_set("Dip_one_H3", 6))
    assert sum(size * n for size, n in rep.size_histogram.items()) == 3 ** 6


@pytest.mark.parametrize("model,L,kind,sites", [
    ("U1_half", 6, "flip", (1,)), ("Dip_one_H3", 6, "state_flip", (6,)),
    ("TJz", 5, "state_flip", (3,)), ("Dip_half_W4W5", 7, "flip", (1, 2, 3)),
])
def test_impurity_never_increases_krylov_count(model, L, kind, sites):
    a = ca.enumerate_krylov(ca.build_gate_set(model, L)).subspace_count
    b = ca.enumerate_krylov(ca.build_gate_set(model, L, ca.ImpuritySpec(kind, sites))).subspace_count
    assert b <= a


def test_fully_breaking_u1_impurity_connects_everything():
    gs = ca.build_gate_set("U1_half", 6, ca.ImpuritySpec("flip", (3,)))
    assert ca.enumerate_krylov(gs).subspace_count == 1


def test_errors():
    with pytest.raises(SpanError):
        ca.build_gate_set("Dip_half_W4W5", 4)
    with pytest.raises(UnsupportedImpurity):
        ca.build_gate_set("TJz", 4, ca.ImpuritySpec("swap", (1, 2)))
    with pytest.raises(UnsupportedImpurity):
        ca.build_gate_set("U1_half", 4, ca.ImpuritySpec("flip", (7,)))
    with pytest.raises(BudgetError):
        ca.estimate_autocorrelation(ca.build_gate_set("U1_half", 10), [1], 100, 10, 0, budget=50)
    with pytest.raises(SizeError):
        ca.enumerate_krylov(ca.build_gate_set("TJz", 14))


def test_estimate_independent_of_workers():
    gs = ca.build_gate_set("Dip_one_H3", 5, ca.ImpuritySpec("state_flip", (4, 5)))
    a = ca.estimate_autocorrelation(gs, [1, 3], 30, 3000, seed=9, workers=1, chunk=700)
    b = ca.estimate_autocorrelation(gs, [1, 3], 30, 3000, seed=9, workers=3, chunk=700)
    c = ca.estimate_autocorrelation(gs, [1, 3], 30, 3000, seed=9, workers=1, chunk=3000)
    for x, y, z in zip(a, b, c):
        assert np.array_equal(x.values, y.values) and np.array_equal(x.values, z.values)


def test_estimate_matches_oracle_small():
    gs = ca.build_gate_set("U1_half", 4, ca.ImpuritySpec("flip", (1,)))
    est = ca.estimate_autocorrelation(gs, [1, 2, 3, 4], 40, 40000, seed=3)
    orc = ca.markov_oracle(gs, [1, 2, 3, 4], 40)
    for e, o in zip(est, orc):
        err = np.where(e.std_errors > 0, e.std_errors, 1.0)
        assert np.mean(np.abs(e.values - o.values) / err <= 4) >= 0.97


def test_magnetization_relaxes_with_flip_impurity():
    gs = ca.build_gate_set("U1_half", 4, ca.ImpuritySpec("flip", (1,)))
    init = ca.SpinConfiguration((1, 1, 1, 1), 2)
    s = ca.estimate_magnetization(gs, init, 400, 4000, seed=1, times=[0, 400])
    assert s.values[0] == 4
    assert abs(s.values[1]) < 0.3


def _configs(model, L):
    m = ca.LOCAL_DIM[model]
    return st.lists(st.integers(0, m - 1), min_size=L, max_size=L)


@settings(max_examples=60, deadline=None)
@given(data=st.data(), model=st.sampled_from(ca.MODELS), seed=st.integers(0, 2 ** 32), t=st.integers(0, 1000))
def test_bulk_step_conserves_charge(data, model, seed, t):
    L = 7
    states = data.draw(_configs(model, L))
    gs = ca.build_gate_set(model, L)
    cfg = ca.SpinConfiguration(tuple(states), gs.m)
    out = ca.step(cfg, gs, (seed, 0, t))
    q = gs.charge
    before, after = q[list(cfg.states)], q[list(out.states)]
    assert before.sum() == after.sum()
    if model.startswith("Dip"):
        pos = np.arange(L)
        assert (pos * before).sum() == (pos * after).sum()


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 40), idx=st.integers(0, 10 ** 6), t=st.integers(0, 10 ** 6))
def test_step_is_pure_function_of_counter(seed, idx, t):
    gs = ca.build_gate_set("TJz", 5, ca.ImpuritySpec("state_flip", (5,)))
    cfg = ca.SpinConfiguration((1, 0, 2, 1, 0), 3)
    assert ca.step(cfg, gs, (seed, idx, t)) == ca.step(cfg, gs, (seed, idx, t))
