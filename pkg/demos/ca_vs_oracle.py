"""Stochastic automaton against the exact Markov chain on a tiny t-Jz chain.

The impurity on the last site resamples its state, so spins can now flip;
watch the first-site autocorrelation lose its frozen plateau.
"""
import numpy as np

from relaxkit import automaton as ca

L = 5
for spec in (None, ca.ImpuritySpec("state_flip", (L,))):
    gs = ca.build_gate_set("TJz", L, spec)
    times = np.array([0, 1, 3, 10, 30, 100, 300])
    est = ca.estimate_autocorrelation(gs, [1], int(times[-1]), 100_000, seed=11, times=times)[0]
    orc = ca.markov_oracle(gs, [1], int(times[-1]), times=times)[0]
    print("impurity:", spec)
    for t, e, s, o in zip(times, est.values, est.std_errors, orc.values):
        print(f"  t={t:4d}  CA {e:.4f} +- {s:.4f}   exact {o:.4f}")
    print("  Krylov subspaces:", ca.enumerate_krylov(gs).subspace_count)
