"""Prethermal plateau of the edge spin in the t-Jz chain with an impurity at site L.

The first particle's spin is conserved by the bulk; the impurity can only
reach it through an exponentially small amplitude, so the edge
autocorrelation sits on a plateau for a time ~ 3^L.
"""
import numpy as np

from relaxkit import superham as sh

for L in (6, 10, 14):
    lam = sh.build_effective_hk(L, 1).eigh()[0][0]
    c = sh.effective_correlation_tjz(L, 1, [0.0, 100.0, 0.5 / lam, 5 / lam])
    print(f"L={L:2d}  C(0)={c.values[0]:.4f}  plateau={c.values[1]:.4f}  "
          f"C(0.5/lam)={c.values[2]:.4f}  C(5/lam)={c.values[3]:.2e}  1/lam={1 / lam:.3e}  "
          f"variational bound {float(sh.sliom_variational_energy('tJz', L, 1)):.3e}")

print("\nexact gaps against the SLIOM bound 3/(3^L-1):")
for L in range(4, 9):
    H = sh.build_super_hamiltonian("tJz", L, ("state_flip", (L,)))
    gap = sh.low_spectrum(H, 2).energies[1]
    print(f"  L={L}  gap {gap:.3e}  bound {3 / (3 ** L - 1):.3e}")

print("\ntwo impurities, one at each end: gap of the SLIOM hopping model")
Ls = [100, 200, 400, 800]
gaps = [sh.two_impurity_effective(L)[1] for L in Ls]
print("  exponent", np.polyfit(np.log(Ls), np.log(gaps), 1)[0])
