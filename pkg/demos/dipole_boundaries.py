"""Dipole-conserving subdiffusion next to three kinds of boundary.

Compares the lowest lattice modes of the hydro operator with the continuum
biharmonic modes and prints the long-time decay exponent near the edge.
"""
import numpy as np

from relaxkit import continuum as co
from relaxkit import hydro
from relaxkit.series import log_time_grid

L = 600
cases = [("symmetric", None, 2), ("charge_preserving", ("charge_preserving", 1.0), 1),
         ("fully_breaking", ("full_breaking", 1.0), 0)]
times = log_time_grid(0.1, 1e9)
for kind, imp, n_zero in cases:
    H = hydro.build_dipole(L, impurity=imp)
    d = hydro.eigh(H)
    fam = co.biharmonic_modes(L, kind, 3)
    x = np.arange(L) + 0.5
    ov = []
    for n in range(3):
        phi = fam.evaluate(n, x)
        ov.append((phi / np.linalg.norm(phi)) @ d.orbitals[:, n_zero + n])
    c = hydro.spectral_correlation(H, [4], times, d)[0]
    fit = hydro.fit_power_law(c, (1e5, 1e7))
    print(f"{kind:18s} zero modes {n_zero}  mode overlaps {np.round(np.square(ov), 5)}  "
          f"C_4 ~ t^{fit.exponent:+.3f}")
