"""Diffusion with a local charge sink at the chain edge.

Sites near the impurity first see ordinary t^-1/2 diffusion; once the
diffusion length passes their distance to the sink the decay steepens to
t^-3/2. The crossover time grows like j^2.
"""
from relaxkit import continuum as co
from relaxkit import hydro
from relaxkit.series import log_time_grid

L = 10000
H = hydro.build_u1(L, "OBC", (1, 1.0))
sites = [16, 32, 64]
times = log_time_grid(0.1, 1e6)
series = hydro.spectral_correlation(H, sites, times)
D = 8.0
for j, s in zip(sites, series):
    early = hydro.fit_power_law(s, (1.0, 0.2 * j * j / D))
    late = hydro.fit_power_law(s, (50 * j * j / D, 1e6))
    print(f"j={j:3d}  early {early.exponent:+.3f}  late {late.exponent:+.3f}  "
          f"t_tran {hydro.crossover_time(early, late):9.1f}")

law = co.asymptotic_law("U1", "boundary", "late")
p = co.ContinuumParams(D=1.0, g=1.0, x=1.0, x0=2.0, t=1e5)
print("continuum late law:", law.formula)
print(f"  predicted {law.predict(p):.4e}  kernel {law.exact(p):.4e}")
