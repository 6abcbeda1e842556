"""Continuum solutions for diffusion and biharmonic subdiffusion near impurities.

Conventions: D is the (sub)diffusion constant, g the impurity strength and
ell = D / g the impurity length. Diffusive solutions use erfcx for the
exp(z^2) erfc(z) factor so late times never overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, QuadratureFailure, RootFindFailure, UnknownRegime


@dataclass(frozen=True)
class ContinuumParams:
    D: float = 1.0
    g: float = 0.0
    x: float = 0.0
    x0: float = 0.0
    xs: float = 0.0
    t: float = 1.0

    def __post_init__(self):
        if not self.D > 0:
            raise DomainError("D must be positive")
        if self.g < 0:
            raise DomainError("g must be non-negative")
        if self.t < 0:
            raise DomainError("t must be non-negative")

    @property
    def ell(self):
        """Impurity length D/g; inf without an impurity, 0 for a perfect absorber."""
        if self.g == 0:
            return math.inf
        return self.D / self.g


def _check_time(t, x, x0):
    if t < 0:
        raise DomainError("t must be non-negative")
    if t == 0:
        if x == x0:
            raise DomainError("t = 0 with x = x0 is a delta function")
        raise DomainError("t = 0 with x != x0: the kernel vanishes identically")


def gaussian(dx, D, t):
    return math.exp(-dx * dx / (4 * D * t)) / math.sqrt(4 * math.pi * D * t)


def diffusion_with_sink(p: ContinuumParams):
    """Infinite line with a delta sink of strength g at xs, charge started at x0."""
    D, t, g = p.D, p.t, p.g
    _check_time(t, p.x, p.x0)
    G = gaussian(p.x - p.x0, D, t)
    if g == 0:
        return G
    a = abs(p.x - p.xs) + abs(p.xs - p.x0)
    if math.isinf(g):
        return max(G - gaussian(a, D, t), 0.0)
    ell = D / g
    s = math.sqrt(D * t)
    z = s / (2 * ell) + a / (2 * s)
    # the correction term is exp(-a^2/4Dt) exp(z^2) erfc(z) / (4 ell)
    corr = math.exp(-a * a / (4 * D * t)) * special.erfcx(z) / (4 * ell)
    return max(G - corr, 0.0)


def diffusion_boundary_impurity(p: ContinuumParams):
    """Half line x > 0 with the impurity on the boundary, D dC/dx = g C at x = 0."""
    D, t, g, x, x0 = p.D, p.t, p.g, p.x, p.x0
    if x <= 0 or x0 <= 0:
        raise DomainError("positions must be inside the half line (x, x0 > 0)")
    _check_time(t, x, x0)
    pref = 1.0 / math.sqrt(math.pi * D * t)
    u = x * x0 / (2 * D * t)
    # e^{-(x^2+x0^2)/4Dt} cosh(u), written to avoid overflow for large u
    e_plus = math.exp(-(x - x0) ** 2 / (4 * D * t))
    e_minus = math.exp(-(x + x0) ** 2 / (4 * D * t))
    if math.isinf(g):
        return pref * 0.5 * (e_plus - e_minus)
    refl = pref * 0.5 * (e_plus + e_minus)
    if g == 0:
        return refl
    ell = D / g
    s = math.sqrt(D * t)
    w = s / ell + (x + x0) / (2 * s)
    val = refl - e_minus * special.erfcx(w) / ell
    return max(val, 0.0) if u >= 0 else val


def remaining_charge(x0, t, D=1.0):
    """Charge left on the half line with an absorbing boundary."""
    if x0 <= 0 or t <= 0 or D <= 0:
        raise DomainError("need x0 > 0, t > 0, D > 0")
    return float(special.erf(x0 / (2 * math.sqrt(D * t))))


def rg_dimension(d):
    """Tree-level flow coefficient of a point impurity in d dimensions."""
    if d not in (1, 2, 3):
        raise DomainError("d must be 1, 2 or 3")
    c = 2 - d
    kind = "relevant" if c > 0 else ("marginal" if c == 0 else "irrelevant")
    return c, kind


# ---------------------------------------------------------------- subdiffusion

GEOMETRIES = ("infinite", "semi_symmetric", "semi_charge_preserving", "semi_fully_breaking")
_UMAX = 4.6      # exp(-u^4) < 1e-194 beyond this


def _semi_mode(kind, y):
    """Half-line mode shapes at argument y = k x (without normalization)."""
    if kind == "semi_symmetric":
        return np.cos(y) - np.sin(y) + np.exp(-y)
    if kind == "semi_fully_breaking":
        return np.cos(y) - np.sin(y) - np.exp(-y)
    return np.cos(y)


def k_integral(fn, D, t, length=0.0, target=1e-8):
    """int_0^inf dk exp(-D k^4 t) fn(k), integrated in u = k (Dt)^{1/4}.

    `length` is the largest spatial scale inside fn; panels are refined so each
    holds at most about one oscillation. Returns the integral; raises
    QuadratureFailure if the estimated error exceeds target / (Dt)^{1/4}.
    """
    if t <= 0 or D <= 0:
        raise DomainError("need t > 0 and D > 0")
    s = (D * t) ** 0.25
    omega = length / s
    n = max(8, int(math.ceil(_UMAX * omega / math.pi)) + 1)
    edges = np.linspace(0.0, _UMAX, n + 1)
    total, err = 0.0, 0.0
    f = lambda u: math.exp(-u ** 4) * fn(u / s)
    for a, b in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(f, a, b, epsabs=target * 1e-2 / n, epsrel=1e-12, limit=200)
        total += v
        err += e
    if err > target:
        raise QuadratureFailure(f"quadrature error {err:.3e} above target {target:.1e}", achieved=err)
    return total / s


def subdiffusion_kernel(p: ContinuumParams, geometry="infinite"):
    """C(x, x0; t) for dC/dt = -D d^4 C in the given geometry."""
    D, t, x, x0 = p.D, p.t, p.x, p.x0
    if geometry not in GEOMETRIES:
        raise DomainError(f"unknown geometry {geometry!r}")
    if geometry != "infinite" and (x < 0 or x0 < 0):
        raise DomainError("half-line geometries need x, x0 >= 0")
    _check_time(t, x, x0)
    if geometry == "infinite":
        dx = abs(x - x0)
        return k_integral(lambda k: math.cos(k * dx) / math.pi, D, t, dx)
    if geometry == "semi_charge_preserving":
        fn = lambda k: 2 / math.pi * math.cos(k * x) * math.cos(k * x0)
    else:
        fn = lambda k: _semi_mode(geometry, k * x) * _semi_mode(geometry, k * x0) / math.pi
    return k_integral(fn, D, t, max(x, x0))


def subdiffusion_total_charge(x0, t, D=1.0):
    """int_0^inf C dx on the half line with a fully breaking boundary."""
    # int_0^inf phi_k dx = -2 / (k sqrt(pi)) in the Abel sense
    fn = lambda k: -2 / math.pi * _semi_mode("semi_fully_breaking", k * x0) / k if k > 0 else 0.0
    return k_integral(fn, D, t, x0)


def subdiffusion_dipole_moment(x0, t, D=1.0, geometry="semi_fully_breaking"):
    """int_0^inf x C dx on the half line.

    For the charge-preserving boundary this is x0 plus the accumulated leak,
    for the fully breaking one it decays to zero.
    """
    if geometry == "semi_fully_breaking":
        # int_0^inf x phi_k dx = -2 / (k^2 sqrt(pi))
        fn = lambda k: -2 / math.pi * _semi_mode(geometry, k * x0) / k ** 2 if k > 0 else 0.0
        return k_integral(fn, D, t, x0)
    if geometry == "semi_charge_preserving":
        # x0 + (2/pi) int dk cos(k x0) (1 - exp(-D k^4 t)) / k^2, in u = k (Dt)^{1/4}
        s = (D * t) ** 0.25
        a = x0 / s
        fn = lambda u: 2 / math.pi * math.cos(a * u) * (-math.expm1(-u ** 4)) / u ** 2 if u > 0 else 0.0
        u0 = 50.0
        n = max(8, int(math.ceil(u0 * a / math.pi)) + 1)
        edges = np.linspace(0.0, u0, n + 1)
        head = sum(integrate.quad(fn, lo, hi, epsabs=1e-13, limit=200)[0]
                   for lo, hi in zip(edges[:-1], edges[1:]))
        return x0 + s * (head + 2 / math.pi * _cos_tail(a, u0))
    raise DomainError(f"dipole moment not defined for {geometry!r}")


def _cos_tail(a, u0):
    """int_{u0}^inf cos(a u) / u^2 du (the expm1 factor is 1 to machine precision there)."""
    if a == 0:
        return 1.0 / u0
    # integrate by parts: cos(au)/u0 - a int sin(au)/u du
    si, _ = special.sici(a * u0)
    return math.cos(a * u0) / u0 - a * (math.pi / 2 - si)


def dipole_leak_rate(x0, t, D=1.0):
    """d/dt int x C dx for the charge-preserving boundary, = -D C''(0)."""
    return D * k_integral(lambda k: 2 / math.pi * k * k * math.cos(k * x0), D, t, x0)


# ---------------------------------------------------------------- finite modes

BC_KINDS = ("symmetric", "charge_preserving", "fully_breaking")


def _sech(q):
    e = math.exp(-abs(q))
    return 2 * e / (1 + e * e)


def _condition(kind):
    # scaled by 1/cosh so values stay O(1) for large kL
    if kind == "symmetric":      # cos cosh = 1
        return lambda q: math.cos(q) - _sech(q)
    if kind == "fully_breaking":  # cos cosh = -1
        return lambda q: math.cos(q) + _sech(q)
    # phi' = phi''' = 0 at 0 with a free end at L: tan q + tanh q = 0
    return lambda q: math.sin(q) + math.cos(q) * math.tanh(q)


def _coefficients(kind, q):
    """(gamma, A, B) with phi(y) = cos y + gamma sin y + A e^{y-q} + B e^{-y}, q = kL."""
    e = math.exp(-q)
    c, s = math.cos(q), math.sin(q)
    if kind == "symmetric":
        # cos + cosh + gamma (sin + sinh), gamma = (cos q - cosh q) / (sinh q - sin q)
        den = 1 - e * e - 2 * s * e
        gm = (2 * c * e - 1 - e * e) / den
        A = (c - s - e) / den
        B = 0.5 * (1 - gm)
    elif kind == "fully_breaking":
        # cos - cosh + gamma (sin - sinh), gamma fixed by phi''(L) = 0
        den = 1 - e * e + 2 * s * e
        gm = -(2 * c * e + 1 + e * e) / den
        A = -(s - c - e) / den
        B = -0.5 * (1 - gm)
    else:
        # cos y + (cos q / cosh q) cosh y
        gm = 0.0
        A = c / (1 + e * e)
        B = c * e / (1 + e * e)
    return gm, A, B


@dataclass(frozen=True)
class ModeFamily:
    bc_kind: str
    L: float
    roots: np.ndarray          # k_n
    gammas: np.ndarray
    norms: np.ndarray          # N_k so that int_0^L phi^2 = 1
    zero_modes: int = 0
    meta: dict = field(default_factory=dict)

    def shape(self, n, x):
        """Unnormalized mode n (0-based among nonzero modes) at positions x."""
        k = self.roots[n]
        q = k * self.L
        gm, A, B = _coefficients(self.bc_kind, q)
        y = k * np.asarray(x, dtype=float)
        return np.cos(y) + gm * np.sin(y) + A * np.exp(y - q) + B * np.exp(-y)

    def evaluate(self, n, x):
        return self.norms[n] * self.shape(n, x)

    def zero_mode_basis(self, x):
        """Orthonormal zero modes on [0, L] evaluated at x."""
        x = np.asarray(x, dtype=float)
        out = []
        if self.zero_modes >= 1:
            out.append(np.full_like(x, 1 / math.sqrt(self.L)))
        if self.zero_modes >= 2:
            out.append((x - self.L / 2) * math.sqrt(12 / self.L ** 3))
        return out

    def energies(self, D=1.0):
        return D * self.roots ** 4


def _bracket(kind, n):
    if kind == "symmetric":
        return n * math.pi + 0.25, (n + 1) * math.pi
    if kind == "fully_breaking":
        return (n - 1) * math.pi + 0.1, n * math.pi
    return (n - 0.75) * math.pi + 0.05, (n - 0.25) * math.pi + 0.5


def biharmonic_modes(L, bc_kind, n_modes):
    """Lowest nonzero eigenmodes of d^4/dx^4 on [0, L] for the boundary family.

    symmetric: phi'' = phi''' = 0 at both ends, cos kL cosh kL = 1.
    charge_preserving: phi' = phi''' = 0 at 0, free at L, tan kL + tanh kL = 0.
    fully_breaking: phi = phi' = 0 at 0, free at L, cos kL cosh kL = -1.
    """
    if bc_kind not in BC_KINDS:
        raise DomainError(f"unknown boundary family {bc_kind!r}")
    if L <= 0 or n_modes < 1:
        raise DomainError("need L > 0 and n_modes >= 1")
    f = _condition(bc_kind)
    roots = []
    for n in range(1, n_modes + 1):
        lo, hi = _bracket(bc_kind, n)
        if f(lo) * f(hi) > 0:
            raise RootFindFailure(f"no sign change for mode {n}", bracket=(lo / L, hi / L))
        roots.append(optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200))
    q = np.array(roots)
    k = q / L
    gammas = np.array([_coefficients(bc_kind, qq)[0] for qq in q])
    zero = {"symmetric": 2, "charge_preserving": 1, "fully_breaking": 0}[bc_kind]
    fam = ModeFamily(bc_kind, float(L), k, gammas, np.ones(n_modes), zero)
    norms = []
    for n in range(n_modes):
        pts = np.linspace(0, L, n + 3)[1:-1]
        val, _ = integrate.quad(lambda x: float(fam.shape(n, x)) ** 2, 0, L, limit=500,
                                points=pts, epsrel=1e-12)
        norms.append(1 / math.sqrt(val))
    residuals = [f(qq) for qq in q]
    return ModeFamily(bc_kind, float(L), k, gammas, np.array(norms), zero,
                      meta={"residuals": residuals})


def mode_sum_kernel(family: ModeFamily, x, x0, t, D=1.0):
    """Truncated spectral sum over the family's nonzero and zero modes."""
    zx = family.zero_mode_basis(np.array([x]))
    z0 = family.zero_mode_basis(np.array([x0]))
    val = sum(float(a[0] * b[0]) for a, b in zip(zx, z0))
    for n in range(len(family.roots)):
        e = math.exp(-D * family.roots[n] ** 4 * t)
        val += e * float(family.evaluate(n, x)) * float(family.evaluate(n, x0))
    return val


# ---------------------------------------------------------------- asymptotics

@dataclass(frozen=True)
class AsymptoticLaw:
    key: tuple
    observable: str
    exponent: float
    formula: str
    amplitude: object          # callable(params) -> amplitude A, value ~ A t^exponent
    exact: object              # callable(params) -> kernel evaluation
    regime: object             # callable(params) -> dimensionless regime variable
    regime_name: str
    sample: dict               # params at which the regime variable is 10

    def predict(self, p: ContinuumParams):
        return self.amplitude(p) * p.t ** self.exponent


def _lateU1(p):
    # x x0 only counts when both points sit on the same side of the sink
    same = (p.x - p.xs) * (p.x0 - p.xs) > 0
    xx = (p.x - p.xs) * (p.x0 - p.xs) if same else 0.0
    a = abs(p.x - p.xs) + abs(p.x0 - p.xs)
    return (xx + a * p.ell + 2 * p.ell ** 2) / (math.sqrt(4 * math.pi) * p.D ** 1.5)


def _sink_z(p):
    s = math.sqrt(p.D * p.t)
    a = abs(p.x - p.xs) + abs(p.xs - p.x0)
    return s / (2 * p.ell) + a / (2 * s)


def _boundary_w(p):
    s = math.sqrt(p.D * p.t)
    return s / p.ell + (p.x + p.x0) / (2 * s)


def _rho4(p):
    return (p.D * p.t) ** 0.25 / max(abs(p.x), abs(p.x0), 1e-300)


def _t_for(D, scale, n, target=10.0):
    # time at which (D t)^{1/n} / scale equals target
    return (target * scale) ** n / D


G14, G34, G54 = special.gamma(0.25), special.gamma(0.75), special.gamma(1.25)

CATALOGUE = {}


def _register(law):
    CATALOGUE[law.key] = law


_register(AsymptoticLaw(
    ("U1", "none", "bulk"), "autocorrelation", -0.5, "1/sqrt(4 pi D t)",
    lambda p: 1 / math.sqrt(4 * math.pi * p.D),
    lambda p: diffusion_with_sink(ContinuumParams(p.D, 0.0, p.x, p.x0, p.xs, p.t)),
    lambda p: math.sqrt(p.D * p.t) / max(abs(p.x - p.x0), 1.0), "sqrt(Dt)/|x-x0|",
    dict(D=1.0, g=0.0, x=0.0, x0=1.0, t=100.0)))

_register(AsymptoticLaw(
    ("U1", "bulk_sink", "early"), "autocorrelation", -0.5, "1/sqrt(4 pi D t)",
    lambda p: 1 / math.sqrt(4 * math.pi * p.D),
    diffusion_with_sink, lambda p: abs(p.x0 - p.xs) / math.sqrt(p.D * p.t),
    "|x0-xs|/sqrt(Dt)", dict(D=1.0, g=1.0, x=50.0, x0=50.0, t=25.0)))

_register(AsymptoticLaw(
    ("U1", "bulk_sink", "late"), "correlation", -1.5,
    "[x x0 Theta(x x0) + (|x|+|x0|) ell + 2 ell^2] / (sqrt(4 pi) (D t)^{3/2})",
    _lateU1, diffusion_with_sink, _sink_z, "z",
    dict(D=1.0, g=1.0, x=1.0, x0=1.0, t=1.0e6)))

_register(AsymptoticLaw(
    ("U1", "boundary", "late"), "correlation", -1.5,
    "[x x0 + (x+x0) ell + ell^2] / (sqrt(4 pi) (D t)^{3/2})",
    lambda p: (p.x * p.x0 + (p.x + p.x0) * p.ell + p.ell ** 2) / (math.sqrt(4 * math.pi) * p.D ** 1.5),
    diffusion_boundary_impurity, _boundary_w, "w",
    dict(D=1.0, g=1.0, x=1.0, x0=2.0, t=1.0e4)))

_register(AsymptoticLaw(
    ("U1", "absorbing_boundary", "total_charge"), "total_charge", -0.5, "x0 / sqrt(pi D t)",
    lambda p: p.x0 / math.sqrt(math.pi * p.D),
    lambda p: remaining_charge(p.x0, p.t, p.D), lambda p: math.sqrt(p.D * p.t) / p.x0,
    "sqrt(Dt)/x0", dict(D=1.0, g=math.inf, x=1.0, x0=1.0, t=100.0)))

_register(AsymptoticLaw(
    ("dipole", "none", "bulk"), "autocorrelation", -0.25, "Gamma(1/4) / (4 pi (D t)^{1/4})",
    lambda p: G14 / (4 * math.pi * p.D ** 0.25),
    lambda p: subdiffusion_kernel(p, "infinite"), _rho4, "(Dt)^{1/4}/|x|",
    dict(D=1.0, x=1.0, x0=1.0, t=1.0e4)))

_register(AsymptoticLaw(
    ("dipole", "symmetric_boundary", "edge"), "autocorrelation", -0.25,
    "Gamma(1/4) / (pi (D t)^{1/4})",
    lambda p: G14 / (math.pi * p.D ** 0.25),
    lambda p: subdiffusion_kernel(p, "semi_symmetric"), _rho4, "(Dt)^{1/4}/max(x,x0)",
    dict(D=1.0, x=1.0, x0=1.0, t=1.0e4)))

_register(AsymptoticLaw(
    ("dipole", "charge_preserving", "edge"), "autocorrelation", -0.25,
    "Gamma(1/4) / (2 pi (D t)^{1/4})",
    lambda p: G14 / (2 * math.pi * p.D ** 0.25),
    lambda p: subdiffusion_kernel(p, "semi_charge_preserving"), _rho4, "(Dt)^{1/4}/max(x,x0)",
    dict(D=1.0, x=1.0, x0=1.0, t=1.0e4)))

_register(AsymptoticLaw(
    ("dipole", "charge_preserving", "dipole_leak"), "dP/dt", -0.75,
    "D Gamma(3/4) / (2 pi (D t)^{3/4})",
    lambda p: p.D * G34 / (2 * math.pi * p.D ** 0.75),
    lambda p: dipole_leak_rate(p.x0, p.t, p.D), lambda p: (p.D * p.t) ** 0.25 / p.x0,
    "(Dt)^{1/4}/x0", dict(D=1.0, x=1.0, x0=1.0, t=1.0e4)))

_register(AsymptoticLaw(
    ("dipole", "charge_preserving", "center_of_mass"), "center_of_mass", 0.25,
    "2 Gamma(3/4) (D t)^{1/4} / pi",
    lambda p: 2 * G34 * p.D ** 0.25 / math.pi,
    lambda p: subdiffusion_dipole_moment(p.x0, p.t, p.D, "semi_charge_preserving"),
    lambda p: (p.D * p.t) ** 0.25 / p.x0, "(Dt)^{1/4}/x0",
    dict(D=1.0, x=1.0, x0=1.0, t=1.0e4)))

_register(AsymptoticLaw(
    ("dipole", "full_breaking", "late"), "correlation", -1.25,
    "Gamma(5/4) x^2 x0^2 / (4 pi (D t)^{5/4})",
    lambda p: G54 * p.x ** 2 * p.x0 ** 2 / (4 * math.pi * p.D ** 1.25),
    lambda p: subdiffusion_kernel(p, "semi_fully_breaking"), _rho4, "(Dt)^{1/4}/max(x,x0)",
    dict(D=1.0, x=1.0, x0=1.0, t=1.0e4)))

_register(AsymptoticLaw(
    ("dipole", "full_breaking", "total_charge"), "total_charge", -0.5,
    "x0^2 / (2 sqrt(pi) (D t)^{1/2})",
    lambda p: p.x0 ** 2 / (2 * math.sqrt(math.pi * p.D)),
    lambda p: subdiffusion_total_charge(p.x0, p.t, p.D), lambda p: (p.D * p.t) ** 0.25 / p.x0,
    "(Dt)^{1/4}/x0", dict(D=1.0, x=1.0, x0=1.0, t=1.0e4)))

_register(AsymptoticLaw(
    ("dipole", "full_breaking", "center_of_mass"), "dipole_moment", -0.25,
    "2 Gamma(5/4) x0^2 / (pi (D t)^{1/4})",
    lambda p: 2 * G54 * p.x0 ** 2 / (math.pi * p.D ** 0.25),
    lambda p: subdiffusion_dipole_moment(p.x0, p.t, p.D, "semi_fully_breaking"),
    lambda p: (p.D * p.t) ** 0.25 / p.x0, "(Dt)^{1/4}/x0",
    dict(D=1.0, x=1.0, x0=1.0, t=1.0e4)))


def asymptotic_law(symmetry, impurity=None, regime=None):
    """Look up a catalogue entry by (symmetry, impurity, regime) or a tuple key."""
    key = symmetry if isinstance(symmetry, tuple) else (symmetry, impurity, regime)
    try:
        return CATALOGUE[key]
    except KeyError:
        raise UnknownRegime(f"no asymptotic law for {key!r}; known: {sorted(CATALOGUE)}") from None


def validate_catalogue(regime_value=10.0):
    """Relative deviation of each entry from its kernel at the given regime variable.

    Each entry's sample point is rescaled in time until its regime variable
    reaches `regime_value` (the variable grows monotonically with t for all
    late/edge entries and shrinks for the early one).
    """
    out = {}
    for key, law in CATALOGUE.items():
        base = dict(law.sample)
        p = ContinuumParams(**base)
        t = _solve_time(law, p, regime_value)
        p = ContinuumParams(**{**base, "t": t})
        exact = law.exact(p)
        pred = law.predict(p)
        out[key] = {"t": t, "regime": law.regime(p), "regime_name": law.regime_name,
                    "exact": exact, "predicted": pred, "rel_dev": abs(pred - exact) / abs(exact)}
    return out


def _solve_time(law, p, target):
    # crossing of the regime variable nearest the sample time (z and w are not monotone)
    def h(logt):
        q = ContinuumParams(p.D, p.g, p.x, p.x0, p.xs, math.exp(logt))
        return math.log(law.regime(q)) - math.log(target)
    grid = np.linspace(-20.0, 60.0, 1601)
    vals = np.array([h(v) for v in grid])
    idx = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    if idx.size == 0:
        return p.t
    i = idx[np.argmin(np.abs(grid[idx] - math.log(p.t)))]
    return math.exp(optimize.brentq(h, grid[i], grid[i + 1], xtol=1e-13))
