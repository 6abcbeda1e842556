"""Single-particle hydro-mode operators for charge- and dipole-conserving chains.

Operators act on the single-flip sector |j), j = 1..L. Correlations follow
from the spectral sum C(j, j0; t) = sum_a exp(-E_a t) phi_a(j) phi_a(j0).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import EigFailure, NonPositiveValue, SpanError, WindowError
from .series import CorrelationSeries

DEFAULT_J4 = 1.0
DEFAULT_J5 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class BandedOperator:
    """Real symmetric matrix stored as upper bands.

    `ab[b + i - j, j] = H[i, j]` for `j - b <= i <= j` (LAPACK upper storage).
    `wrap` holds extra symmetric entries outside the band, used for
    periodic chains.
    """

    ab: np.ndarray
    wrap: tuple = ()
    label: str = ""

    @property
    def L(self):
        return self.ab.shape[1]

    @property
    def bandwidth(self):
        return self.ab.shape[0] - 1

    def diagonal(self):
        return self.ab[-1].copy()

    def to_dense(self):
        L, b = self.L, self.bandwidth
        H = np.zeros((L, L))
        for k in range(b + 1):
            off = b - k
            vals = self.ab[k, off:]
            idx = np.arange(L - off)
            H[idx, idx + off] = vals
            H[idx + off, idx] = vals
        for i, j, v in self.wrap:
            H[i, j] += v
            if i != j:
                H[j, i] += v
        return H

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        L, b = self.L, self.bandwidth
        col = (slice(None),) + (None,) * (x.ndim - 1)   # broadcast over extra columns
        y = self.ab[-1][col] * x
        for off in range(1, b + 1):
            vals = self.ab[b - off, off:][col]
            y[:-off] += vals * x[off:]
            y[off:] += vals * x[:-off]
        for i, j, v in self.wrap:
            y[i] += v * x[j]
            if i != j:
                y[j] += v * x[i]
        return y

    def norm(self):
        # infinity norm bound, cheap and adequate for tolerances
        return float(np.max(np.abs(self.to_dense()).sum(axis=1))) if self.L <= 4000 else float(
            np.abs(self.ab).sum(axis=0).max() * 2)


@dataclass(frozen=True)
class EigenDecomposition:
    energies: np.ndarray
    orbitals: np.ndarray      # columns are eigenvectors; may hold only selected rows
    rows: np.ndarray | None = None   # 0-based row indices kept in `orbitals`, None = all

    def row(self, site):
        """Orbital amplitudes phi_a(site) for a 1-based site."""
        if self.rows is None:
            return self.orbitals[site - 1]
        k = np.flatnonzero(self.rows == site - 1)
        if k.size == 0:
            raise KeyError(f"site {site} was not retained")
        return self.orbitals[k[0]]


def _from_dense_bands(L, b, entries):
    ab = np.zeros((b + 1, L))
    for (i, j), v in entries.items():
        if i > j:
            i, j = j, i
        ab[b + i - j, j] += v
    return ab


def _as_impurity_list(impurity):
    if impurity is None:
        return []
    if isinstance(impurity, tuple) and len(impurity) == 2 and np.isscalar(impurity[0]):
        return [impurity]
    return list(impurity)


def build_u1(L, bc="OBC", impurity=None):
    """Hopping operator 8 * sum_bonds (|j) - |j+1))((j| - (j+1|) plus 4g on impurity sites.

    `impurity` is None, a (site, g) pair, or a list of such pairs (1-based sites).
    """
    if L < 2:
        raise SpanError("L must be >= 2")
    if bc not in ("OBC", "PBC"):
        raise ValueError("bc must be OBC or PBC")
    ab = np.zeros((2, L))
    ab[1, :] = 16.0
    ab[0, 1:] = -8.0
    wrap = ()
    if bc == "OBC":
        ab[1, 0] = ab[1, -1] = 8.0
    elif L == 2:
        ab[0, 1] = -16.0
    else:
        wrap = ((0, L - 1, -8.0),)
    for js, g in _as_impurity_list(impurity):
        if not 1 <= js <= L:
            raise ValueError(f"impurity site {js} outside [1, {L}]")
        if g < 0:
            raise ValueError("impurity strength must be non-negative")
        ab[1, js - 1] += 4.0 * g
    return BandedOperator(ab, wrap, label=f"u1-{bc}")


def dipole_window_vectors(L, J4=DEFAULT_J4, J5=DEFAULT_J5):
    """(coupling, sites, coefficients) for every 4- and 5-site move inside [1, L]."""
    out = []
    for i in range(L - 3):
        out.append((J4, (i, i + 1, i + 2, i + 3), (1.0, -1.0, -1.0, 1.0)))
    for i in range(L - 4):
        out.append((J5, (i, i + 1, i + 3, i + 4), (1.0, -1.0, -1.0, 1.0)))
    return out


def build_dipole(L, J4=DEFAULT_J4, J5=DEFAULT_J5, impurity=None):
    """Dipole-conserving hydro operator, sum over moves of J v v^T.

    `impurity`: None, ("charge_preserving", g) acting on sites 1, 2, or
    ("full_breaking", g) acting on sites 1, 2, 3.
    """
    if L < 8:
        raise SpanError("dipole operator needs L >= 8")
    if J4 < 0 or J5 < 0:
        raise ValueError("couplings must be non-negative")
    b = 4
    ab = np.zeros((b + 1, L))
    for J, sites, coef in dipole_window_vectors(L, J4, J5):
        for a, ca in zip(sites, coef):
            for c, cc in zip(sites, coef):
                if a <= c:
                    ab[b + a - c, c] += J * ca * cc
    if impurity is not None:
        kind, g = impurity
        if g < 0:
            raise ValueError("impurity strength must be non-negative")
        if kind == "charge_preserving":
            ab[b, 0] += g
            ab[b, 1] += g
            ab[b - 1, 1] -= g
        elif kind == "full_breaking":
            ab[b, 0:3] += 4.0 * g
        else:
            raise ValueError(f"unknown dipole impurity {kind!r}")
    return BandedOperator(ab, (), label="dipole")


def _check_decomp(H, E, V, tol=1e-8):
    if V.shape[0] != H.L:
        return
    nrm = max(H.norm(), 1.0)
    res = 0.0
    for lo in range(0, V.shape[1], 1000):
        blk = V[:, lo:lo + 1000]
        R = H.matvec(blk) - blk * E[lo:lo + 1000]
        res = max(res, float(np.abs(R).max()))
    if res > tol * nrm:
        raise EigFailure(f"eigen residual {res:.3e} exceeds {tol}*|H|", residual=res)
    if V.shape[1] <= 3000:
        G = V.T @ V
        orth = float(np.abs(G - np.eye(G.shape[0])).max())
        if orth > 1e-8:
            raise EigFailure(f"orthonormality defect {orth:.3e}", residual=orth)


def eigh(H, check=True):
    """Full diagonalization; eigenvalues ascending, orbitals as columns."""
    if H.wrap:
        E, V = linalg.eigh(H.to_dense())
    elif H.bandwidth == 1:
        E, V = linalg.eigh_tridiagonal(H.ab[1], H.ab[0, 1:], lapack_driver="stemr")
    else:
        E, V = linalg.eig_banded(H.ab, lower=False)
    if check:
        _check_decomp(H, E, V)
    return EigenDecomposition(E, V)


def eigh_rows(H, sites, chunk=2000, full_limit=16000):
    """All eigenvalues, but orbital amplitudes only on the requested 1-based sites.

    Up to `full_limit` sites the full decomposition is taken and sliced (fast
    MRRR path). Beyond that eigenvectors are computed in index chunks so
    memory stays O(L * chunk).
    """
    rows = np.asarray(sorted(set(int(s) - 1 for s in sites)), dtype=np.int64)
    L = H.L
    if H.wrap or L <= full_limit:
        d = eigh(H, check=True)
        return EigenDecomposition(d.energies, d.orbitals[rows], rows)
    Es, Vs = [], []
    for lo in range(0, L, chunk):
        hi = min(lo + chunk, L) - 1
        if H.bandwidth == 1:
            E, V = linalg.eigh_tridiagonal(H.ab[1], H.ab[0, 1:], select="i", select_range=(lo, hi))
        else:
            E, V = linalg.eig_banded(H.ab, lower=False, select="i", select_range=(lo, hi))
        res = float(np.abs(H.matvec(V) - V * E).max())
        if res > 1e-8 * max(H.norm(), 1.0):
            raise EigFailure(f"eigen residual {res:.3e} in chunk {lo}..{hi}", residual=res)
        Es.append(E)
        Vs.append(V[rows])
    return EigenDecomposition(np.concatenate(Es), np.concatenate(Vs, axis=1), rows)


def _pairs(probe_sites):
    out = []
    for p in probe_sites:
        if isinstance(p, (tuple, list)):
            out.append((int(p[0]), int(p[1])))
        else:
            out.append((int(p), int(p)))
    return out


def spectral_correlation(H, probe_sites, times, decomposition=None):
    """C(j, j0; t) for each probe; a bare site j means the autocorrelation j0 = j."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be non-negative")
    pairs = _pairs(probe_sites)
    if decomposition is None:
        sites = sorted({s for p in pairs for s in p})
        decomposition = eigh_rows(H, sites)
    E = decomposition.energies
    Eclip = np.maximum(E, 0.0)
    decay = np.exp(-np.outer(times, Eclip))
    out = []
    for j, j0 in pairs:
        w = decomposition.row(j) * decomposition.row(j0)
        vals = decay @ w
        meta = {"operator": H.label, "L": H.L, "j0": j0}
        out.append(CorrelationSeries(times, vals, np.zeros_like(vals), site=j, meta=meta))
    return out


def magnetization_from_modes(H, times, decomposition=None):
    """sum_a exp(-E_a t) |sum_j phi_a(j)|^2, the total charge evolved from a polarized state."""
    times = np.asarray(times, dtype=float)
    if decomposition is None:
        decomposition = eigh(H)
    if decomposition.rows is not None:
        raise ValueError("magnetization needs full orbitals")
    s = decomposition.orbitals.sum(axis=0)
    vals = np.exp(-np.outer(times, np.maximum(decomposition.energies, 0.0))) @ (s * s)
    return CorrelationSeries(times, vals, np.zeros_like(vals), meta={"operator": H.label, "L": H.L})


def zero_mode_count(H, rel_tol=1e-9):
    E = eigh(H, check=False).energies
    return int(np.sum(np.abs(E) <= rel_tol * max(H.norm(), 1.0)))


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    amplitude: float
    stderr: float
    window: tuple
    n_points: int

    def __call__(self, t):
        return self.amplitude * np.asarray(t, dtype=float) ** self.exponent


def fit_power_law(series, window):
    """Weighted least squares of log C against log t inside [t_lo, t_hi]."""
    t_lo, t_hi = window
    sel = (series.times >= t_lo) & (series.times <= t_hi)
    if sel.sum() < 8:
        raise WindowError(f"only {int(sel.sum())} points in window {window}; need 8")
    t, v, e = series.times[sel], series.values[sel], series.std_errors[sel]
    if np.any(t <= 0):
        raise WindowError("window must exclude t <= 0")
    if np.any(v <= 0):
        raise NonPositiveValue("power-law fit needs positive values")
    x, y = np.log(t), np.log(v)
    if np.all(e > 0):
        w = (v / e) ** 2
    else:
        w = np.ones_like(x)
    X = np.stack([np.ones_like(x), x], axis=1)
    W = X * w[:, None]
    cov = np.linalg.inv(X.T @ W)
    beta = cov @ (W.T @ y)
    resid = y - X @ beta
    dof = max(len(x) - 2, 1)
    scale = float(resid @ (w * resid)) / dof
    stderr = float(np.sqrt(cov[1, 1] * scale))
    return PowerLawFit(float(beta[1]), float(np.exp(beta[0])), stderr, (t_lo, t_hi), int(sel.sum()))


def crossover_time(early, late):
    """Time where two fitted power laws intersect."""
    if early.exponent == late.exponent:
        raise ValueError("parallel power laws never intersect")
    return float((late.amplitude / early.amplitude) ** (1.0 / (early.exponent - late.exponent)))
