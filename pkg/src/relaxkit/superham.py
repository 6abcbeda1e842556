"""Composite-spin super-Hamiltonians, SLIOM trial states and effective models.

Every operator lives in the m^L composite-spin space: one basis vector per
configuration, site 1 the most significant digit, same local encodings as
the automaton module. A bulk transition pair (a <-> b) with weight c adds the
Rokhsar-Kivelson term c (|a) - |b))((a| - (b|).

The t-Jz effective objects use the single-flip basis |k,l): l particles whose
spin pattern is "right" everywhere except "left" on the k-th particle, with
right/left = (up +/- down)/sqrt(2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np
import scipy.sparse as sp
from scipy import linalg
from scipy.sparse import linalg as sla
from scipy.special import gammaln

from . import automaton as ca
from .errors import ConvergenceFailure, OverlapError, SizeError, UnsupportedImpurity

SUPER_MODELS = {
    # name: (local dim, automaton model used for charges)
    "U1": (2, "U1_half"),
    "dip_half": (2, "Dip_half_W4W5"),
    "tJz": (3, "TJz"),
    "H3": (3, "Dip_one_H3"),
    "H3H4": (3, "Dip_one_H3H4"),
}
IMPURITY_KINDS = {
    "U1": ("flip",),
    "dip_half": ("swap", "flip"),
    "tJz": ("state_flip",),
    "H3": ("state_flip",),
    "H3H4": ("state_flip",),
}
DEFAULT_CAP = 3 ** 9
DENSE_LIMIT = 2500


@dataclass(frozen=True)
class SparseOperator:
    matrix: sp.csr_matrix
    label: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def dimension(self):
        return self.matrix.shape[0]

    def entries(self):
        c = self.matrix.tocoo()
        return list(zip(c.row.tolist(), c.col.tolist(), c.data.tolist()))

    def norm(self):
        return float(abs(self.matrix).sum(axis=1).max()) if self.dimension else 0.0

    def dense(self):
        return self.matrix.toarray()

    def expectation(self, v):
        v = np.asarray(v, dtype=float)
        return float(v @ (self.matrix @ v)) / float(v @ v)


@dataclass(frozen=True)
class TridiagonalOperator:
    diagonal: np.ndarray
    offdiagonal: np.ndarray
    label: str = ""

    @property
    def dimension(self):
        return len(self.diagonal)

    def dense(self):
        return np.diag(self.diagonal) + np.diag(self.offdiagonal, 1) + np.diag(self.offdiagonal, -1)

    def eigh(self):
        if self.dimension == 1:
            return self.diagonal.copy(), np.ones((1, 1))
        return linalg.eigh_tridiagonal(self.diagonal, self.offdiagonal)


@dataclass(frozen=True)
class SliomState:
    model: str
    descriptor: object
    coefficients: np.ndarray
    basis: str


@dataclass(frozen=True)
class Spectrum:
    energies: np.ndarray
    states: np.ndarray
    residuals: np.ndarray


# ---------------------------------------------------------------- assembly

def _digits(L, m):
    n = m ** L
    return np.stack(np.unravel_index(np.arange(n, dtype=np.int64), (m,) * L), axis=1)


def _bulk_families(model):
    if model == "U1":
        return [((0, 1), ca._u1_pairs(), 8.0)]
    if model == "dip_half":
        return [((0, 1, 2, 3), ca._w_pairs(), 4.0 * 1.0),
                ((0, 1, 3, 4), ca._w_pairs(), 4.0 / math.sqrt(2.0))]
    if model == "tJz":
        return [((0, 1), ca._tjz_pairs(), 2.0)]
    if model == "H3":
        return [((0, 1, 2), ca._h3_pairs(), 2.0)]
    return [((0, 1, 2), ca._h3_pairs(), 2.0),
            ((0, 1, 2, 3), ca._h4_pairs(-1) + ca._h4_pairs(0), 2.0)]


def _embed_local(mat, sup, L, m, digits):
    """Sparse embedding of a local matrix acting on 0-based sites `sup`."""
    n = m ** L
    configs = np.arange(n, dtype=np.int64)
    strides = m ** (L - 1 - np.asarray(sup))
    local_w = m ** np.arange(len(sup) - 1, -1, -1)
    local = digits[:, sup] @ local_w
    base = configs - digits[:, sup] @ strides
    nloc = mat.shape[0]
    loc_digits = np.stack(np.unravel_index(np.arange(nloc), (m,) * len(sup)), axis=1)
    offsets = loc_digits @ strides
    rows, cols, vals = [], [], []
    for c_new in range(nloc):
        p = mat[c_new, local]
        keep = p != 0
        rows.append(base[keep] + offsets[c_new])
        cols.append(configs[keep])
        vals.append(p[keep])
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def _rk_local(pairs, m, s, c):
    n = m ** s
    mat = np.zeros((n, n))
    for a, b in pairs:
        ia, ib = ca._encode(a, m), ca._encode(b, m)
        mat[ia, ia] += c
        mat[ib, ib] += c
        mat[ia, ib] -= c
        mat[ib, ia] -= c
    return mat


def impurity_local(model, kind, g):
    """Local impurity matrix (first-order projection onto composite spins)."""
    if kind not in IMPURITY_KINDS[model]:
        raise UnsupportedImpurity(f"{kind!r} impurity is not available for {model}")
    if kind == "flip":
        return 2.0 * g * np.array([[1.0, -1.0], [-1.0, 1.0]])
    if kind == "swap":
        mat = np.zeros((4, 4))
        mat[1, 1] = mat[2, 2] = g
        mat[1, 2] = mat[2, 1] = -g
        return mat
    # state flip: g (1 - F), F with 1/2 on every off-diagonal entry
    return g * (np.eye(3) - 0.5 * (np.ones((3, 3)) - np.eye(3)))


def _normalize_impurity(impurity):
    if impurity is None:
        return None
    if isinstance(impurity, ca.ImpuritySpec):
        return impurity
    kind, sites = impurity
    if isinstance(sites, int):
        sites = (sites,)
    return ca.ImpuritySpec(kind, tuple(sites))


def build_super_hamiltonian(model, L, impurity=None, g=1.0, cap=None, parts=False):
    """Composite-spin super-Hamiltonian; `impurity` is (kind, sites) or an ImpuritySpec.

    With `parts=True` returns (bulk, impurity) operators separately.
    """
    if model not in SUPER_MODELS:
        raise ValueError(f"unknown model {model!r}")
    m = SUPER_MODELS[model][0]
    cap = DEFAULT_CAP if cap is None else cap
    if m ** L > cap:
        raise SizeError(f"{m}^{L} composite states exceed cap {cap}")
    span = max(max(f[0]) for f in _bulk_families(model)) + 1
    if L < min(max(f[0]) + 1 for f in _bulk_families(model)):
        raise SizeError(f"{model} needs more than {L} sites")
    digits = _digits(L, m)
    n = m ** L
    bulk = sp.csr_matrix((n, n))
    for offsets, pairs, c in _bulk_families(model):
        mat = _rk_local(pairs, m, len(offsets), c)
        for i in range(L - max(offsets)):
            bulk = bulk + _embed_local(mat, [i + o for o in offsets], L, m, digits)
    imp = sp.csr_matrix((n, n))
    spec = _normalize_impurity(impurity)
    if spec is not None:
        if any(s < 1 or s > L for s in spec.sites):
            raise UnsupportedImpurity(f"impurity sites {spec.sites} outside [1, {L}]")
        mat = impurity_local(model, spec.kind, g)
        if spec.kind == "swap":
            if len(spec.sites) != 2 or abs(spec.sites[0] - spec.sites[1]) != 1:
                raise UnsupportedImpurity("swap impurity needs two neighbouring sites")
            imp = imp + _embed_local(mat, sorted(s - 1 for s in spec.sites), L, m, digits)
        else:
            for s in spec.sites:
                imp = imp + _embed_local(mat, [s - 1], L, m, digits)
    label = f"{model}-L{L}" + (f"-{spec.kind}{spec.sites}" if spec else "")
    meta = {"model": model, "L": L, "g": g, "impurity": spec, "span": span}
    if parts:
        return SparseOperator(bulk.tocsr(), label + "-bulk", meta), SparseOperator(imp.tocsr(), label + "-imp", meta)
    H = (bulk + imp).tocsr()
    H.eliminate_zeros()
    return SparseOperator(H, label, meta)


def low_spectrum(op, n_eigs=2, tol=1e-8):
    """Lowest eigenpairs of a symmetric PSD operator, energies ascending."""
    A = op.matrix if isinstance(op, SparseOperator) else sp.csr_matrix(op)
    n = A.shape[0]
    n_eigs = min(n_eigs, n)
    nrm = max(float(abs(A).sum(axis=1).max()), 1.0)
    if n <= DENSE_LIMIT:
        E, V = np.linalg.eigh(A.toarray())
        E, V = E[:n_eigs], V[:, :n_eigs]
    else:
        diag = A.diagonal()
        v0 = np.zeros(n)
        v0[int(np.argmax(diag))] = 1.0
        v0 += 1e-3 * np.sin(np.arange(1, n + 1) * 0.7071)
        sigma = -1e-3
        try:
            E, V = sla.eigsh(A.tocsc(), k=n_eigs, sigma=sigma, which="LM", v0=v0, tol=1e-13, maxiter=5000)
        except sla.ArpackNoConvergence as exc:
            raise ConvergenceFailure(f"eigsh did not converge: {exc}", iterations=5000) from exc
        order = np.argsort(E)
        E, V = E[order], V[:, order]
    R = A @ V - V * E
    res = np.abs(R).max(axis=0)
    if np.any(res > tol * nrm):
        raise ConvergenceFailure(f"residuals {res} exceed {tol}*|op|", iterations=None)
    return Spectrum(E, V, res)


def kernel_dimension(op, tol=1e-9):
    """Number of eigenvalues below tol (dense, small operators only)."""
    if op.dimension > 20000:
        raise SizeError("kernel counting is dense; operator too large")
    E = np.linalg.eigvalsh(op.dense())
    return int(np.sum(E <= tol))


def naive_u1_splitting(L, g=1.0):
    """First-order energies 2g(1 - 2M/L) of the ferromagnetic multiplet, M = L/2 .. -L/2.

    A diagnostic only: the uniform spacing 4g/L misses the true 1/L^2 gap.
    """
    if L < 2:
        raise SizeError("L must be >= 2")
    Ms = [L / 2 - i for i in range(L + 1)]
    return [2 * g * (1 - 2 * M / L) for M in Ms]


# ---------------------------------------------------------------- vectors in composite space

def site_vector(model, L, j):
    """|S_j^z) in the composite space."""
    m, cam = SUPER_MODELS[model]
    return ca.CHARGE[cam][_digits(L, m)[:, j - 1]].astype(float)


def identity_vector(model, L):
    m = SUPER_MODELS[model][0]
    return np.ones(m ** L)


def _tjz_pattern_arrays(L):
    d = _digits(L, 3)
    occ = d != ca._E
    spin = np.where(d == ca._TU, 1.0, np.where(d == ca._TD, -1.0, 0.0))
    return d, occ, spin


def kl_vector(L, k, l):
    """Normalized |k,l) in the t-Jz composite space."""
    d, occ, spin = _tjz_pattern_arrays(L)
    n_part = occ.sum(axis=1)
    rank = np.cumsum(occ, axis=1)     # particle index at each occupied site
    amp = np.where(n_part == l, 1.0, 0.0)
    r2 = 1 / math.sqrt(2)
    for site in range(L):
        is_k = occ[:, site] & (rank[:, site] == k)
        other = occ[:, site] & ~is_k
        # right = (up + down)/sqrt2 gives r2 for both; left = (up - down)/sqrt2 gives +-r2
        amp = amp * np.where(other, r2, 1.0) * np.where(is_k, r2 * spin[:, site], 1.0)
    return amp / math.sqrt(comb(L, l))


def pattern_vector(L, pattern):
    """Normalized |G^sigma) in the up/down basis for a tuple of +1/-1 spins."""
    d, occ, spin = _tjz_pattern_arrays(L)
    l = len(pattern)
    n_part = occ.sum(axis=1)
    ok = n_part == l
    rank = np.cumsum(occ, axis=1)
    for site in range(L):
        for k, s in enumerate(pattern, start=1):
            hit = occ[:, site] & (rank[:, site] == k)
            ok &= ~hit | (spin[:, site] == s)
    return ok.astype(float) / math.sqrt(comb(L, l))


def q_vector(L, k):
    """Unnormalized t-Jz SLIOM |q_k) in the composite space."""
    v = np.zeros(3 ** L)
    for l in range(k, L + 1):
        v += math.sqrt(2 ** l * comb(L, l)) * kl_vector(L, k, l)
    return v


def q_coefficients(L, k):
    """|q_k) in the |k,l) basis, l = k..L."""
    return SliomState("tJz", k, np.array([math.sqrt(2 ** l * comb(L, l)) for l in range(k, L + 1)]), "kl")


def h3_left_vector(L):
    """sigma_left for spin-1: +1/-1 by the sign of the leftmost charge, 0 if none."""
    d = _digits(L, 3)
    q = ca.CHARGE["Dip_one_H3"][d]
    nz = q != 0
    first = np.argmax(nz, axis=1)
    val = q[np.arange(len(q)), first].astype(float)
    val[~nz.any(axis=1)] = 0.0
    return val


def h3_blockade_vector(L, j0):
    """Indicator of a frozen ++ pair on (j0, j0+1) with + as nearest charges on both sides."""
    d = _digits(L, 3)
    q = ca.CHARGE["Dip_one_H3"][d]
    a, b = j0 - 1, j0
    ok = (q[:, a] == 1) & (q[:, b] == 1)
    left = q[:, :a]
    if a > 0:
        nzl = left != 0
        last = a - 1 - np.argmax(nzl[:, ::-1], axis=1)
        ok &= nzl.any(axis=1) & (left[np.arange(len(q)), last] == 1)
    else:
        ok &= False
    right = q[:, b + 1:]
    if right.shape[1] > 0:
        nzr = right != 0
        first = np.argmax(nzr, axis=1)
        ok &= nzr.any(axis=1) & (right[np.arange(len(q)), first] == 1)
    else:
        ok &= False
    return ok.astype(float)


# ---------------------------------------------------------------- variational energies

def _tjz_var_exact(L, k, js, g):
    if js == L:
        num = Fraction(3, 2) * Fraction(k, L) * 2 ** k * comb(L, k)
        den = sum(2 ** l * comb(L, l) for l in range(k, L + 1))
        return g * num / den
    if k == 1:
        return g * Fraction(4 * 3 ** (L - js) - 1, 3 ** L - 1)
    raise ValueError("closed form available for k = 1 (any j_s) or j_s = L (any k)")


def sliom_variational_energy(model, L, k_or_descriptor, j_s=None, g=1):
    """Exact rational (q|V|q)/(q|q) for a SLIOM trial state.

    t-Jz: k_or_descriptor = k, impurity at j_s (default L).
    H3 (two-site impurity at L-1, L): "left" for the leftmost charge, or
    ("blockade", j0) for the ++ blockade on (j0, j0+1).
    """
    g = Fraction(g) if not isinstance(g, float) else Fraction(g).limit_denominator(10 ** 12)
    if model == "tJz":
        k = int(k_or_descriptor)
        js = L if j_s is None else int(j_s)
        if not 1 <= k <= L:
            raise ValueError("need 1 <= k <= L")
        return _tjz_var_exact(L, k, js, g)
    if model == "H3":
        if k_or_descriptor == "left":
            return g * Fraction(14, 3 ** L - 1)
        kind, j0 = k_or_descriptor
        if kind != "blockade" or not 2 <= j0 <= L - 3:
            raise ValueError("blockade needs 2 <= j0 <= L-3")
        return g * Fraction(8, 3 ** (L - j0 - 1) - 1)
    raise ValueError(f"no SLIOM trial state for {model!r}")


def sliom_variational_energy_approx(L, k, g=1.0):
    """Large-L form (3g/sqrt(8 pi)) sqrt(k) exp(-f(k/L) L) / sqrt(L (L-k))."""
    a = k / L
    f = math.log(3) - a * math.log(2) + a * math.log(a) + (1 - a) * math.log(1 - a)
    return 3 * g / math.sqrt(8 * math.pi) * math.sqrt(k) * math.exp(-f * L) / math.sqrt(L * (L - k))


def sliom_decay_bound(model, L, k_or_descriptor, j_s=None, g=1):
    """Upper bound on |dC_q/dt| at all times; equals the variational energy."""
    return sliom_variational_energy(model, L, k_or_descriptor, j_s, g)


def trial_energy_explicit(model, L, vec, impurity, g=1.0):
    """(v|P|v)/(v|v) with an explicit composite-space vector (small L cross-check)."""
    return build_super_hamiltonian(model, L, impurity, g).expectation(vec)


# ---------------------------------------------------------------- t-Jz effective models

def _mu_plus(l, L):
    return 1 + l / (2 * L)


def _mu_minus(l, L):
    return 1 - l / (2 * L)


def _hop(l, L):
    return math.sqrt((l + 1) * (L - l)) / (math.sqrt(2) * L)


def build_effective_hk(L, k):
    """H_k over |k,l), l = k..L."""
    if not 1 <= k <= L:
        raise ValueError("need 1 <= k <= L")
    ls = np.arange(k, L + 1)
    diag = np.array([_mu_plus(k, L) if l == k else _mu_minus(l, L) for l in ls])
    off = -np.array([_hop(l, L) for l in ls[:-1]])
    return TridiagonalOperator(diag, off, label=f"H_{k}")


def parent_h0(L):
    """Parent operator on l = 0..L and its closed-form spectrum 3/4 - 3m'/(2L)."""
    if L < 1:
        raise ValueError("L must be >= 1")
    ls = np.arange(0, L + 1)
    op = TridiagonalOperator(np.array([_mu_minus(l, L) for l in ls]),
                             -np.array([_hop(l, L) for l in ls[:-1]]), label="H_0")
    mp = np.arange(L, -1, -1) - L / 2          # m' = L/2 .. -L/2
    exact = 0.75 - 1.5 * mp / L
    return op, np.sort(exact)


def _log_binom(n, r):
    return gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1)


def overlap_weights(L, j, k):
    """(S_j^z|k,l) / 3^{L/2} for l = k..L (zero where the placement is impossible)."""
    ls = np.arange(k, L + 1)
    out = np.zeros(len(ls))
    if k > j:
        return out
    for i, l in enumerate(ls):
        if l - k > L - j:
            continue
        lw = (0.5 * (l * math.log(2) - L * math.log(3)) + _log_binom(j - 1, k - 1)
              + _log_binom(L - j, l - k) - 0.5 * _log_binom(L, l))
        out[i] = math.exp(lw)
    return out


def _check_overlaps(L, j):
    # placements of l particles with one at j, split by the rank of that particle
    for l in range(1, L + 1):
        tot = sum(comb(j - 1, k - 1) * comb(L - j, l - k) for k in range(1, min(j, l) + 1))
        if tot != comb(L - 1, l - 1):
            raise OverlapError(f"placement counts fail at l={l}: {tot} != {comb(L - 1, l - 1)}")
    if j == 1:
        got = sum(float(np.sum(overlap_weights(L, 1, 1) ** 2)) for _ in [0])
        want = 2 * (2 * L + 1) / (9 * L)
        if abs(got - want) > 1e-10 * want:
            raise OverlapError(f"boundary Mazur value {got} != {want}")


def mazur_single_flip(L, j):
    """Unperturbed Mazur bound of S_j^z carried by the single-flip patterns."""
    return float(sum(np.sum(overlap_weights(L, j, k) ** 2) for k in range(1, j + 1)))


def effective_correlation_tjz(L, j, times, g=1.0):
    """C_eff(t) = 3^{-L} sum_{k<=j} sum_n exp(-g lambda_n^(k) t) |(S_j|lambda_n^(k))|^2."""
    from .series import CorrelationSeries
    if not 1 <= j <= L:
        raise ValueError("need 1 <= j <= L")
    _check_overlaps(L, j)
    times = np.asarray(times, dtype=float)
    vals = np.zeros(len(times))
    spectra = {}
    for k in range(1, j + 1):
        w = overlap_weights(L, j, k)
        if not np.any(w):
            continue
        E, V = build_effective_hk(L, k).eigh()
        E = np.clip(E, 0.0, None)
        amp = (V.T @ w) ** 2
        spectra[k] = (E, amp)
        vals += np.exp(-g * np.outer(times, E)) @ amp
    return CorrelationSeries(times, vals, np.zeros_like(vals), site=j,
                             meta={"engine": "tjz-effective", "L": L, "g": g,
                                   "lambda0": {k: float(s[0][0]) for k, s in spectra.items()}})


def hk_ground_overlap_with_q(L):
    """Squared overlap of the H_1 ground state with the normalized |q_left)."""
    E, V = build_effective_hk(L, 1).eigh()
    q = q_coefficients(L, 1).coefficients
    q = q / np.linalg.norm(q)
    return float((V[:, 0] @ q) ** 2)


# ---------------------------------------------------------------- graph picture

@dataclass(frozen=True)
class GraphReport:
    laplacian: sp.csr_matrix
    degrees: np.ndarray
    cut_boundary: float
    cut_volume: float
    conductance: float
    cheeger_bound: float
    patterns: list


def _patterns(L):
    pats = [()]
    for l in range(1, L + 1):
        pats += [tuple(1 - 2 * ((b >> (l - 1 - i)) & 1) for i in range(l)) for b in range(2 ** l)]
    return pats


def graph_laplacian_tjz(L, cap=2 ** 13):
    """Normalized Laplacian of the spin-pattern graph for an impurity at site L.

    Nodes are up/down patterns of length 0..L with degree C(L, l). A pattern is
    joined to each one-longer extension and the two extensions are joined to
    each other, all with weight C(L-1, l-1)/2 for the longer length l.
    Cut: patterns whose first spin is down.
    """
    n = 2 ** (L + 1) - 1
    if n > cap:
        raise SizeError(f"{n} patterns exceed cap {cap}")
    pats = _patterns(L)
    index = {p: i for i, p in enumerate(pats)}
    rows, cols, vals = [], [], []
    for p in pats:
        l = len(p) + 1
        if l > L:
            continue
        w = 0.5 * comb(L - 1, l - 1)
        up, dn = index[p + (1,)], index[p + (-1,)]
        for a, b in ((index[p], up), (index[p], dn), (up, dn)):
            rows += [a, b]
            cols += [b, a]
            vals += [w, w]
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    deg = np.asarray(A.sum(axis=1)).ravel()
    expect = np.array([comb(L, len(p)) for p in pats], dtype=float)
    if not np.allclose(deg, expect):
        raise AssertionError("pattern degrees differ from C(L, l)")
    Dm = sp.diags(1 / np.sqrt(deg))
    lap = (sp.identity(n) - Dm @ A @ Dm).tocsr()
    in_s = np.array([len(p) > 0 and p[0] == -1 for p in pats])
    A_coo = A.tocoo()
    boundary = float(A_coo.data[in_s[A_coo.row] & ~in_s[A_coo.col]].sum())
    vol = float(deg[in_s].sum())
    vol_c = float(deg[~in_s].sum())
    phi = boundary / min(vol, vol_c)
    return GraphReport(lap, deg, boundary, vol, phi, 2 * phi, pats)


def projected_impurity_tjz(L):
    """First-order matrix of 1 - F_L between normalized |G^sigma), built in the composite space."""
    if 3 ** L > DEFAULT_CAP:
        raise SizeError("explicit projection limited to 3^L <= 3^9")
    pats = _patterns(L)
    B = np.stack([pattern_vector(L, p) for p in pats], axis=1)
    _, V = build_super_hamiltonian("tJz", L, ("state_flip", (L,)), 1.0, parts=True)
    return B.T @ (V.matrix @ B)


# ---------------------------------------------------------------- two impurities

def _kl_index(L):
    idx = {}
    for k in range(1, L + 1):
        for l in range(k, L + 1):
            idx[(k, l)] = len(idx)
    return idx


def two_impurity_full_eff(L):
    """H_eff[V_L] + H_eff[V_1] over |k,l), lexicographic in (k, l)."""
    if L * (L + 1) // 2 > 2_100_000:
        raise SizeError("basis too large")
    idx = _kl_index(L)
    n = len(idx)
    rows, cols, vals = [], [], []

    def add(a, b, v):
        rows.append(a)
        cols.append(b)
        vals.append(v)
    for (k, l), i in idx.items():
        # right impurity: H_k
        add(i, i, _mu_plus(k, L) if l == k else _mu_minus(l, L))
        if l < L:
            j = idx[(k, l + 1)]
            add(i, j, -_hop(l, L))
            add(j, i, -_hop(l, L))
        # left impurity
        add(i, i, _mu_plus(l, L) if k == 1 else _mu_minus(l, L))
        if l < L:
            j = idx[(k + 1, l + 1)]
            add(i, j, -_hop(l, L))
            add(j, i, -_hop(l, L))
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def two_impurity_sliom(L):
    """Tridiagonal H_SLIOM over normalized left SLIOMs with exact matrix elements."""
    a = [2 ** l * comb(L, l) for l in range(L + 1)]
    suffix = [0] * (L + 2)
    lsuffix = [0] * (L + 2)
    hsuffix = [0] * (L + 2)      # sum_{l>=k}^{L-1} (L - l) a_l
    for l in range(L, -1, -1):
        suffix[l] = suffix[l + 1] + a[l]
        lsuffix[l] = lsuffix[l + 1] + l * a[l]
        hsuffix[l] = hsuffix[l + 1] + (L - l) * a[l]
    diag = np.empty(L)
    off = np.empty(L - 1)
    for k in range(1, L + 1):
        nk = suffix[k]
        if k == 1:
            v1 = Fraction(2 * L * nk + lsuffix[1], 2 * L)
        else:
            v1 = Fraction(2 * L * nk - lsuffix[k], 2 * L)
        vL = Fraction(3 * k * a[k], 2 * L)
        diag[k - 1] = float((v1 + vL) / nk)
        if k < L:
            w = Fraction(-hsuffix[k], L)
            # normalize by sqrt(n_k n_{k+1}) without overflowing floats
            ratio = Fraction(w * w, nk * suffix[k + 1])
            off[k - 1] = -math.sqrt(float(ratio))
    return TridiagonalOperator(diag, off, label="H_SLIOM")


def two_impurity_effective(L, which="sliom_hopping"):
    """Operator and lowest eigenvalue for the two-boundary-impurity t-Jz effective models."""
    if which == "sliom_hopping":
        op = two_impurity_sliom(L)
        E = linalg.eigh_tridiagonal(op.diagonal, op.offdiagonal, eigvals_only=True,
                                    select="i", select_range=(0, 0))
        return op, float(E[0])
    if which == "full_eff":
        H = two_impurity_full_eff(L)
        if H.shape[0] <= DENSE_LIMIT:
            gap = float(np.linalg.eigvalsh(H.toarray())[0])
        else:
            gap = float(low_spectrum(SparseOperator(H), 1).energies[0])
        return SparseOperator(H, "H_eff-two-imp"), gap
    raise ValueError("which must be 'full_eff' or 'sliom_hopping'")
