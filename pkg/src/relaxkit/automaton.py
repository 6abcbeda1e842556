"""Stochastic cellular automata for symmetric lattice models with impurity gates.

Sites are 0-based inside rules and 1-based in every public argument that names
a probe or impurity site.

Local state encodings:

    spin-1/2 (U1_half, Dip_half_W4W5)   0, 1         ->  Z  = -1, +1
    spin-1   (Dip_one_H3, Dip_one_H3H4) 0, 1, 2 = -,0,+  ->  Sz = -1, 0, +1
    t-Jz     (TJz)                      0, 1, 2 = 0,up,dn -> Sz = 0, +1, -1
"""
from __future__ import annotations

import itertools
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import rng
from .errors import BudgetError, SizeError, SpanError, UnsupportedImpurity
from .series import CorrelationSeries

MODELS = ("U1_half", "Dip_half_W4W5", "Dip_one_H3", "Dip_one_H3H4", "TJz")

LOCAL_DIM = {"U1_half": 2, "Dip_half_W4W5": 2, "Dip_one_H3": 3, "Dip_one_H3H4": 3, "TJz": 3}

CHARGE = {
    "U1_half": np.array([-1, 1]),
    "Dip_half_W4W5": np.array([-1, 1]),
    "Dip_one_H3": np.array([-1, 0, 1]),
    "Dip_one_H3H4": np.array([-1, 0, 1]),
    "TJz": np.array([0, 1, -1]),
}

MIN_SPAN = {"U1_half": 2, "Dip_half_W4W5": 5, "Dip_one_H3": 3, "Dip_one_H3H4": 4, "TJz": 2}

DEFAULT_BUDGET = 1e12
DEFAULT_STATE_CAP = 3 ** 12

_IMPURITY_KINDS = {
    "U1_half": {"flip"},
    "Dip_half_W4W5": {"flip", "swap"},
    "Dip_one_H3": {"state_flip"},
    "Dip_one_H3H4": {"state_flip"},
    "TJz": {"state_flip"},
}


@dataclass(frozen=True)
class SpinConfiguration:
    states: tuple
    m: int

    def __post_init__(self):
        s = tuple(int(x) for x in self.states)
        if any(x < 0 or x >= self.m for x in s):
            raise ValueError(f"local states must lie in [0, {self.m})")
        object.__setattr__(self, "states", s)

    def __len__(self):
        return len(self.states)

    def as_array(self):
        return np.array(self.states, dtype=np.uint8)


@dataclass(frozen=True)
class GateRule:
    """Local stochastic move on `support`.

    Each unordered pair (a, b) is swapped with probability `flip_probability`.
    A rule with `resample=True` instead redraws every site of its support
    uniformly from the m local states (a symmetric move by construction).
    """

    support: tuple
    transition_pairs: tuple = ()
    flip_probability: float = 0.5
    resample: bool = False

    def __post_init__(self):
        seen = set()
        for a, b in self.transition_pairs:
            if a == b or a in seen or b in seen:
                raise ValueError("transition pairs must be disjoint")
            if len(a) != len(self.support) or len(b) != len(self.support):
                raise ValueError("pair length must match support")
            seen.update((a, b))

    def partner_table(self, m):
        """Map local code -> partner code (identity where no pair matches)."""
        s = len(self.support)
        table = np.arange(m ** s, dtype=np.int64)
        for a, b in self.transition_pairs:
            ca, cb = _encode(a, m), _encode(b, m)
            table[ca], table[cb] = cb, ca
        return table

    def local_matrix(self, m):
        s = len(self.support)
        n = m ** s
        if self.resample:
            return np.full((n, n), 1.0 / n)
        mat = np.eye(n)
        p = self.flip_probability
        for a, b in self.transition_pairs:
            ca, cb = _encode(a, m), _encode(b, m)
            mat[ca, ca] = mat[cb, cb] = 1 - p
            mat[ca, cb] = mat[cb, ca] = p
        return mat


@dataclass(frozen=True)
class ImpuritySpec:
    kind: str
    sites: tuple

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))


@dataclass(frozen=True)
class GateSet:
    model_id: str
    L: int
    bulk_layers: tuple
    impurity_rules: tuple
    layer_weights: tuple
    impurity: ImpuritySpec | None = None

    @property
    def m(self):
        return LOCAL_DIM[self.model_id]

    @property
    def charge(self):
        return CHARGE[self.model_id]

    def moves(self):
        """Bulk layers followed by the impurity move (if any), one list of rules each."""
        out = [list(layer) for layer in self.bulk_layers]
        if self.impurity_rules:
            out.append(list(self.impurity_rules))
        return out

    def all_rules(self):
        return [r for move in self.moves() for r in move]


@dataclass(frozen=True)
class KrylovReport:
    subspace_count: int
    size_histogram: dict = field(default_factory=dict)


def _encode(local, m):
    code = 0
    for x in local:
        code = code * m + int(x)
    return code


# state labels used by the pair tables below
_UP, _DN = 1, 0                      # spin-1/2: Z=+1 is state 1
_M, _Z, _P = 0, 1, 2                 # spin-1: -, 0, +
_E, _TU, _TD = 0, 1, 2               # t-Jz: empty, up, down


def _u1_pairs():
    return (((0, 1), (1, 0)),)


def _w_pairs():
    return (((_UP, _DN, _DN, _UP), (_DN, _UP, _UP, _DN)),)


def _h3_pairs():
    return (
        ((_Z, _P, _Z), (_P, _M, _P)),
        ((_Z, _P, _M), (_P, _M, _Z)),
        ((_Z, _M, _Z), (_M, _P, _M)),
        ((_Z, _M, _P), (_M, _P, _Z)),
    )


def _h4_pairs(lower_first_charge):
    """Charge shifts (+1,-1,-1,+1) whose lower end has the given first-site charge.

    Splitting by the first-site charge keeps every configuration in at most one
    pair of each rule.
    """
    shift = (1, -1, -1, 1)
    pairs = []
    for q in itertools.product((-1, 0, 1), repeat=4):
        if q[0] != lower_first_charge:
            continue
        r = tuple(a + d for a, d in zip(q, shift))
        if all(-1 <= x <= 1 for x in r):
            pairs.append((tuple(x + 1 for x in q), tuple(x + 1 for x in r)))
    return tuple(pairs)


def _tjz_pairs():
    return (((_TU, _E), (_E, _TU)), ((_TD, _E), (_E, _TD)))


def _packed_layers(L, offsets_in_window, pairs):
    """Layers of a gate family: one layer per offset, windows packed with stride = span."""
    span = max(offsets_in_window) + 1
    layers = []
    for start in range(span):
        rules = []
        for i in range(start, L - span + 1, span):
            support = tuple(i + o for o in offsets_in_window)
            rules.append(GateRule(support, pairs))
        if rules:
            layers.append(tuple(rules))
    return layers


def build_gate_set(model_id, L, impurity_spec=None):
    """Assemble the bulk layers and impurity move of a model on an open chain of L sites."""
    if model_id not in MODELS:
        raise ValueError(f"unknown model {model_id!r}")
    if L < MIN_SPAN[model_id]:
        raise SpanError(f"{model_id} needs L >= {MIN_SPAN[model_id]}, got {L}")
    if model_id == "U1_half":
        layers = _packed_layers(L, (0, 1), _u1_pairs())
    elif model_id == "Dip_half_W4W5":
        layers = _packed_layers(L, (0, 1, 2, 3), _w_pairs()) + _packed_layers(L, (0, 1, 3, 4), _w_pairs())
    elif model_id == "Dip_one_H3":
        layers = _packed_layers(L, (0, 1, 2), _h3_pairs())
    elif model_id == "Dip_one_H3H4":
        layers = (_packed_layers(L, (0, 1, 2), _h3_pairs())
                  + _packed_layers(L, (0, 1, 2, 3), _h4_pairs(-1))
                  + _packed_layers(L, (0, 1, 2, 3), _h4_pairs(0)))
    else:
        layers = _packed_layers(L, (0, 1), _tjz_pairs())

    imp_rules = ()
    if impurity_spec is not None:
        imp_rules = _impurity_rules(model_id, L, impurity_spec)
    n_moves = len(layers) + (1 if imp_rules else 0)
    weights = tuple([1.0 / n_moves] * n_moves)
    gs = GateSet(model_id, L, tuple(layers), imp_rules, weights, impurity_spec)
    _check_bulk_conservation(gs)
    return gs


def _impurity_rules(model_id, L, spec):
    if spec.kind not in _IMPURITY_KINDS[model_id]:
        raise UnsupportedImpurity(f"{spec.kind!r} impurity is not available for {model_id}")
    if not spec.sites or any(s < 1 or s > L for s in spec.sites):
        raise UnsupportedImpurity(f"impurity sites {spec.sites} outside [1, {L}]")
    if len(set(spec.sites)) != len(spec.sites):
        raise UnsupportedImpurity("impurity sites must be distinct")
    sites = [s - 1 for s in spec.sites]
    if spec.kind == "flip":
        return tuple(GateRule((s,), (((0,), (1,)),)) for s in sites)
    if spec.kind == "state_flip":
        return tuple(GateRule((s,), (), resample=True) for s in sites)
    # swap: charge-preserving exchange on two neighbouring sites
    if len(sites) != 2 or abs(sites[0] - sites[1]) != 1:
        raise UnsupportedImpurity("swap impurity needs two neighbouring sites")
    return (GateRule(tuple(sorted(sites)), _u1_pairs()),)


def _check_bulk_conservation(gs):
    q = gs.charge
    dipole = gs.model_id.startswith("Dip")
    for layer in gs.bulk_layers:
        for rule in layer:
            for a, b in rule.transition_pairs:
                qa, qb = q[list(a)], q[list(b)]
                if qa.sum() != qb.sum():
                    raise AssertionError(f"bulk pair {a}<->{b} breaks charge")
                pos = np.asarray(rule.support)
                if dipole and (pos * qa).sum() != (pos * qb).sum():
                    raise AssertionError(f"bulk pair {a}<->{b} breaks dipole moment")


# ---------------------------------------------------------------- sampling


class _CompiledMoves:
    """Per-rule lookup tables used by the vectorized batch update."""

    def __init__(self, gs):
        self.m = gs.m
        self.moves = []
        for move in gs.moves():
            compiled = []
            for rule in move:
                sup = np.asarray(rule.support, dtype=np.int64)
                weights = self.m ** np.arange(len(sup) - 1, -1, -1)
                table = rule.partner_table(self.m)
                decode = np.array([np.unravel_index(c, (self.m,) * len(sup)) for c in range(self.m ** len(sup))],
                                  dtype=np.uint8).reshape(-1, len(sup))
                compiled.append((sup, weights, table, decode, rule.resample))
            self.moves.append(compiled)
        self.n_moves = len(self.moves)
        self.coin_words = 1 + max(len(mv) for mv in self.moves) // 64

    def step(self, state, keys, t):
        """Advance every row of `state` by one time step (in place)."""
        choice = rng.below(rng.words(keys, t, 0), self.n_moves)
        for c, move in enumerate(self.moves):
            idx = np.flatnonzero(choice == c)
            if idx.size == 0:
                continue
            sub = state[idx]
            sub_keys = keys[idx]
            coin_words = [rng.words(sub_keys, t, 1 + w) for w in range(self.coin_words)]
            for r, (sup, weights, table, decode, resample) in enumerate(move):
                if resample:
                    for k, site in enumerate(sup):
                        w = rng.words(sub_keys, t, 1000 + int(site))
                        sub[:, site] = rng.below(w, self.m).astype(np.uint8)
                    continue
                code = sub[:, sup].astype(np.int64) @ weights
                new = table[code]
                fire = ((coin_words[r // 64] >> np.uint64(r % 64)) & np.uint64(1)).astype(bool)
                hit = fire & (new != code)
                if hit.any():
                    rows = np.flatnonzero(hit)
                    sub[rows[:, None], sup[None, :]] = decode[new[rows]]
            state[idx] = sub
        return state


def step(config, gate_set, rng_state):
    """Single realization, single time step.

    `rng_state` is a (seed, sample_index, t) triple; the result is a pure
    function of it.
    """
    if len(config) != gate_set.L:
        raise ValueError("configuration length does not match gate set")
    seed, sample_index, t = rng_state
    moves = _CompiledMoves(gate_set)
    state = config.as_array()[None, :].copy()
    keys = rng.sample_keys(seed, [sample_index])
    moves.step(state, keys, t)
    return SpinConfiguration(tuple(state[0]), gate_set.m)


def _resolve_workers(workers):
    if workers is None:
        workers = int(os.environ.get("RELAXKIT_WORKERS", "1"))
    return max(1, int(workers))


def _uniform_initial(keys, L, m):
    cols = [rng.below(rng.words(keys, 0xFFFFFFF, 5000 + j), m) for j in range(L)]
    return np.stack(cols, axis=1).astype(np.uint8)


def _run_chunks(n_samples, chunk, workers, fn):
    bounds = [(a, min(a + chunk, n_samples)) for a in range(0, n_samples, chunk)]
    if workers == 1 or len(bounds) == 1:
        parts = [fn(a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda ab: fn(*ab), bounds))
    total = parts[0]
    for p in parts[1:]:
        total = tuple(x + y for x, y in zip(total, p))
    return total


def _check_budget(gate_set, t_max, n_samples, budget):
    budget = DEFAULT_BUDGET if budget is None else budget
    cost = float(t_max) * gate_set.L * n_samples
    if cost > budget:
        raise BudgetError(f"t_max*L*n_samples = {cost:.3g} exceeds budget {budget:.3g}")


def _time_points(t_max, times):
    if times is None:
        return np.arange(t_max + 1, dtype=np.int64)
    times = np.unique(np.asarray(times, dtype=np.int64))
    if times.size == 0 or times[0] < 0 or times[-1] > t_max:
        raise ValueError("recording times must lie in [0, t_max]")
    return times


def estimate_autocorrelation(gate_set, probe_sites, t_max, n_samples, seed, times=None,
                             workers=None, chunk=1 << 17, budget=None):
    """Monte Carlo estimate of C(j,j;t) = <O_j(t) O_j(0)> at infinite temperature.

    Initial configurations are uniform. Accumulators are integers, so the
    result is bit-identical for any worker count.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    probes = np.asarray(probe_sites, dtype=np.int64)
    if np.any(probes < 1) or np.any(probes > gate_set.L):
        raise ValueError("probe sites must lie in [1, L]")
    _check_budget(gate_set, t_max, n_samples, budget)
    tgrid = _time_points(t_max, times)
    workers = _resolve_workers(workers)
    moves = _CompiledMoves(gate_set)
    q = gate_set.charge.astype(np.int64)
    cols = probes - 1

    def work(a, b):
        keys = rng.sample_keys(seed, np.arange(a, b))
        state = _uniform_initial(keys, gate_set.L, gate_set.m)
        o0 = q[state[:, cols]]
        s1 = np.zeros((len(tgrid), len(cols)), dtype=np.int64)
        s2 = np.zeros_like(s1)
        k = 0
        for t in range(int(tgrid[-1]) + 1):
            if t == tgrid[k]:
                prod = o0 * q[state[:, cols]]
                s1[k] = prod.sum(axis=0)
                s2[k] = (prod * prod).sum(axis=0)
                k += 1
                if k == len(tgrid):
                    break
            moves.step(state, keys, t)
        return s1, s2

    s1, s2 = _run_chunks(n_samples, chunk, workers, work)
    mean = s1 / n_samples
    var = np.maximum(s2 / n_samples - mean ** 2, 0.0)
    err = np.sqrt(var / max(n_samples - 1, 1))
    meta = _meta(gate_set, n_samples, seed)
    return [CorrelationSeries(tgrid, mean[:, i], err[:, i], site=int(j), meta=meta) for i, j in enumerate(probes)]


def estimate_magnetization(gate_set, initial, t_max, n_samples, seed, times=None,
                           workers=None, chunk=1 << 16, budget=None):
    """Monte Carlo estimate of the total charge <sum_j O_j(t)> from a fixed initial configuration."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if len(initial) != gate_set.L:
        raise ValueError("initial configuration length does not match gate set")
    _check_budget(gate_set, t_max, n_samples, budget)
    tgrid = _time_points(t_max, times)
    workers = _resolve_workers(workers)
    moves = _CompiledMoves(gate_set)
    q = gate_set.charge.astype(np.int64)
    init = initial.as_array()

    def work(a, b):
        keys = rng.sample_keys(seed, np.arange(a, b))
        state = np.tile(init, (b - a, 1))
        s1 = np.zeros(len(tgrid), dtype=np.int64)
        s2 = np.zeros_like(s1)
        k = 0
        for t in range(int(tgrid[-1]) + 1):
            if t == tgrid[k]:
                tot = q[state].sum(axis=1)
                s1[k] = tot.sum()
                s2[k] = (tot * tot).sum()
                k += 1
                if k == len(tgrid):
                    break
            moves.step(state, keys, t)
        return s1, s2

    s1, s2 = _run_chunks(n_samples, chunk, workers, work)
    mean = s1 / n_samples
    var = np.maximum(s2 / n_samples - mean ** 2, 0.0)
    err = np.sqrt(var / max(n_samples - 1, 1))
    meta = _meta(gate_set, n_samples, seed)
    meta["initial"] = list(initial.states)
    return CorrelationSeries(tgrid, mean, err, site=None, meta=meta)


def _meta(gs, n_samples, seed):
    imp = None if gs.impurity is None else {"kind": gs.impurity.kind, "sites": list(gs.impurity.sites)}
    return {"model": gs.model_id, "L": gs.L, "impurity": imp, "n_samples": int(n_samples), "seed": int(seed)}


# ---------------------------------------------------------------- exact chain


def _check_cap(gs, cap):
    cap = DEFAULT_STATE_CAP if cap is None else cap
    if gs.m ** gs.L > cap:
        raise SizeError(f"{gs.m}^{gs.L} configurations exceed cap {cap}")


def _embedded_rule(rule, m, L):
    """Sparse matrix of one local rule acting on the full configuration space."""
    n = m ** L
    configs = np.arange(n, dtype=np.int64)
    digits = np.stack(np.unravel_index(configs, (m,) * L), axis=1)
    sup = list(rule.support)
    strides = m ** (L - 1 - np.asarray(sup))
    local_w = m ** np.arange(len(sup) - 1, -1, -1)
    local = digits[:, sup] @ local_w
    base = configs - digits[:, sup] @ strides
    mat = rule.local_matrix(m)
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


def transition_matrix(gate_set, cap=None):
    """Exact one-step transition matrix; entry [y, x] is P(x -> y)."""
    _check_cap(gate_set, cap)
    n = gate_set.m ** gate_set.L
    total = sp.csr_matrix((n, n))
    for w, move in zip(gate_set.layer_weights, gate_set.moves()):
        layer = sp.identity(n, format="csr")
        for rule in move:
            layer = _embedded_rule(rule, gate_set.m, gate_set.L) @ layer
        total = total + w * layer
    return total.tocsr()


def _site_values(gate_set, site):
    L, m = gate_set.L, gate_set.m
    digits = np.unravel_index(np.arange(m ** L), (m,) * L)[site - 1]
    return gate_set.charge[digits].astype(float)


def markov_oracle(gate_set, probe_sites, t_max, cap=None, times=None):
    """Exact C(j,j;t) from the transition matrix, zero statistical error."""
    T = transition_matrix(gate_set, cap)
    n = T.shape[0]
    tgrid = _time_points(t_max, times)
    out = []
    for j in probe_sites:
        o = _site_values(gate_set, j)
        v = o.copy()
        vals = np.empty(len(tgrid))
        k = 0
        for t in range(int(tgrid[-1]) + 1):
            if t == tgrid[k]:
                vals[k] = o @ v / n
                k += 1
            if k == len(tgrid):
                break
            v = T @ v
        meta = _meta(gate_set, 0, 0)
        meta["oracle"] = "exact"
        out.append(CorrelationSeries(tgrid, vals, np.zeros_like(vals), site=int(j), meta=meta))
    return out


def markov_cross_correlation(gate_set, j0, t_max, cap=None):
    """Exact C(j,j0;t) for all j; rows are times, columns are sites 1..L."""
    T = transition_matrix(gate_set, cap)
    n = T.shape[0]
    o0 = _site_values(gate_set, j0)
    obs = np.stack([_site_values(gate_set, j) for j in range(1, gate_set.L + 1)])
    v = o0.copy()
    out = np.empty((t_max + 1, gate_set.L))
    for t in range(t_max + 1):
        out[t] = obs @ v / n
        v = T @ v
    return out


def enumerate_krylov(gate_set, cap=None):
    """Connected components of the configuration graph spanned by every rule's moves."""
    _check_cap(gate_set, cap)
    L, m = gate_set.L, gate_set.m
    n = m ** L
    configs = np.arange(n, dtype=np.int64)
    digits = np.stack(np.unravel_index(configs, (m,) * L), axis=1)
    src, dst = [], []
    for rule in gate_set.all_rules():
        sup = list(rule.support)
        strides = m ** (L - 1 - np.asarray(sup))
        local_w = m ** np.arange(len(sup) - 1, -1, -1)
        local = digits[:, sup] @ local_w
        base = configs - digits[:, sup] @ strides
        loc_digits = np.stack(np.unravel_index(np.arange(m ** len(sup)), (m,) * len(sup)), axis=1)
        offsets = loc_digits @ strides
        if rule.resample:
            targets = [base + offsets[0]]
        else:
            targets = [base + offsets[rule.partner_table(m)[local]]]
        for tgt in targets:
            src.append(configs)
            dst.append(tgt)
    if src:
        src, dst = np.concatenate(src), np.concatenate(dst)
    else:
        src = dst = np.zeros(0, dtype=np.int64)
    graph = sp.coo_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(n, n))
    count, labels = connected_components(graph, directed=False)
    sizes = np.bincount(labels)
    return KrylovReport(int(count), dict(sorted(Counter(sizes.tolist()).items())))
