"""Declarative experiment descriptors: validation, dispatch, persistence, comparison.

A descriptor is a YAML mapping. Required keys are `experiment_id` and
`engine` (automaton, hydro, continuum or superham); `task` picks what the
engine computes. Results go to `<output>/<experiment_id>/` as one CSV per
table plus `bundle.json` holding the descriptor, toolkit version, wall clock
and a provenance hash of the canonical descriptor.
"""
from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import automaton as ca
from . import continuum as co
from . import hydro
from . import superham as sh
from .errors import GridMismatch, ValidationError
from .series import CorrelationSeries, log_time_grid, write_table

ENGINES = ("automaton", "hydro", "continuum", "superham")
TASKS = {
    "automaton": ("autocorrelation", "oracle", "krylov", "acceptance"),
    "hydro": ("autocorrelation", "spectrum", "acceptance"),
    "continuum": ("kernel", "catalogue", "modes", "acceptance"),
    "superham": ("spectrum", "gap_scaling", "effective_correlation", "acceptance"),
}
DEFAULT_OUTPUT = "results"


@dataclass(frozen=True)
class ExperimentDescriptor:
    experiment_id: str
    engine: str
    task: str
    model: str | None = None
    L: object = None                 # int or list of ints
    impurity: dict | None = None     # {kind, sites, g}
    probe_sites: tuple = ()
    time_grid: dict = field(default_factory=dict)
    samples: int | None = None
    seed: int = 0
    output: str = DEFAULT_OUTPUT
    criterion: int | None = None
    params: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "experiment_id": self.experiment_id, "engine": self.engine, "task": self.task,
            "model": self.model, "L": self.L, "impurity": self.impurity,
            "probe_sites": list(self.probe_sites), "time_grid": dict(self.time_grid),
            "samples": self.samples, "seed": self.seed, "output": self.output,
            "criterion": self.criterion, "params": dict(self.params),
        }

    def provenance_hash(self):
        d = self.as_dict()
        d.pop("output")
        blob = json.dumps({"descriptor": d, "version": __version__}, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def sizes(self):
        return list(self.L) if isinstance(self.L, (list, tuple)) else [self.L]

    def times(self):
        return build_time_grid(self.time_grid)


@dataclass
class ResultBundle:
    descriptor: ExperimentDescriptor
    tables: dict                       # name -> (header, columns)
    summary: dict
    series: list = field(default_factory=list)
    wall_clock: float = 0.0
    paths: list = field(default_factory=list)

    @property
    def provenance_hash(self):
        return self.descriptor.provenance_hash()

    def sidecar(self):
        return {"descriptor": self.descriptor.as_dict(), "version": __version__,
                "provenance_hash": self.provenance_hash, "wall_clock_s": self.wall_clock,
                "summary": self.summary, "tables": sorted(self.tables)}


# ---------------------------------------------------------------- validation

def _fail(path, msg):
    raise ValidationError(msg, field=path)


def build_time_grid(spec):
    spec = dict(spec or {})
    kind = spec.get("kind", "log")
    if kind == "log":
        grid = log_time_grid(float(spec.get("t_min", 1.0)), float(spec.get("t_max", 100.0)),
                             int(spec.get("per_decade", 20)), bool(spec.get("integer", False)))
    elif kind == "linear":
        grid = np.arange(int(spec.get("t_min", 0)), int(spec.get("t_max", 100)) + 1,
                         int(spec.get("step", 1)))
    elif kind == "explicit":
        grid = np.asarray(spec["values"], dtype=float)
    else:
        _fail("time_grid.kind", f"unknown grid kind {kind!r}")
    return grid


def validate(raw):
    """Turn a parsed mapping into an ExperimentDescriptor or raise ValidationError."""
    if not isinstance(raw, dict):
        _fail("", "descriptor must be a mapping")
    for key in ("experiment_id", "engine"):
        if key not in raw:
            _fail(key, "missing required field")
    engine = raw["engine"]
    if engine not in ENGINES:
        _fail("engine", f"must be one of {ENGINES}")
    task = raw.get("task", TASKS[engine][0])
    if task not in TASKS[engine]:
        _fail("task", f"{engine} supports {TASKS[engine]}")
    L = raw.get("L")
    sizes = L if isinstance(L, list) else [L]
    if L is not None:
        for i, n in enumerate(sizes):
            if not isinstance(n, int) or n < 1:
                _fail(f"L[{i}]" if isinstance(L, list) else "L", "system size must be a positive integer")
    imp = raw.get("impurity")
    if imp is not None:
        if not isinstance(imp, dict) or "kind" not in imp:
            _fail("impurity", "impurity needs at least a 'kind'")
        for i, s in enumerate(imp.get("sites", [])):
            if not isinstance(s, int) or s < 1 or (L is not None and s > min(sizes)):
                _fail(f"impurity.sites[{i}]", f"site {s} outside [1, L]")
        if imp.get("g", 1.0) < 0:
            _fail("impurity.g", "impurity strength must be non-negative")
    probes = raw.get("probe_sites", [])
    for i, s in enumerate(probes):
        if L is not None and not all(1 <= s <= n for n in sizes):
            _fail(f"probe_sites[{i}]", f"site {s} outside [1, L]")
    samples = raw.get("samples")
    if samples is not None and (not isinstance(samples, int) or samples <= 0):
        _fail("samples", "sample budget must be a positive integer")
    tg = raw.get("time_grid", {})
    if tg:
        try:
            grid = build_time_grid(tg)
        except (KeyError, ValueError, TypeError) as exc:
            _fail("time_grid", str(exc))
        if len(grid) > 1 and np.any(np.diff(grid) <= 0):
            _fail("time_grid", "time grid must be strictly increasing")
    crit = raw.get("criterion")
    if task == "acceptance" and crit is None:
        _fail("criterion", "acceptance tasks need a criterion number")
    known = {"experiment_id", "engine", "task", "model", "L", "impurity", "probe_sites",
             "time_grid", "samples", "seed", "output", "criterion", "params"}
    extra = set(raw) - known
    if extra:
        _fail(sorted(extra)[0], "unknown field")
    return ExperimentDescriptor(
        experiment_id=str(raw["experiment_id"]), engine=engine, task=task,
        model=raw.get("model"), L=L, impurity=imp, probe_sites=tuple(probes),
        time_grid=dict(tg), samples=samples, seed=int(raw.get("seed", 0)),
        output=str(raw.get("output", DEFAULT_OUTPUT)), criterion=crit,
        params=dict(raw.get("params", {})))


def load_descriptor(path):
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    return validate(raw)


def shipped_descriptors():
    """Descriptors bundled with the package, sorted by file name."""
    root = resources.files("relaxkit") / "descriptors"
    out = []
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".yaml"):
            out.append(validate(yaml.safe_load(entry.read_text())))
    return out


# ---------------------------------------------------------------- engines

def _imp_spec(desc, L=None):
    imp = desc.impurity
    if imp is None:
        return None
    sites = tuple(int(s) for s in imp.get("sites", ()))
    if L is not None and not sites:
        sites = (L,)
    return ca.ImpuritySpec(imp["kind"], sites)


def _series_tables(series, prefix="C"):
    tables = {}
    for s in series:
        tables[f"{prefix}_site{s.site}"] = (["t", "value", "stderr"], [s.times, s.values, s.std_errors])
    return tables


def _run_automaton(d, workers, budget):
    L = d.sizes()[0]
    gs = ca.build_gate_set(d.model, L, _imp_spec(d))
    if d.task == "krylov":
        rep = ca.enumerate_krylov(gs, d.params.get("cap"))
        sizes = sorted(rep.size_histogram.items())
        return ({"krylov_sizes": (["size", "count"], [[a for a, _ in sizes], [b for _, b in sizes]])},
                {"subspace_count": rep.subspace_count}, [])
    times = d.times().astype(np.int64)
    t_max = int(times[-1])
    probes = list(d.probe_sites) or list(range(1, L + 1))
    if d.task == "oracle":
        series = ca.markov_oracle(gs, probes, t_max, times=times)
    else:
        if d.samples is None:
            _fail("samples", "Monte Carlo runs need a sample budget")
        series = ca.estimate_autocorrelation(gs, probes, t_max, d.samples, d.seed, times=times,
                                             workers=workers, budget=budget)
    return _series_tables(series), {"n_series": len(series)}, series


def _hydro_operator(d, L):
    imp = d.impurity
    if d.model in ("U1", "U1_half"):
        spec = None if imp is None else [(int(s), float(imp.get("g", 1.0))) for s in imp.get("sites", [1])]
        return hydro.build_u1(L, d.params.get("bc", "OBC"), spec)
    spec = None if imp is None else (imp["kind"], float(imp.get("g", 1.0)))
    return hydro.build_dipole(L, impurity=spec)


def _run_hydro(d, workers, budget):
    L = d.sizes()[0]
    H = _hydro_operator(d, L)
    if d.task == "spectrum":
        E = hydro.eigh(H).energies
        return {"spectrum": (["index", "energy"], [np.arange(len(E)), E])}, {"L": L}, []
    probes = list(d.probe_sites) or [1]
    series = hydro.spectral_correlation(H, probes, d.times())
    summary = {}
    for w in d.params.get("fit_windows", []):
        for s in series:
            f = hydro.fit_power_law(s, tuple(w))
            summary[f"exponent_site{s.site}_{w[0]:g}_{w[1]:g}"] = f.exponent
    return _series_tables(series), summary, series


def _run_continuum(d, workers, budget):
    p = d.params
    if d.task == "catalogue":
        rep = co.validate_catalogue(float(p.get("regime_value", 10.0)))
        keys = sorted(rep)
        cols = [["/".join(k) for k in keys], [rep[k]["t"] for k in keys], [rep[k]["regime"] for k in keys],
                [rep[k]["exact"] for k in keys], [rep[k]["predicted"] for k in keys],
                [rep[k]["rel_dev"] for k in keys]]
        return ({"catalogue": (["entry", "t", "regime", "exact", "predicted", "rel_dev"], cols)},
                {"max_rel_dev": max(rep[k]["rel_dev"] for k in keys)}, [])
    if d.task == "modes":
        L = d.sizes()[0]
        fam = co.biharmonic_modes(L, p.get("bc_kind", "symmetric"), int(p.get("n_modes", 3)))
        x = np.arange(L) + 0.5
        cols = [np.arange(1, L + 1)] + [fam.evaluate(n, x) for n in range(len(fam.roots))]
        head = ["j"] + [f"phi_{n + 1}" for n in range(len(fam.roots))]
        return {"modes": (head, cols)}, {"kL_over_pi": (fam.roots * L / math.pi).tolist()}, []
    times = d.times()
    geometry = p.get("geometry", "sink")
    vals = []
    for t in times:
        q = co.ContinuumParams(float(p.get("D", 1.0)), float(p.get("g", 0.0)), float(p.get("x", 0.0)),
                               float(p.get("x0", 0.0)), float(p.get("xs", 0.0)), float(t))
        if geometry == "sink":
            vals.append(co.diffusion_with_sink(q))
        elif geometry == "boundary":
            vals.append(co.diffusion_boundary_impurity(q))
        else:
            vals.append(co.subdiffusion_kernel(q, geometry))
    s = CorrelationSeries(times, np.array(vals), np.zeros(len(times)), meta={"geometry": geometry})
    return {"kernel": (["t", "value", "stderr"], [times, s.values, s.std_errors])}, {}, [s]


def _run_superham(d, workers, budget):
    if d.task == "effective_correlation":
        L = d.sizes()[0]
        probes = list(d.probe_sites) or [1]
        series = [sh.effective_correlation_tjz(L, j, d.times(), float(d.params.get("g", 1.0))) for j in probes]
        return _series_tables(series), {}, series
    g = float((d.impurity or {}).get("g", 1.0))
    n_eigs = int(d.params.get("n_eigs", 3))
    rows_L, rows_gap, tables, summary = [], [], {}, {}
    for L in d.sizes():
        imp = None
        if d.impurity is not None:
            sites = tuple(int(s) for s in d.impurity.get("sites", [L]))
            imp = (d.impurity["kind"], sites)
        H = sh.build_super_hamiltonian(d.model, L, imp, g)
        spec = sh.low_spectrum(H, n_eigs)
        if d.task == "spectrum":
            tables[f"spectrum_L{L}"] = (["index", "energy"], [np.arange(len(spec.energies)), spec.energies])
        rows_L.append(L)
        rows_gap.append(spec.energies[1] if len(spec.energies) > 1 else float("nan"))
    if d.task == "gap_scaling":
        tables["gap_scaling"] = (["L", "gap"], [rows_L, rows_gap])
        if len(rows_L) >= 2:
            summary["gap_exponent"] = float(np.polyfit(np.log(rows_L), np.log(rows_gap), 1)[0])
    return tables, summary, []


_DISPATCH = {"automaton": _run_automaton, "hydro": _run_hydro,
             "continuum": _run_continuum, "superham": _run_superham}


def run(descriptor, output=None, workers=None, budget=None, write=True):
    """Execute a descriptor and (optionally) persist its tables and JSON sidecar."""
    if isinstance(descriptor, dict):
        descriptor = validate(descriptor)
    start = time.perf_counter()
    if descriptor.task == "acceptance":
        from .acceptance import run_check
        res = run_check(descriptor)
        tables, summary, series = res.tables, {"passed": res.passed, "summary": res.summary,
                                               **res.values}, []
    else:
        try:
            tables, summary, series = _DISPATCH[descriptor.engine](descriptor, workers, budget)
        except ValidationError:
            raise
        except Exception as exc:
            raise type(exc)(f"[{descriptor.experiment_id}] {exc}") from exc
    bundle = ResultBundle(descriptor, tables, summary, series, time.perf_counter() - start)
    if write:
        out = Path(output or descriptor.output) / descriptor.experiment_id
        out.mkdir(parents=True, exist_ok=True)
        for name, (header, cols) in sorted(tables.items()):
            path = out / f"{name}.csv"
            write_table(path, header, cols)
            bundle.paths.append(path)
        side = out / "bundle.json"
        side.write_text(json.dumps(bundle.sidecar(), indent=2, sort_keys=True, default=_plain) + "\n")
        bundle.paths.append(side)
    return bundle


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


# ---------------------------------------------------------------- comparison

@dataclass(frozen=True)
class ComparisonReport:
    passed: bool
    pass_fraction: float
    z_scores: list              # per series, array of |z|
    exponents: dict
    n_sigma: float

    def as_dict(self):
        return {"passed": self.passed, "pass_fraction": self.pass_fraction,
                "max_z": [float(np.max(z)) if len(z) else 0.0 for z in self.z_scores],
                "exponents": self.exponents, "n_sigma": self.n_sigma}


def _zs(a, b):
    diff = np.abs(a.values - b.values)
    err = np.sqrt(a.std_errors ** 2 + b.std_errors ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(err > 0, diff / err, np.where(diff <= 1e-12, 0.0, np.inf))
    return z


def compare(result, oracle, tolerance=None):
    """Per-point z-scores of `result` against `oracle` plus optional power-law fits.

    tolerance keys: n_sigma (4), min_pass_fraction (0.99), interpolate (False),
    windows (list of [t_lo, t_hi] fitted on both series).
    """
    tol = {"n_sigma": 4.0, "min_pass_fraction": 0.99, "interpolate": False, "windows": []}
    tol.update(tolerance or {})
    result = result if isinstance(result, (list, tuple)) else [result]
    oracle = oracle if isinstance(oracle, (list, tuple)) else [oracle]
    if len(result) != len(oracle):
        raise GridMismatch(f"{len(result)} series against {len(oracle)} oracle series")
    zs, exps = [], {}
    for a, b in zip(result, oracle):
        if len(a.times) != len(b.times) or not np.allclose(a.times, b.times):
            if not tol["interpolate"]:
                raise GridMismatch(f"time grids differ for site {a.site}")
            if a.times[0] < b.times[0] or a.times[-1] > b.times[-1]:
                raise GridMismatch("cannot interpolate outside the oracle grid")
            b = CorrelationSeries(a.times, np.interp(a.times, b.times, b.values),
                                  np.interp(a.times, b.times, b.std_errors), site=b.site)
        zs.append(_zs(a, b))
        for w in tol["windows"]:
            key = f"site{a.site}_{w[0]:g}_{w[1]:g}"
            exps[key] = {"result": hydro.fit_power_law(a, tuple(w)).exponent,
                         "oracle": hydro.fit_power_law(b, tuple(w)).exponent}
    allz = np.concatenate(zs) if zs else np.zeros(0)
    frac = float(np.mean(allz <= tol["n_sigma"])) if allz.size else 1.0
    return ComparisonReport(frac >= tol["min_pass_fraction"], frac, zs, exps, tol["n_sigma"])


def load_series_dir(path):
    """Read every C_site*.csv from a result directory, sorted by site."""
    out = []
    for p in sorted(Path(path).glob("C_site*.csv"), key=lambda q: int(q.stem[6:])):
        out.append(CorrelationSeries.from_csv(p, site=int(p.stem[6:])))
    return out
