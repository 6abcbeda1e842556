import json

import numpy as np
import pytest

from relaxkit import automaton as ca
from relaxkit import experiment as ex
from relaxkit.acceptance import CHECKS
from relaxkit.errors import GridMismatch, ValidationError
from relaxkit.series import CorrelationSeries

BASE = {
    "experiment_id": "small_u1",
    "engine": "automaton",
    "task": "autocorrelation",
    "model": "U1_half",
    "L": 6,
    "impurity": {"kind": "flip", "sites": [1], "g": 1.0},
    "probe_sites": [1, 3],
    "time_grid": {"kind": "log", "t_min": 1, "t_max": 200, "per_decade": 10, "integer": True},
    "samples": 20000,
    "seed": 4,
}


@pytest.mark.parametrize("patch,field", [
    ({"samples": 0}, "samples"),
    ({"engine": "quantum"}, "engine"),
    ({"probe_sites": [1, 9]}, "probe_sites[1]"),
    ({"impurity": {"kind": "flip", "sites": [0]}}, "impurity.sites[0]"),
    ({"L": [4, -2]}, "L[1]"),
    ({"time_grid": {"kind": "explicit", "values": [3, 2]}}, "time_grid"),
    ({"colour": "red"}, "colour"),
    ({"task": "acceptance"}, "criterion"),
])
def test_validation_reports_field_path(patch, field):
    with pytest.raises(ValidationError) as err:
        ex.validate({**BASE, **patch})
    assert err.value.field == field


def test_missing_field():
    raw = dict(BASE)
    del raw["engine"]
    with pytest.raises(ValidationError) as err:
        ex.validate(raw)
    assert err.value.field == "engine"


def test_rerun_is_byte_identical(tmp_path):
    a = ex.run(BASE, output=tmp_path / "a")
    b = ex.run(BASE, output=tmp_path / "b")
    names = sorted(p.name for p in a.paths if p.suffix == ".csv")
    assert names
    for n in names:
        assert (tmp_path / "a" / "small_u1" / n).read_bytes() == (tmp_path / "b" / "small_u1" / n).read_bytes()
    side = json.loads((tmp_path / "a" / "small_u1" / "bundle.json").read_text())
    assert side["provenance_hash"] == a.provenance_hash == b.provenance_hash
    assert side["descriptor"]["seed"] == 4 and "version" in side


def test_bundle_reproducible_from_metadata(tmp_path):
    a = ex.run(BASE, output=tmp_path / "a")
    side = json.loads((tmp_path / "a" / "small_u1" / "bundle.json").read_text())
    b = ex.run(side["descriptor"], output=tmp_path / "b")
    assert b.provenance_hash == a.provenance_hash
    for s, t in zip(a.series, b.series):
        assert np.array_equal(s.values, t.values)


def test_compare_ca_against_oracle(tmp_path):
    desc = {**BASE, "samples": 100000, "probe_sites": [1, 2, 3, 4, 5, 6]}
    res = ex.run(desc, output=tmp_path / "r")
    orc = ex.run({**desc, "experiment_id": "small_oracle", "task": "oracle"}, output=tmp_path / "o")
    rep = ex.compare(ex.load_series_dir(tmp_path / "r" / "small_u1"),
                     ex.load_series_dir(tmp_path / "o" / "small_oracle"))
    assert rep.passed and rep.pass_fraction >= 0.99


def test_compare_identical_and_grid_mismatch():
    t = np.arange(1.0, 20.0)
    s = CorrelationSeries(t, t ** -0.5, 0.01 * np.ones_like(t), site=1)
    rep = ex.compare([s], [s], {"windows": [(1, 19)]})
    assert rep.passed and all(np.all(z == 0) for z in rep.z_scores)
    w = rep.exponents["site1_1_19"]
    assert np.isclose(w["result"], -0.5) and np.isclose(w["oracle"], -0.5)
    other = CorrelationSeries(t[:-1], t[:-1] ** -0.5, np.zeros(len(t) - 1), site=1)
    with pytest.raises(GridMismatch):
        ex.compare([s], [other])
    fine = CorrelationSeries(np.linspace(1, 19, 200), np.linspace(1, 19, 200) ** -0.5, np.zeros(200), site=1)
    assert ex.compare([s], [fine], {"interpolate": True}).pass_fraction >= 0.9


def test_hydro_series_against_continuum_exponent(tmp_path):
    desc = {"experiment_id": "hyd", "engine": "hydro", "task": "autocorrelation", "model": "U1", "L": 1500,
            "impurity": {"kind": "sink", "sites": [1], "g": 1.0}, "probe_sites": [4],
            "time_grid": {"t_min": 0.1, "t_max": 1.0e5}, "params": {"fit_windows": [[1.0e3, 1.0e5]]}}
    b = ex.run(desc, output=tmp_path)
    assert abs(b.summary["exponent_site4_1000_100000"] + 1.5) < 0.05


def test_superham_and_continuum_tasks(tmp_path):
    b = ex.run({"experiment_id": "gaps", "engine": "superham", "task": "gap_scaling", "model": "tJz",
                "L": [3, 4, 5], "impurity": {"kind": "state_flip"}}, output=tmp_path)
    L, gap = b.tables["gap_scaling"][1]
    assert all(g <= 3 / (3 ** n - 1) for n, g in zip(L, gap))
    m = ex.run({"experiment_id": "modes", "engine": "continuum", "task": "modes", "L": 50,
                "params": {"bc_kind": "fully_breaking", "n_modes": 2}}, output=tmp_path)
    assert (tmp_path / "modes" / "modes.csv").read_text().startswith("j,phi_1,phi_2")
    assert len(m.summary["kL_over_pi"]) == 2


def test_shipped_descriptor_for_every_criterion():
    descs = ex.shipped_descriptors()
    crits = sorted(d.criterion for d in descs if d.task == "acceptance")
    assert crits == sorted(CHECKS)
    assert len({d.experiment_id for d in descs}) == len(descs)
