"""Time series container shared by every engine, plus CSV/JSON writers."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class CorrelationSeries:
    times: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    site: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        e = np.asarray(self.std_errors, dtype=float)
        if not (t.shape == v.shape == e.shape) or t.ndim != 1:
            raise ValueError("times, values and std_errors must be 1-d and equally long")
        if np.any(e < 0):
            raise ValueError("standard errors must be non-negative")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "std_errors", e)

    def __len__(self):
        return len(self.times)

    def to_csv(self, path):
        path = Path(path)
        lines = ["t,value,stderr"]
        for t, v, e in zip(self.times, self.values, self.std_errors):
            lines.append(f"{t!r},{v!r},{e!r}")
        path.write_text("\n".join(lines) + "\n")

    def sidecar(self):
        return {"site": self.site, "n_points": len(self), "meta": self.meta}

    def to_json(self, path):
        Path(path).write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True, default=_jsonable) + "\n")

    @classmethod
    def from_csv(cls, path, site=None, meta=None):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], data[:, 2], site=site, meta=meta or {})


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "__dict__"):
        return vars(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def write_table(path, header, columns):
    """Write equally long columns as a CSV table with the given header names."""
    cols = [np.asarray(c) for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(repr(x.item() if isinstance(x, np.generic) else x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def log_time_grid(t_min, t_max, per_decade=20, integer=False):
    """Log-spaced grid; integer grids are rounded and deduplicated."""
    n = max(2, int(round(per_decade * np.log10(t_max / t_min))) + 1)
    grid = np.logspace(np.log10(t_min), np.log10(t_max), n)
    if integer:
        grid = np.unique(np.round(grid).astype(np.int64))
    return grid
