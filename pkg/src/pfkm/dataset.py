"""CSV ingestion: one categorical column gives the groups, numeric columns
(normalized) give Euclidean coordinates."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from .instance import Instance, InstanceError, Metric, min_feasible_t

MISSING = {"", "?", "na", "nan", "null", "none"}


class DatasetError(ValueError):
    pass


@dataclass
class DatasetSchema:
    group_column: str
    numeric_columns: list
    subsample: Optional[tuple] = None  # (count, seed)
    normalization: str = "minmax"

    def __post_init__(self):
        if self.group_column in self.numeric_columns:
            raise DatasetError("the group column cannot also be numeric")
        if self.normalization not in ("minmax", "zscore", "none"):
            raise DatasetError(f"unknown normalization {self.normalization!r}")
        if self.subsample is not None:
            self.subsample = (int(self.subsample[0]), int(self.subsample[1]))

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSchema":
        sub = d.get("subsample")
        if isinstance(sub, dict):
            sub = (sub["count"], sub.get("seed", 0))
        return cls(d["group_column"], list(d["numeric_columns"]), sub,
                   d.get("normalization", "minmax"))

    @classmethod
    def from_json(cls, path) -> "DatasetSchema":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class LoadReport:
    rows_read: int = 0
    rows_dropped: int = 0
    group_sizes: dict = field(default_factory=dict)
    t_used: int = 0
    normalization: str = "minmax"
    subsample: Optional[list] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def normalize(X: np.ndarray, how: str) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if how == "none":
        return X.copy()
    if how == "minmax":
        lo, hi = X.min(0), X.max(0)
        span = np.where(hi > lo, hi - lo, 1.0)
        out = (X - lo) / span
        out[:, hi <= lo] = 0.0
        return out
    if how == "zscore":
        mu, sd = X.mean(0), X.std(0)
        out = (X - mu) / np.where(sd > 0, sd, 1.0)
        out[:, sd <= 0] = 0.0
        return out
    raise DatasetError(f"unknown normalization {how!r}")


def _open(csv_source):
    if hasattr(csv_source, "read"):
        return csv_source, False
    if isinstance(csv_source, str) and "\n" in csv_source:
        return io.StringIO(csv_source), False
    return open(csv_source, newline="", encoding="utf-8"), True


def read_rows(csv_source, schema: DatasetSchema):
    """Parse and filter; returns ``(labels, names, X, report)``."""
    fh, close = _open(csv_source)
    try:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DatasetError("empty CSV file")
        header = [h.strip() for h in reader.fieldnames]
        reader.fieldnames = header
        for col in [schema.group_column, *schema.numeric_columns]:
            if col not in header:
                raise DatasetError(f"column {col!r} not in CSV header")
        names, labels, rows = [], [], []
        index = {}
        read = dropped = 0
        for line, rec in enumerate(reader, start=2):
            read += 1
            g = (rec.get(schema.group_column) or "").strip()
            vals = [(rec.get(c) or "").strip() for c in schema.numeric_columns]
            if g.lower() in MISSING or any(v.lower() in MISSING for v in vals):
                dropped += 1
                continue
            try:
                nums = [float(v) for v in vals]
            except ValueError as exc:
                raise DatasetError(f"line {line}: {exc}") from None
            if not all(math.isfinite(v) for v in nums):
                dropped += 1
                continue
            if g not in index:
                index[g] = len(index)
                names.append(g)
            labels.append(index[g])
            rows.append(nums)
    finally:
        if close:
            fh.close()
    if read == 0:
        raise DatasetError("CSV has a header but no rows")
    if not rows:
        raise DatasetError("every row was dropped")
    X = np.asarray(rows, dtype=float).reshape(len(rows), len(schema.numeric_columns))
    report = LoadReport(rows_read=read, rows_dropped=dropped, normalization=schema.normalization)
    return np.asarray(labels, dtype=np.intp), names, X, report


def subsample(instance: Instance, count: int, seed: int) -> Instance:
    """Uniform sample without replacement; if a group comes up empty, redraw
    with one guaranteed point per group."""
    n, ell = instance.n, instance.n_groups
    if count < ell:
        raise DatasetError(f"cannot keep {ell} groups with only {count} points")
    if count > n:
        raise DatasetError(f"count {count} exceeds n={n}")
    if count == n:
        return instance
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(n, size=count, replace=False))
    if np.all(instance.membership[idx].any(axis=0)):
        return instance.take(idx)
    picks = []
    for a in range(ell):
        members = np.flatnonzero(instance.membership[:, a])
        picks.append(int(rng.choice(members)))
    rest = np.setdiff1d(np.arange(n), picks)
    more = rng.choice(rest, size=count - len(set(picks)), replace=False)
    idx = np.sort(np.unique(np.concatenate([picks, more])))
    return instance.take(idx)


def load_instance(csv_source, schema: DatasetSchema, k: int,
                  t_mode: Union[int, str] = "min_feasible"):
    """Returns ``(Instance, LoadReport)``.

    ``t_mode`` is an explicit integer or ``"min_feasible"``.
    """
    labels, names, X, report = read_rows(csv_source, schema)
    if len(names) < 2 and t_mode == "min_feasible":
        raise DatasetError("min_feasible t needs at least two groups")
    if len(names) < 2:
        raise DatasetError("need at least two groups")
    coords = normalize(X, schema.normalization)
    mem = np.zeros((labels.size, len(names)), dtype=bool)
    mem[np.arange(labels.size), labels] = True
    inst = Instance(Metric(coords=coords), mem, k=k, t=1, group_names=tuple(names))
    if schema.subsample is not None:
        count, seed = schema.subsample
        inst = subsample(inst, min(count, inst.n), seed)
        report.subsample = [count, seed]
    sizes = inst.group_sizes()
    if np.any(sizes == 0):
        raise DatasetError("a group has no rows after filtering")
    t = min_feasible_t(sizes) if t_mode == "min_feasible" else int(t_mode)
    inst = inst.with_t(t)
    report.group_sizes = {nm: int(s) for nm, s in zip(names, sizes)}
    report.t_used = t
    return inst, report
