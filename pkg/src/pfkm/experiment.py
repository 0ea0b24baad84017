"""Cost-of-fairness experiment harness: datasets x k grid, one CSV row and
one JSON report per run."""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .dataset import DatasetSchema, load_instance
from .pipeline import RunConfig, solve, write_assignment_csv

log = logging.getLogger(__name__)

RESULT_COLUMNS = ["dataset", "k", "t", "vanilla_cost", "fair_cost", "post_cost"]
TIMING_COLUMNS = ["dataset", "k", "vanilla_time", "fair_time"]


@dataclass
class DatasetSpec:
    name: str
    path: str
    schema: DatasetSchema


@dataclass
class ExperimentConfig:
    datasets: list
    k_values: list = field(default_factory=lambda: [5, 10, 15, 20])
    seed: int = 0
    d_mode: str = "geometric"
    post: bool = True
    lp_backend: str = "auto"
    subsample: Optional[int] = None  # overrides every schema's sample size
    out_dir: str = "results"

    @classmethod
    def from_dict(cls, d: dict, base_dir: Optional[Path] = None) -> "ExperimentConfig":
        base_dir = Path(base_dir or ".")
        specs = []
        for entry in d["datasets"]:
            path = resolve_path(entry["path"], base_dir)
            schema = entry["schema"]
            if isinstance(schema, str):
                schema = DatasetSchema.from_json(resolve_path(schema, base_dir))
            else:
                schema = DatasetSchema.from_dict(schema)
            specs.append(DatasetSpec(entry.get("name", Path(path).stem), path, schema))
        out = d.get("out_dir", "results")
        return cls(
            datasets=specs,
            k_values=[int(k) for k in d.get("k", [5, 10, 15, 20])],
            seed=int(d.get("seed", 0)),
            d_mode=d.get("d_mode", "geometric"),
            post=bool(d.get("post", True)),
            lp_backend=d.get("lp_backend", "auto"),
            subsample=d.get("subsample"),
            out_dir=str(resolve_path(out, base_dir)) if not os.path.isabs(out) else out,
        )

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh), Path(path).resolve().parent)


def resolve_path(p: str, base_dir: Path) -> str:
    """``pkg:<file>`` names a file shipped in ``pfkm/data``; relative paths
    are taken from the config file's directory."""
    if p.startswith("pkg:"):
        return str(resources.files("pfkm") / "data" / p[4:])
    path = Path(p)
    return str(path if path.is_absolute() else base_dir / path)


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def run_experiment(config: ExperimentConfig) -> dict:
    """Runs every (dataset, k); returns ``{"rows": [...], "failures": [...]}``.

    Writes ``experiment.csv`` (deterministic costs), ``timings.csv``
    (wall-clock), ``reports/<dataset>_k<k>.json`` and
    ``assignments/<dataset>_k<k>.csv`` under ``config.out_dir``.
    """
    out = Path(config.out_dir)
    (out / "reports").mkdir(parents=True, exist_ok=True)
    (out / "assignments").mkdir(parents=True, exist_ok=True)
    rows, timing_rows, failures = [], [], []
    run_cfg = RunConfig(d_mode=config.d_mode, seed=config.seed, post=config.post,
                        lp_backend=config.lp_backend)
    for ds in config.datasets:
        schema = ds.schema
        if schema.subsample is not None or config.subsample is not None:
            count = config.subsample if config.subsample is not None else schema.subsample[0]
            schema = DatasetSchema(schema.group_column, schema.numeric_columns,
                                   (count, run_cfg.subsample_seed), schema.normalization)
        for k in config.k_values:
            try:
                inst, load = load_instance(ds.path, schema, k, "min_feasible")
                sol, report, _ = solve(inst, run_cfg)
            except Exception as exc:  # reported, remaining runs continue
                log.error("dataset %s, k=%d failed: %s", ds.name, k, exc)
                failures.append({"dataset": ds.name, "k": k, "error": f"{type(exc).__name__}: {exc}"})
                continue
            report.subsample_seed = schema.subsample[1] if schema.subsample else None
            tag = f"{ds.name}_k{k}"
            doc = report.to_dict()
            doc["dataset"] = ds.name
            doc["load_report"] = json.loads(load.to_json())
            with open(out / "reports" / f"{tag}.json", "w") as fh:
                fh.write(json.dumps(doc, sort_keys=True, indent=1, default=float) + "\n")
            write_assignment_csv(inst, sol.assignment, out / "assignments" / f"{tag}.csv")
            rows.append({"dataset": ds.name, "k": k, "t": inst.t,
                         "vanilla_cost": report.vanilla_cost, "fair_cost": report.fair_cost,
                         "post_cost": report.post_cost})
            timing_rows.append({"dataset": ds.name, "k": k,
                                "vanilla_time": report.timings["vanilla"],
                                "fair_time": report.timings["fair"]})
            log.info("%s k=%d t=%d vanilla=%.6g fair=%.6g", ds.name, k, inst.t,
                     report.vanilla_cost, report.fair_cost)
    with open(out / "experiment.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            w.writerow([r["dataset"], r["k"], r["t"], _fmt(r["vanilla_cost"]),
                        _fmt(r["fair_cost"]), _fmt(r["post_cost"])])
    with open(out / "timings.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMING_COLUMNS)
        for r in timing_rows:
            w.writerow([r["dataset"], r["k"], f"{r['vanilla_time']:.6f}", f"{r['fair_time']:.6f}"])
    if failures:
        with open(out / "failures.json", "w") as fh:
            json.dump(failures, fh, indent=1)
    return {"rows": rows, "timings": timing_rows, "failures": failures}
