"""Generate the synthetic bank-style and adult-style CSVs shipped in
``src/pfkm/data``. Deterministic: rerunning rewrites identical bytes."""

import csv
import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "pfkm" / "data"


def bank(rng, n):
    marital = rng.choice(["married", "single", "divorced"], size=n, p=[0.60, 0.28, 0.12])
    base_age = np.where(marital == "single", 31, np.where(marital == "married", 43, 47))
    age = np.clip(np.round(rng.normal(base_age, 9)), 18, 95).astype(int)
    balance = np.round(rng.lognormal(6.5, 1.4, n) - 400).astype(int)
    duration = np.round(rng.gamma(1.6, 160, n)).astype(int)
    rows = [[str(a), m, str(b), str(d)] for a, m, b, d in zip(age, marital, balance, duration)]
    for r in rng.choice(n, size=n // 100, replace=False):
        rows[r][rng.integers(0, 4)] = "?" if rng.random() < 0.5 else ""
    return ["age", "marital", "balance", "duration"], rows


def adult(rng, n):
    races = ["White", "Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other"]
    race = rng.choice(races, size=n, p=[0.854, 0.096, 0.031, 0.010, 0.009])
    centers = rng.normal(0, 1, size=(6, 3))
    comp = rng.integers(0, 6, n)
    z = centers[comp] + rng.normal(0, 0.5, size=(n, 3))
    age = np.clip(np.round(38 + 12 * z[:, 0]), 17, 90).astype(int)
    fnlwgt = np.round(np.exp(12.0 + 0.45 * z[:, 1])).astype(int)
    edu = np.clip(np.round(10 + 2.5 * z[:, 2]), 1, 16).astype(int)
    rows = [[str(a), str(f), str(e), r] for a, f, e, r in zip(age, fnlwgt, edu, race)]
    for r in rng.choice(n, size=n // 100, replace=False):
        rows[r][3] = "?"
    return ["age", "fnlwgt", "education-num", "race"], rows


def write(name, header, rows, schema):
    with open(OUT / f"{name}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    with open(OUT / f"{name}.schema.json", "w") as fh:
        json.dump(schema, fh, indent=1, sort_keys=True)
        fh.write("\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write("bank_synth", *bank(np.random.default_rng(4510), 3000),
          {"group_column": "marital", "numeric_columns": ["age", "balance", "duration"],
           "normalization": "minmax", "subsample": {"count": 500, "seed": 1}})
    write("adult_synth", *adult(np.random.default_rng(3256), 3000),
          {"group_column": "race", "numeric_columns": ["age", "fnlwgt", "education-num"],
           "normalization": "minmax", "subsample": {"count": 500, "seed": 1}})


if __name__ == "__main__":
    main()
