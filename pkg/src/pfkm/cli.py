"""Command line entry point: ``pfkm solve | experiment | oracle | reduce``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .dataset import DatasetSchema, load_instance
from .experiment import ExperimentConfig, run_experiment
from .instance import InstanceError
from .oracle import exact_pfkm
from .pipeline import RunConfig, solve, write_assignment_csv
from .reductions import (brute_force_ckm, extract_ckm_solution, is_two_colorable,
                         load_ckm_json, load_hypergraph_json, reduce_ckm_to_pfkm,
                         reduce_hypergraph_to_pfkm)


def _load(args):
    schema = DatasetSchema.from_json(args.schema)
    t_mode = "min_feasible" if args.t is None else args.t
    return load_instance(args.input, schema, args.k, t_mode)


def cmd_solve(args) -> int:
    inst, load = _load(args)
    cfg = RunConfig(d_mode="exact" if args.d_mode == "exact" else "geometric",
                    seed=args.seed, post=args.post, lp_backend=args.lp_backend,
                    lp_dump_dir=str(Path(args.out) / "lp") if args.emit_lp else None,
                    trace_dir=str(Path(args.out) / "traces") if args.emit_traces else None)
    sol, report, _ = solve(inst, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_assignment_csv(inst, sol.assignment, out / "assignment.csv")
    doc = report.to_dict()
    doc["load_report"] = json.loads(load.to_json())
    (out / "report.json").write_text(json.dumps(doc, sort_keys=True, indent=1, default=float) + "\n")
    print(f"n={inst.n} k={inst.k} t={inst.t} vanilla={report.vanilla_cost:.6f} "
          f"fair={report.fair_cost:.6f} post={report.post_cost if report.post_cost is None else round(report.post_cost, 6)} "
          f"D={report.chosen_D:.6g}")
    return 0


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    if args.out is not None:
        cfg.out_dir = args.out
    res = run_experiment(cfg)
    for r in res["rows"]:
        ratio = r["fair_cost"] / r["vanilla_cost"] if r["vanilla_cost"] > 0 else float("inf")
        print(f"{r['dataset']} k={r['k']} t={r['t']} vanilla={r['vanilla_cost']:.6f} "
              f"fair={r['fair_cost']:.6f} post={r['post_cost']} ratio={ratio:.3f}")
    for f in res["failures"]:
        print(f"FAILED {f['dataset']} k={f['k']}: {f['error']}", file=sys.stderr)
    return 1 if res["failures"] else 0


def cmd_oracle(args) -> int:
    inst, _ = _load(args)
    sol = exact_pfkm(inst, mode=args.mode)
    print(f"OPT={sol.cost!r} centers={list(sol.centers)}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_assignment_csv(inst, sol.assignment, out / "oracle_assignment.csv")
    return 0


def cmd_reduce(args) -> int:
    if args.kind == "ckm":
        ckm = load_ckm_json(args.input).rescaled()
        inst, mapping = reduce_ckm_to_pfkm(ckm, args.eps)
        doc = {"n": inst.n, "k": inst.k, "t": inst.t, "W": mapping.W,
               "location": mapping.location.tolist(), "color": mapping.color.tolist(),
               "loc_dist": mapping.loc_dist.tolist()}
        if args.solve:
            opt = exact_pfkm(inst)
            ck = extract_ckm_solution(inst, opt.assignment, mapping)
            z = brute_force_ckm(ckm)
            doc.update(pfkm_opt=opt.cost, extracted_ckm_cost=ck.cost, ckm_opt=z.cost)
    else:
        H = load_hypergraph_json(args.input)
        inst, mapping = reduce_hypergraph_to_pfkm(H, args.rho)
        doc = {"n": inst.n, "k": inst.k, "t": inst.t, "N": mapping.N, "side": mapping.side,
               "location": mapping.location.tolist(),
               "groups": [np.flatnonzero(r).tolist() for r in inst.membership],
               "two_colorable": is_two_colorable(H)}
        if args.solve:
            doc["pfkm_opt"] = exact_pfkm(inst).cost
    text = json.dumps(doc, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pfkm", description="Pairwise fair k-median solver")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp):
        sp.add_argument("--input", required=True, help="CSV file")
        sp.add_argument("--schema", required=True, help="schema JSON")
        sp.add_argument("--k", type=int, required=True)
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--t", type=int, default=None)
        g.add_argument("--t-min", dest="t", action="store_const", const=None,
                       help="smallest t for which the data is balanced (default)")

    s = sub.add_parser("solve", help="run the approximation pipeline")
    data_args(s)
    s.add_argument("--d-mode", choices=["exact", "geom"], default="geom")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--post", action="store_true", help="fixed-count reassignment per candidate")
    s.add_argument("--lp-backend", choices=["auto", "simplex", "highs"], default="auto")
    s.add_argument("--emit-lp", action="store_true", help="write each LP as MPS")
    s.add_argument("--emit-traces", action="store_true", help="write repair traces")
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("experiment", help="run a datasets x k experiment grid")
    e.add_argument("--config", required=True)
    e.add_argument("--out", default=None, help="override the config's out_dir")
    e.set_defaults(func=cmd_experiment)

    o = sub.add_parser("oracle", help="exact optimum of a tiny instance")
    data_args(o)
    o.add_argument("--mode", choices=["auto", "A", "classes"], default="auto")
    o.add_argument("--out", default=None)
    o.set_defaults(func=cmd_oracle)

    r = sub.add_parser("reduce", help="build a reduction instance")
    r.add_argument("kind", choices=["ckm", "hypergraph"])
    r.add_argument("--input", required=True, help="JSON input")
    r.add_argument("--eps", type=float, default=1.0, help="CkM: scale parameter")
    r.add_argument("--rho", type=int, default=2, help="hypergraph: exponent")
    r.add_argument("--solve", action="store_true", help="also run the exact oracle")
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_reduce)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InstanceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
