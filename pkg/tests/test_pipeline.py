import json
import os
import subprocess
import sys

import numpy as np
import pytest

from pfkm.experiment import DatasetSpec, ExperimentConfig, run_experiment
from pfkm.dataset import DatasetSchema
from pfkm.instance import (Instance, InfeasibleInstance, InstanceError, cluster_counts, is_fair,
                           solution_cost)
from pfkm.oracle import exact_pfkm
from pfkm.pipeline import BalanceOneError, RunConfig, d_candidates, solve
from pfkm.reductions import CkmInstance, brute_force_ckm, extract_ckm_solution, reduce_ckm_to_pfkm
from _gen import random_instance


class TestCandidates:
    def test_colocated(self):
        inst = Instance.from_labels([0, 1, 0], coords=np.zeros((3, 2)), k=1, t=2)
        assert d_candidates(inst, [0], "exact") == [0.0]

    def test_geometric_grid(self):
        # line points 0, 1, 2, 5 with center at 0: distances {1, 2, 5}
        inst = Instance.from_labels([0, 1, 0, 1], coords=np.array([[0.0], [1], [2], [5]]), k=1, t=2)
        Ds = d_candidates(inst, [0], "geometric")
        assert Ds[0] == 1.0 and Ds[1] == pytest.approx(1.1) and Ds[2] == pytest.approx(1.21)
        assert Ds[-1] == 5.0 and Ds[-2] < 5.0
        assert all(a < b for a, b in zip(Ds, Ds[1:]))

    def test_exact_count(self):
        rng = np.random.default_rng(0)
        inst = random_instance(rng, 15, 3, 2)
        Ds = d_candidates(inst, [0, 5, 9], "exact")
        assert len(Ds) <= 15 * 3 and all(a < b for a, b in zip(Ds, Ds[1:]))

    def test_bad_base(self):
        with pytest.raises(ValueError):
            RunConfig(base=1.0)


class TestSolve:
    def test_rejections(self):
        rng = np.random.default_rng(1)
        inst = random_instance(rng, 10, 2, 2)
        with pytest.raises(BalanceOneError):
            solve(inst.with_t(1))
        unbalanced = Instance.from_labels([0, 0, 0, 0, 0, 1], coords=rng.random((6, 2)), k=2, t=2)
        with pytest.raises(InfeasibleInstance):
            solve(unbalanced)
        over = Instance.from_groups([[0], [0, 1], [1]], dist=np.zeros((3, 3)), k=1, t=2)
        with pytest.raises(InstanceError):
            solve(over)

    @pytest.mark.parametrize("seed", range(8))
    def test_against_oracle(self, seed):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng, int(rng.integers(5, 11)), 2, 2, t=2)
        sol, rep, cands = solve(inst, RunConfig(d_mode="exact", post=False))
        opt = exact_pfkm(inst)
        assert sol.cost >= opt.cost - 1e-9
        assert is_fair(cluster_counts(inst, sol.assignment, sol.centers)[1], inst.t)

    def test_report_consistency(self):
        rng = np.random.default_rng(7)
        inst = random_instance(rng, 40, 4, 3)
        sol, rep, cands = solve(inst, RunConfig(post=True))
        assert sol.cost == pytest.approx(solution_cost(inst, sol.assignment), rel=1e-9)
        assert rep.final_cost == pytest.approx(sol.cost, rel=1e-9)
        assert rep.final_cost == min(c.best_cost for c in cands)
        best = min(cands, key=lambda c: (c.best_cost, c.D))
        assert rep.chosen_D == best.D and rep.fair_cost == best.cost
        assert rep.post_cost <= rep.fair_cost + 1e-9
        assert solution_cost(inst, best.assignment) == pytest.approx(best.cost, rel=1e-9)
        doc = json.loads(rep.to_json())
        assert doc["seed"] == 0 and doc["vanilla_centers"] == list(sol.centers)
        assert {"vanilla", "lp", "round", "repair", "post", "fair", "total"} <= set(doc["timings"])

    def test_already_fair_ledger(self):
        # two well separated balanced blobs: vanilla assignment is fair
        X = np.array([[0, 0], [0, 0.1], [0.1, 0], [0.1, 0.1], [9, 9], [9, 9.1], [9.1, 9], [9.1, 9.1]])
        inst = Instance.from_labels([0, 1, 0, 1, 0, 1, 0, 1], coords=X, k=2, t=2)
        sol, rep, cands = solve(inst, RunConfig(post=False))
        best = min(cands, key=lambda c: (c.best_cost, c.D))
        assert rep.fair_cost <= rep.vanilla_cost + best.ledger() + 1e-9

    def test_bisect_equivalent(self):
        rng = np.random.default_rng(3)
        inst = random_instance(rng, 30, 3, 3)
        a = solve(inst, RunConfig(bisect=True))
        b = solve(inst, RunConfig(bisect=False))
        assert np.array_equal(a[0].assignment, b[0].assignment)
        assert [c.D for c in a[2]] == [c.D for c in b[2]]

    def test_lp_backends_agree(self):
        rng = np.random.default_rng(5)
        inst = random_instance(rng, 25, 3, 2)
        a = solve(inst, RunConfig(lp_backend="simplex"))[1]
        b = solve(inst, RunConfig(lp_backend="highs"))[1]
        assert a.final_cost == pytest.approx(b.final_cost, rel=1e-6)

    def test_fixed_centers_and_dumps(self, tmp_path):
        rng = np.random.default_rng(6)
        inst = random_instance(rng, 20, 3, 2)
        cfg = RunConfig(lp_dump_dir=str(tmp_path / "lp"), trace_dir=str(tmp_path / "tr"))
        sol, rep, _ = solve(inst, cfg, centers=[2, 9, 15])
        assert sol.centers == (2, 9, 15)
        assert any(p.suffix == ".mps" for p in (tmp_path / "lp").iterdir())
        assert (tmp_path / "tr").is_dir()

    def test_ckm_round_trip_through_pipeline(self):
        ckm = CkmInstance(np.array([[0, 1, 3], [1, 0, 2], [3, 2, 0]], float), k=2, u=2)
        inst, mp = reduce_ckm_to_pfkm(ckm, 1.0)
        sol, _, _ = solve(inst, RunConfig(d_mode="exact"))
        ext = extract_ckm_solution(inst, sol.assignment, mp)
        assert np.all(ext.loads() <= ckm.u)
        assert ext.cost <= sol.cost / mp.W + 1e-9
        assert ext.cost >= brute_force_ckm(ckm).cost - 1e-9


def test_pure_python_backend_same_answer(tmp_path):
    code = (
        "import numpy as np, sys; sys.path.insert(0, %r)\n"
        "from _gen import random_instance\n"
        "from pfkm.pipeline import solve, RunConfig\n"
        "from pfkm import kernels\n"
        "inst = random_instance(np.random.default_rng(11), 40, 4, 3)\n"
        "sol, rep, _ = solve(inst, RunConfig())\n"
        "print(kernels.BACKEND, ' '.join(map(str, sol.assignment)), repr(rep.final_cost))\n"
    ) % os.path.dirname(__file__)
    outs = {}
    for flag in ("0", "1"):
        env = dict(os.environ, PFKM_PURE_PYTHON=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                             check=True)
        backend, rest = res.stdout.split(" ", 1)
        outs[backend] = rest.split()
    assert "python" in outs
    if "cython" in outs:
        assert outs["cython"][:-1] == outs["python"][:-1]
        assert float(outs["cython"][-1]) == pytest.approx(float(outs["python"][-1]), rel=1e-12)


class TestExperiment:
    def bank_csv(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = ["g,x,y"] + [f"{g},{x:.4f},{y:.4f}" for g, x, y in
                            zip(rng.choice(["a", "b", "c"], 60, p=[.5, .3, .2]), rng.random(60), rng.random(60))]
        path = tmp_path / "d.csv"
        path.write_text("\n".join(rows) + "\n")
        return path

    def test_one_run_and_determinism(self, tmp_path):
        path = self.bank_csv(tmp_path)
        spec = DatasetSpec("d", str(path), DatasetSchema("g", ["x", "y"], (40, 0)))
        outs = []
        for run in ("r1", "r2"):
            cfg = ExperimentConfig([spec], k_values=[3], out_dir=str(tmp_path / run))
            res = run_experiment(cfg)
            assert len(res["rows"]) == 1 and not res["failures"]
            outs.append(tmp_path / run)
            assert (tmp_path / run / "reports" / "d_k3.json").exists()
        for name in ("experiment.csv", "assignments/d_k3.csv"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
        header = (outs[0] / "experiment.csv").read_text().splitlines()[0]
        assert header == "dataset,k,t,vanilla_cost,fair_cost,post_cost"

    def test_failures_continue(self, tmp_path):
        path = self.bank_csv(tmp_path)
        bad = DatasetSpec("bad", str(tmp_path / "missing.csv"), DatasetSchema("g", ["x"]))
        good = DatasetSpec("d", str(path), DatasetSchema("g", ["x", "y"]))
        res = run_experiment(ExperimentConfig([bad, good], k_values=[2], out_dir=str(tmp_path / "o")))
        assert len(res["failures"]) == 1 and len(res["rows"]) == 1
        assert (tmp_path / "o" / "failures.json").exists()
