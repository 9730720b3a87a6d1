"""End-to-end acceptance checks.

Each test covers one headline criterion, prints a single pass/fail line,
and asserts it.  These are heavier than the unit tests; the glauber and
decay runs take several minutes each.
"""

import json
import math
import sys
import time

import numpy as np

from isingtree import (
    build_tree,
    covariance_matrix,
    drift_vector,
    pair_covariance,
    uniform,
)
from isingtree.cli import main as cli_main
from isingtree.harness import (
    experiment_depth_decay,
    experiment_factor_map,
    experiment_glauber,
    experiment_h_consistency,
    experiment_reference_match,
    experiment_root_decay,
    random_instance,
    suite_identities,
    suite_inference_vs_oracle,
)


def _report(name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f"  ({detail})"
    print(line, file=sys.stderr, flush=True)
    assert ok, line


def test_criterion_01_oracle_equivalence():
    t0 = time.perf_counter()
    rep = suite_inference_vs_oracle(trials=200, seed=0, tolerance=1e-9)
    elapsed = time.perf_counter() - t0
    worst = max(c["value"] for c in rep.checks)
    _report("oracle-equivalence",
            rep.passed and elapsed < 30.0,
            f"max dev {worst:.2e}, {elapsed:.1f} s")


def test_criterion_02_zero_field_covariance_law():
    topo = build_tree(3, 2)
    coup = uniform(0.6)
    x = np.zeros(topo.n_vertices)
    theta = math.tanh(0.6)
    worst = 0.0
    for u in topo.vertices:
        for v in topo.vertices:
            if u == v:
                continue
            got = pair_covariance(topo, coup, x, u, v)
            worst = max(worst, abs(got - theta ** topo.distance(u, v)))
    _report("zero-field-covariance-law", worst < 1e-12, f"max dev {worst:.2e}")


def test_criterion_03_identity_suite():
    rep = suite_identities(trials=1000, contraction_trials=10000, seed=0)
    by_name = {c["name"]: c for c in rep.checks}
    one_step = by_name["one-step-residual"]["value"]
    telescoped = by_name["telescoped-residual"]["value"]
    ok = (one_step < 1e-10 and telescoped < 1e-9
          and by_name["bp-contraction"]["violations"] == 0
          and by_name["zeta-bound"]["violations"] == 0
          and by_name["w-factor-bound"]["violations"] == 0)
    _report("identity-suite", ok,
            f"one-step {one_step:.2e}, telescoped {telescoped:.2e}")


def test_criterion_04_jacobian_check():
    gen = np.random.default_rng(4)
    h = 1e-5
    worst = 0.0
    for _ in range(50):
        topo, coup, x = random_instance(gen, int(gen.integers(2, 4)),
                                        int(gen.integers(1, 3)))
        m = covariance_matrix(topo, coup, x)
        fd = np.empty_like(m)
        for j in range(topo.n_vertices):
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            fd[:, j] = (drift_vector(topo, coup, xp)
                        - drift_vector(topo, coup, xm)) / (2 * h)
        worst = max(worst, float(np.abs(m - fd).max()))
    _report("jacobian-vs-finite-difference", worst < 1e-6,
            f"max dev {worst:.2e}")


def test_criterion_05_reference_match():
    rep = experiment_reference_match(d=3, depth=2, tanh_beta=0.2, t_end=1.0,
                                     dt=1e-3, replicas=20000, seed=3)
    ks = next(c for c in rep.checks if c["name"] == "ks-root-marginal")
    _report("reference-process-match", rep.passed,
            f"ks {ks['value']:.4f} < {ks['limit']:.4f}")


def test_criterion_06_depth_decay():
    t0 = time.perf_counter()
    rep = experiment_depth_decay(d=4, tanh_beta=0.25, t_end=1.0, dt=1e-3,
                                 r_max=4, replicas=10000, seed=7)
    elapsed = time.perf_counter() - t0
    ok = rep.ratio_ucb95 < 1.0 and rep.ratio_point < 0.9 and elapsed < 900.0
    _report("depth-decay", ok,
            f"ratio {rep.ratio_point:.3f}, ucb95 {rep.ratio_ucb95:.3f}, "
            f"{elapsed:.0f} s")


def test_criterion_07_root_decay():
    rep = experiment_root_decay(d=4, tanh_beta=0.25, t_end=1.0, dt=1e-3,
                                r_max=4, replicas=10000, seed=11)
    decreasing = all(a > b for a, b in zip(rep.estimates, rep.estimates[1:]))
    ok = rep.ratio_ucb95 < 1.0 and decreasing
    _report("root-decay", ok,
            f"ratio {rep.ratio_point:.3f}, ucb95 {rep.ratio_ucb95:.3f}")


def test_criterion_08_h_machinery():
    rep = experiment_h_consistency(d=3, depth=2, tanh_beta=0.2, seed=5)
    by_name = {c["name"]: c for c in rep.checks}
    halving = by_name["ode-residual-halving"]
    refine = by_name["integral-identity-refinement"]
    ok = halving["passed"] and refine["passed"]
    _report("h-machinery", ok,
            f"halving factor {halving['factor']:.3f}, "
            f"quad residual {refine['residual_17']:.2e} -> "
            f"{refine['residual_33']:.2e}")


def test_criterion_09_factor_map():
    rep = experiment_factor_map(d=3, tanh_beta=0.2, m_max=4, replicas=10000,
                                seed=13)
    flips = [c for c in rep.checks if c["name"].startswith("flip-")]
    ok = rep.passed and len(flips) == 4
    _report("factor-map", ok,
            "flips " + ", ".join(f"{c['value']:.4f}<={c['bound']:.4f}"
                                 for c in flips))


def test_criterion_10_glauber():
    rep = experiment_glauber(d=3, depth=3, tanh_beta=0.2, t_end=10.0,
                             replicas=500, seed=17)
    by_name = {c["name"]: c for c in rep.checks}
    tr = by_name["transmission-bound"]
    ok = (rep.passed and tr["updates"] >= 100000
          and by_name["zero-coupling-death"]["clean_runs"] == 100)
    _report("glauber", ok,
            f"freq {tr['value']:.4f} <= {tr['bound']:.4f}, "
            f"{tr['updates']} updates")


def test_criterion_11_determinism(tmp_path, capsys):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        code = cli_main([
            "experiment", "factor-map", "--d", "3", "--tanh-beta", "0.2",
            "--replicas", "200", "--seed", "2", "--out", str(out),
        ])
        assert code == 0
    capsys.readouterr()
    same_json = ((out_a / "factor-map.json").read_bytes()
                 == (out_b / "factor-map.json").read_bytes())
    same_csv = ((out_a / "factor-map.csv").read_bytes()
                == (out_b / "factor-map.csv").read_bytes())
    man_a = json.loads((out_a / "factor-map.manifest.json").read_text())
    man_b = json.loads((out_b / "factor-map.manifest.json").read_text())
    same_sums = man_a["outputs"] == man_b["outputs"]
    _report("determinism", same_json and same_csv and same_sums,
            "byte-identical JSON and CSV across reruns")
