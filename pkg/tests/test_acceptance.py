"""
Acceptance criteria, one test each. Every test adds a PASS/FAIL line to the
report printed at the end of the pytest run.
"""

import os
import subprocess
import sys
import time

import numpy as np
import pytest

from stochalm.baselines import run_token_sgd
from stochalm.bench import ExperimentConfig, generate_dataset, run_benchmark
from stochalm.checks import minorant
from stochalm.distributed import (build_metropolis_transitions, path_graph, random_graph,
                                  ring_graph, run_decentralized, run_federated, star_graph)
from stochalm.engine import init_state, run, step
from stochalm.problem import CompositeProblem, ElasticNet, QuadraticLoss, Ridge
from stochalm.reference import solve_reference
from stochalm.schedules import IID, Cyclic, MarkovChain

from conftest import random_problem


def record(report, k, ok, detail):
    report.append(f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def default_runs():
    """Default elastic-net instance, 2000 rounds for each of 5 seeds."""
    prob, _ = generate_dataset(ExperimentConfig())
    ref = solve_reference(prob)
    return prob, ref, [run(prob, IID(prob.n, seed=s), 2000) for s in range(5)]


#%% 1. one round solves a single-component problem

def test_exactness_single_component(report):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for k in range(50):
        p, m = int(rng.integers(1, 21)), int(rng.integers(1, 8))
        c = QuadraticLoss(rng.uniform(-1, 1, (m, p)), rng.uniform(-1, 1, m), 1)
        f0 = Ridge(0.5) if k % 2 else ElasticNet(0.05, 0.5)
        prob = CompositeProblem(f0, [c])
        ref = solve_reference(prob)
        if not np.any(ref.x_star):
            continue
        tr = run(prob, Cyclic(1), 1, x0=rng.normal(size=p))
        worst = max(worst, tr.errors(ref.x_star)[1])
    elapsed = time.perf_counter() - start
    record(report, 1, worst <= 1e-8 and elapsed < 5,
           f"n=1 exactness, worst rel. error {worst:.1e}, {elapsed:.2f} s")


#%% 2-3. certificate monotone, bounded, and pairwise gap

def test_certificate_monotone(report, default_runs):
    _, ref, traces = default_runs
    drop = max(float(np.max(-np.diff(tr.f_star[1:]))) for tr in traces)
    over = max(float(np.max(tr.f_star[1:] - ref.F_star)) for tr in traces)
    record(report, 2, drop <= 1e-9 and over <= 1e-8,
           f"certificate, max decrease {max(drop, 0):.1e}, max excess over F* {over:.1e}")


def test_pairwise_gap(report, default_runs):
    prob, _, traces = default_runs
    mu = prob.f0.l2
    rng = np.random.default_rng(3)
    worst = -np.inf
    for tr in traces:
        for _ in range(100):
            t, s = sorted(rng.choice(np.arange(1, 2001), 2, replace=False))
            lhs = 0.5 * mu * np.sum((tr.iterates[s] - tr.iterates[t]) ** 2)
            worst = max(worst, lhs - (tr.f_star[s] - tr.f_star[t]))
    record(report, 3, worst <= 1e-8, f"strong-convexity pair bound, worst gap {worst:.1e}")


#%% 4. centralized, federated and token runs agree

def test_three_way_equivalence(report):
    G = ring_graph(10)
    P = build_metropolis_transitions(G)
    worst = 0.0
    for seed in range(10):
        prob = random_problem(np.random.default_rng(100 + seed), 10, 20, 4)
        dec, _ = run_decentralized(prob, G, seed, 1000)
        cen = run(prob, MarkovChain(P, 0, seed), 1000)
        fed, _ = run_federated(prob, dec.j, 1000)
        assert np.array_equal(cen.j, dec.j)
        worst = max(worst, float(np.max(np.abs(dec.iterates - cen.iterates))),
                    float(np.max(np.abs(fed.iterates - cen.iterates))))
    record(report, 4, worst <= 1e-12, f"three-way equivalence, max gap {worst:.1e}")


#%% 5. convergence under every schedule kind

def test_all_schedules_converge(report):
    worst = {}
    for k in range(20):
        rng = np.random.default_rng(k)
        n, p = int(rng.integers(2, 11)), int(rng.integers(2, 21))
        prob = random_problem(rng, n, p, 4, reg=("ridge", "elastic_net")[k % 2],
                              loss=("quadratic", "huber")[(k // 2) % 2])
        ref = solve_reference(prob)
        P = build_metropolis_transitions(random_graph(n, 0.4, k))
        probs = np.arange(1, n + 1) / (n * (n + 1) / 2)
        scheds = {"uniform": IID(n, seed=k), "nonuniform": IID(n, probs, seed=k),
                  "cyclic": Cyclic(n), "markov": MarkovChain(P, 0, k)}
        for name, sched in scheds.items():
            err = run(prob, sched, 200 * n).errors(ref.x_star)[-1]
            worst[name] = max(worst.get(name, 0.0), err)
    ok = all(v <= 1e-6 for v in worst.values())
    record(report, 5, ok, "schedules, worst final error "
           + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


#%% 6. Metropolis chains

def test_metropolis_chains(report):
    details, ok = [], True
    for n in (10, 30):
        graphs = {"path": path_graph(n), "ring": ring_graph(n), "star": star_graph(n),
                  "random": random_graph(n, 0.2, n)}
        for name, G in graphs.items():
            P = build_metropolis_transitions(G)
            ok &= bool(np.all(P >= 0) and np.allclose(P.sum(axis=1), 1, atol=1e-12)
                       and np.allclose(P, P.T, atol=0))
            counts = np.bincount(MarkovChain(P, 0, n).draw(100_000), minlength=n)
            dev = float(np.max(np.abs(counts / 100_000 - 1 / n)))
            ok &= dev <= 0.02
            details.append(f"{name}{n} {dev:.3f}")
    record(report, 6, ok, "Metropolis stochastic+symmetric, visit deviation " + " ".join(details))


#%% 7. benchmark orderings

@pytest.mark.slow
def test_benchmark_orderings(report):
    start = time.perf_counter()
    cen = run_benchmark(ExperimentConfig(scenario="central_elastic_net"))
    sl, saga = cen.mean_curve("stochalm"), cen.mean_curve("saga-opt")
    ok_a = bool(np.all(sl[50:] <= saga[50:]))

    fed = run_benchmark(ExperimentConfig(scenario="fed_ridge"))
    admm = {lab: fed.mean_curve(lab)[-1] for lab in fed.labels() if lab.startswith("admm")}
    best = min(admm, key=admm.get)
    fed_final = fed.mean_curve("fed-stochalm")[-1]
    ok_b = fed_final < admm[best]

    dec = run_benchmark(ExperimentConfig(scenario="dec_elastic_net"))
    d, c, h = (dec.mean_curve(lab)[-1] for lab in ("dist-stochalm", "sgd-constant", "sgd-one_over_t"))
    ok_c = d < c < h
    elapsed = time.perf_counter() - start
    failures = cen.failures + fed.failures + dec.failures

    record(report, 7, ok_a and ok_b and ok_c and not failures and elapsed < 600,
           f"orderings (a) {ok_a}: worst stochalm-saga gap {np.max(sl[50:] - saga[50:]):.1e}; "
           f"(b) {ok_b}: {fed_final:.1e} vs {best} {admm[best]:.1e}; "
           f"(c) {ok_c}: {d:.1e} < {c:.1e} < {h:.1e}; {elapsed:.0f} s")


#%% 8. running gradient sum stays exact

def test_gradient_sum_integrity(report):
    prob = random_problem(np.random.default_rng(8), 10, 20, 4, loss="huber")
    st_ = init_state(prob)
    sched = IID(10, seed=8)
    worst = 0.0
    for _ in range(10_000):
        step(st_, sched.next_index(), prob)
        worst = max(worst, st_.grad_sum_drift())
    tr, _ = run_decentralized(prob, ring_graph(10), 8, 10_000, audit_every=1)
    worst = max(worst, tr.info["max_drift"])
    record(report, 8, worst <= 1e-10, f"gradient-sum drift over 1e4 rounds {worst:.1e}")


#%% 9. linearizations are minorants

def test_minorant_suite(report):
    res = minorant(np.random.default_rng(9), 1_000_000)
    record(report, 9, res.passed, f"minorant, {res.detail}")


#%% 10. byte-identical benchmark output

def test_bench_determinism(report, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        cmd = [sys.executable, "-m", "stochalm.cli", "bench", "--scenario", "dec_elastic_net",
               "--trials", "3", "--T", "300", "--seed", "5", "--out-dir", str(out)]
        subprocess.run(cmd, check=True, capture_output=True, env=dict(os.environ))
        outs.append({f: (out / f).read_bytes() for f in sorted(os.listdir(out)) if f.endswith(".csv")})
    ok = outs[0] == outs[1] and len(outs[0]) == 2
    record(report, 10, ok, f"bench determinism, {len(outs[0])} CSV files identical: {ok}")
