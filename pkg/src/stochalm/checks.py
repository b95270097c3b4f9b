"""
Invariant suites behind ``stochalm verify``.

Each check returns a `CheckResult`; none of them raise on a violated
property, so a caller can run them all and report.
"""

from dataclasses import dataclass

import numpy as np

from .distributed import (build_metropolis_transitions, path_graph, random_graph, ring_graph,
                          run_decentralized, run_federated, star_graph)
from .engine import init_state, run, step
from .problem import CompositeProblem, ElasticNet, HuberLoss, QuadraticLoss, Ridge
from .reference import solve_reference
from .schedules import IID, MarkovChain


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def random_problem(rng, n, p, m, reg="elastic_net", loss="quadratic", lam=0.5, M=1.0):
    """Small random instance in the benchmark's style (uniform data, small noise)."""
    x_true = rng.uniform(-1, 1, p)
    comps = []
    for _ in range(n):
        A = rng.uniform(-1, 1, (m, p))
        y = A @ x_true + 0.1 * rng.standard_normal(m)
        comps.append(QuadraticLoss(A, y, n) if loss == "quadratic" else HuberLoss(A, y, n, M))
    f0 = ElasticNet(0.1, lam) if reg == "elastic_net" else Ridge(lam)
    return CompositeProblem(f0, comps)


def certificate(problem, T, seed, ref=None, mono_tol=1e-9, bound_tol=1e-8):
    ref = solve_reference(problem) if ref is None else ref
    tr = run(problem, IID(problem.n, seed=seed), T)
    fs = tr.f_star[1:]
    drop = float(np.max(-np.diff(fs), initial=0.0))
    over = float(np.max(fs - ref.F_star))
    ok = drop <= mono_tol and over <= bound_tol
    return CheckResult("certificate", ok, f"max decrease {drop:.2e}, max excess over F* {over:.2e}")


def pair_bound(problem, T, seed, n_pairs=100, tol=1e-8):
    """``(mu/2)||x_s - x_t||^2 <= f*_s - f*_t`` on random pairs ``s > t``."""
    tr = run(problem, IID(problem.n, seed=seed), T)
    rng = np.random.default_rng(seed)
    mu = problem.f0.mu
    worst = -np.inf
    for _ in range(n_pairs):
        t, s = sorted(rng.choice(np.arange(1, T + 1), 2, replace=False))
        lhs = 0.5 * mu * np.sum((tr.iterates[s] - tr.iterates[t]) ** 2)
        worst = max(worst, lhs - (tr.f_star[s] - tr.f_star[t]))
    return CheckResult("pair-bound", worst <= tol, f"worst gap {worst:.2e}")


def grad_sum_drift(problem, T, seed, tol=1e-10):
    st = init_state(problem)
    sched = IID(problem.n, seed=seed)
    worst = 0.0
    for _ in range(T):
        step(st, sched.next_index(), problem)
        worst = max(worst, st.grad_sum_drift())
    return CheckResult("grad-sum-drift", worst <= tol, f"max drift {worst:.2e}")


def minorant(rng, n_samples, tol=1e-12):
    """Linearizations of every loss kind lie below the loss, sampled in bulk."""
    worst = -np.inf
    done = 0
    while done < n_samples:
        p, m = int(rng.integers(1, 8)), int(rng.integers(1, 6))
        A = rng.uniform(-2, 2, (m, p))
        y = rng.uniform(-2, 2, m)
        for c in (QuadraticLoss(A, y, 3), HuberLoss(A, y, 3, float(rng.uniform(0.1, 2)))):
            k = 500
            a = rng.normal(scale=3, size=(k, p))
            x = rng.normal(scale=3, size=(k, p))
            fa, fx, ga = c.value(a), c.value(x), c.grad(a)
            gap = fa + np.einsum("ij,ij->i", ga, x - a) - fx - tol * (1 + np.abs(fx))
            worst = max(worst, float(gap.max()))
            done += k
    return CheckResult("minorant", worst <= 0, f"{done} samples, worst gap {worst:.2e}")


def metropolis(n, steps, seed, tol=0.02):
    graphs = {"path": path_graph(n), "ring": ring_graph(n), "star": star_graph(n),
              "random": random_graph(n, 0.2, seed)}
    details, ok = [], True
    for name, G in graphs.items():
        P = build_metropolis_transitions(G)
        stoch = np.allclose(P.sum(axis=1), 1.0) and np.all(P >= 0)
        sym = np.allclose(P, P.T)
        chain = MarkovChain(P, 0, seed)
        counts = np.bincount(chain.draw(steps), minlength=n)
        dev = float(np.max(np.abs(counts / steps - 1.0 / n)))
        ok &= stoch and sym and dev <= tol
        details.append(f"{name} dev={dev:.3f}")
    return CheckResult("metropolis", bool(ok), ", ".join(details))


def equivalence(problem, T, seed, tol=1e-12):
    """Centralized, federated and token runs on one index stream agree coordinatewise."""
    G = ring_graph(problem.n)
    dec, _ = run_decentralized(problem, G, seed, T)
    P = build_metropolis_transitions(G)
    cen = run(problem, MarkovChain(P, 0, seed), T)
    fed, _ = run_federated(problem, MarkovChain(P, 0, seed), T)
    same_j = np.array_equal(dec.j, cen.j) and np.array_equal(fed.j, cen.j)
    gap = max(float(np.max(np.abs(dec.iterates - cen.iterates))),
              float(np.max(np.abs(fed.iterates - cen.iterates))))
    return CheckResult("equivalence", same_j and gap <= tol, f"max gap {gap:.2e}")


def first_jump(problem, seed):
    ref = solve_reference(problem)
    e = run(problem, IID(problem.n, seed=seed), 1).errors(ref.x_star)
    return CheckResult("first-iteration-drop", e[1] < e[0], f"e0={e[0]:.4f} e1={e[1]:.4f}")


def run_all(seed=0, quick=True):
    rng = np.random.default_rng(seed)
    small = random_problem(rng, 10, 20, 4)
    T = 500 if quick else 2000
    return [
        certificate(small, T, seed),
        pair_bound(small, T, seed),
        grad_sum_drift(small, 2000 if quick else 10_000, seed),
        minorant(rng, 20_000 if quick else 1_000_000),
        metropolis(10, 20_000 if quick else 100_000, seed),
        equivalence(small, 300 if quick else 1000, seed),
        first_jump(random_problem(rng, 30, 120, 4), seed),
    ]
