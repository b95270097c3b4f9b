"""
Index schedules and the certificate
===================================

Any schedule that keeps visiting every component works, uniform or not.
The certificate ``f_star`` is a lower bound on the optimal value that
tightens every round.
"""

# %%
import numpy as np

from stochalm import (IID, Cyclic, CompositeProblem, ElasticNet, EssentiallyCyclic, MarkovChain,
                      QuadraticLoss, run, solve_reference)
from stochalm.distributed import build_metropolis_transitions, path_graph

rng = np.random.default_rng(0)
n, p = 8, 15
x_true = rng.uniform(-1, 1, p)
blocks = [rng.uniform(-1, 1, (4, p)) for _ in range(n)]
prob = CompositeProblem(ElasticNet(0.1, 0.5),
                        [QuadraticLoss(A, A @ x_true + 0.1 * rng.standard_normal(4), n) for A in blocks])
ref = solve_reference(prob)

# %%
skewed = np.arange(1, n + 1) / (n * (n + 1) / 2)
schedules = {
    "uniform": IID(n, seed=1),
    "skewed": IID(n, skewed, seed=1),
    "cyclic": Cyclic(n),
    "ess. cyclic": EssentiallyCyclic(n, 2 * n, seed=1),
    "walk on path": MarkovChain(build_metropolis_transitions(path_graph(n)), 0, 1),
}
for name, sched in schedules.items():
    tr = run(prob, sched, 200 * n)
    print(f"{name:>12s}  error {tr.errors(ref.x_star)[-1]:.1e}  "
          f"F* - f_star {ref.F_star - tr.f_star[-1]:.1e}")

# %%
# The gap between F* and the certificate shrinks monotonically.
tr = run(prob, IID(n, seed=2), 400)
gap = ref.F_star - tr.f_star[1:]
print(np.round(gap[::50], 8))
print("monotone:", bool(np.all(np.diff(tr.f_star[1:]) >= -1e-12)))
