"""
Token passing on a random network
=================================

A token walks the graph along a Metropolis random walk. Each visit updates
one node; the token carries the iterate and the sum of the stored gradients.
"""

# %%
import numpy as np

from stochalm.baselines import largest_stable_step, run_token_sgd
from stochalm.bench import ExperimentConfig, generate_dataset
from stochalm.distributed import build_metropolis_transitions, random_graph, run_decentralized
from stochalm.reference import solve_reference

cfg = ExperimentConfig(scenario="dec_elastic_net")
prob, _ = generate_dataset(cfg)
ref = solve_reference(prob)
G = random_graph(prob.n, 0.2, seed=0)
P = build_metropolis_transitions(G)
print(f"{len(G.edges)} edges, degrees {G.degrees().min()}..{G.degrees().max()}")
print("row sums", np.allclose(P.sum(axis=1), 1), "symmetric", np.allclose(P, P.T))

# %%
# The gradient sum on the token is updated incrementally; audit it
# against the recomputed sum every round.
T = 1000
tr, ledger = run_decentralized(prob, G, seed=1, T=T, audit_every=1)
print("max drift", tr.info["max_drift"], "messages", ledger.total_messages)

# %%
# Token SGD on the same walk, with the largest stable constant step.
alpha = largest_stable_step(prob, G, T)
const = run_token_sgd(prob, G, 1, T, alpha, "constant")
decay = run_token_sgd(prob, G, 1, T, alpha, "one_over_t")
for name, run_ in (("dist-stochalm", tr), ("sgd constant", const), ("sgd 1/t", decay)):
    print(f"{name:>14s}  final error {run_.errors(ref.x_star)[-1]:.2e}")
