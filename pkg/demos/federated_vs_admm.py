"""
Federated ridge regression against consensus ADMM
=================================================

Both methods get the same number of messages. One StochaLM round costs two
messages (sum of the other gradients down, new pair up); one ADMM round
costs two per worker.
"""

# %%
from stochalm.bench import ExperimentConfig, run_benchmark

cfg = ExperimentConfig(scenario="fed_ridge", trials=5, T=1500)
res = run_benchmark(cfg)

# %%
# Mean error across the peripheral nodes against messages sent.
for lab in res.labels():
    err, msgs = res.mean_curve(lab), res.messages(lab)
    picks = [len(err) // 4, len(err) // 2, len(err) - 1]
    cells = "  ".join(f"{int(msgs[k]):5d}:{err[k]:.1e}" for k in picks)
    print(f"{lab:>14s}  {cells}")
