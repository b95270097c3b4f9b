"""
How the ridge weight shapes the SAGA comparison
===============================================

With a weak quadratic term SAGA can be ahead for a stretch of early
iterations before StochaLM overtakes it. A moderate weight keeps StochaLM
ahead from the start.
"""

# %%
from stochalm.bench import ExperimentConfig, run_benchmark

for lam2 in (0.1, 0.5):
    cfg = ExperimentConfig(scenario="central_elastic_net", lam2=lam2, trials=5, T=600)
    res = run_benchmark(cfg)
    sl, saga = res.mean_curve("stochalm"), res.mean_curve("saga-opt")
    behind = [t for t in range(50, cfg.T + 1) if sl[t] > saga[t]]
    span = f"t in [{behind[0]}, {behind[-1]}]" if behind else "never"
    print(f"lam2={lam2}: StochaLM behind SAGA {span}; final {sl[-1]:.1e} vs {saga[-1]:.1e}")
