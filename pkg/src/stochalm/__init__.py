"""
StochaLM: stochastic alternating linearization for ``f0 + sum_i f_i``.

Centralized, federated and token-passing solvers, the baselines they are
compared with, and a synthetic benchmark harness.
"""

from .problem import (CompositeProblem, ElasticNet, HuberLoss, QuadraticLoss, Ridge,
                      eval_component, eval_full, eval_regularizer, subgradient_component)
from .subproblem import SubproblemError, SubproblemSolution, optimality_residual, solve_subproblem
from .schedules import IID, Cyclic, EssentiallyCyclic, MarkovChain, next_index
from .engine import RunTrace, SolverState, init_state, run, step
from .distributed import (CommLedger, Graph, build_metropolis_transitions, run_decentralized,
                          run_federated)
from .reference import Reference, solve_reference

__version__ = "0.1.0"
