"""
Comparison methods: SAGA (centralized), consensus ADMM (federated) and
token-passing SGD (decentralized). All emit the same `RunTrace` as StochaLM.
"""

from dataclasses import dataclass

import numpy as np

from .distributed import CommLedger, build_metropolis_transitions
from .engine import RunTrace
from .problem import Ridge, as_vector, soft_threshold
from .schedules import IID, MarkovChain
from .subproblem import DEFAULT_TOL, solve_subproblem


#%% SAGA

@dataclass(frozen=True)
class SagaSplit:
    """
    ``min h0(x) + (1/n) sum_i h_i(x)`` with ``h0 = l1 ||.||_1`` and
    ``h_i = n f_i + (l2/2) ||.||^2``.

    The ``1/n`` factor in every loss makes this the same objective as
    ``f0 + sum_i f_i`` with an elastic-net (or ridge, l1=0) ``f0``.
    """

    losses: tuple
    l1: float
    l2: float

    @classmethod
    def from_problem(cls, problem):
        return cls(problem.components, problem.f0.l1, problem.f0.l2)

    @property
    def n(self):
        return len(self.losses)

    def grad(self, i, x):
        c = self.losses[i]
        return c.n * c.grad(x) + self.l2 * x

    @property
    def lipschitz(self):
        """Largest smoothness constant of the ``h_i``."""
        return max(c.n * c.lipschitz for c in self.losses) + self.l2


def saga_step_sizes(split):
    """``(gamma_opt, gamma_safe)`` = ``1/(2(l2 n + L))`` and ``1/(3L)``."""
    L = split.lipschitz
    return 1.0 / (2.0 * (split.l2 * split.n + L)), 1.0 / (3.0 * L)


@dataclass
class SagaState:
    x: np.ndarray
    table: np.ndarray
    table_mean: np.ndarray
    gamma: float


def saga_init(split, x0, gamma):
    if not gamma > 0:
        raise ValueError("step size must be positive")
    table = np.stack([split.grad(i, x0) for i in range(split.n)])
    return SagaState(x0.copy(), table, table.mean(axis=0), gamma)


def saga_step(state, j, split):
    g = split.grad(j, state.x)
    w = state.x - state.gamma * (g - state.table[j] + state.table_mean)
    state.x = soft_threshold(w, state.gamma * split.l1)
    state.table_mean = state.table_mean + (g - state.table[j]) / split.n
    state.table[j] = g
    return state


def run_saga(problem, gamma, T, seed=0, x0=None, algorithm="saga"):
    """SAGA with uniform sampling drawn from ``IID(n, seed=seed)``."""
    split = SagaSplit.from_problem(problem)
    x0 = np.zeros(problem.p) if x0 is None else as_vector(x0, problem.p, "x0")
    state = saga_init(split, x0, gamma)
    sched = IID(problem.n, seed=seed)

    iterates = np.empty((T + 1, problem.p))
    iterates[0] = state.x
    jj = np.empty(T, dtype=np.int64)
    for t in range(1, T + 1):
        j = sched.next_index()
        saga_step(state, j, split)
        jj[t - 1] = j
        iterates[t] = state.x
    return RunTrace(algorithm, jj, iterates, np.full(T + 1, np.nan),
                    np.zeros(T + 1, dtype=np.int64), None, {"state": state, "gamma": gamma})


#%% CONSENSUS ADMM

RHO_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


@dataclass
class AdmmState:
    locals: np.ndarray   # (n, p)
    duals: np.ndarray    # (n, p), scaled
    consensus: np.ndarray
    rho: float


def admm_init(problem, rho, x0=None):
    if not rho > 0:
        raise ValueError("rho must be positive")
    x0 = np.zeros(problem.p) if x0 is None else as_vector(x0, problem.p, "x0")
    n = problem.n
    return AdmmState(np.tile(x0, (n, 1)), np.zeros((n, problem.p)), x0.copy(), rho)


def admm_round(state, problem, tol=DEFAULT_TOL):
    """
    One synchronous round of consensus ADMM.

    Workers: ``x_i = argmin f_i(x) + (rho/2)||x - z + u_i||^2``.
    Center:  ``z = argmin f0(z) + (n rho/2)||z - mean(x_i + u_i)||^2``.
    Then ``u_i += x_i - z``.
    """
    rho, n = state.rho, problem.n
    prox_term = Ridge(rho)
    for i, c in enumerate(problem.components):
        v = state.consensus - state.duals[i]
        sol = solve_subproblem(prox_term, c, -rho * v, tol, warm_start=state.locals[i])
        state.locals[i] = sol.x_new
    w = (state.locals + state.duals).mean(axis=0)
    f0 = problem.f0
    state.consensus = soft_threshold(n * rho * w, f0.l1) / (f0.l2 + n * rho)
    state.duals += state.locals - state.consensus
    return state


def run_admm(problem, rho, T, x0=None, tol=DEFAULT_TOL, x_star=None):
    """
    `T` rounds of consensus ADMM.

    Every round costs ``2n`` messages (``z`` down to each worker, ``x_i + u_i``
    back). The trace iterate is ``z``; `node_error` (when `x_star` is given)
    averages the workers' local errors.
    """
    state = admm_init(problem, rho, x0)
    n, p = problem.n, problem.p
    iterates = np.empty((T + 1, p))
    iterates[0] = state.consensus
    primal = np.empty(T + 1)
    primal[0] = 0.0
    node_err = None
    if x_star is not None:
        nrm = np.linalg.norm(x_star)
        node_err = np.empty(T + 1)
        node_err[0] = np.mean(np.linalg.norm(state.locals - x_star, axis=1)) / nrm

    for t in range(1, T + 1):
        admm_round(state, problem, tol)
        iterates[t] = state.consensus
        primal[t] = np.max(np.linalg.norm(state.locals - state.consensus, axis=1))
        if node_err is not None:
            node_err[t] = np.mean(np.linalg.norm(state.locals - x_star, axis=1)) / nrm

    msgs = np.arange(T + 1, dtype=np.int64) * 2 * n
    return RunTrace(f"admm-rho={rho:g}", np.full(T, -1, dtype=np.int64), iterates,
                    np.full(T + 1, np.nan), msgs, node_err,
                    {"state": state, "primal_residual": primal, "rho": rho})


#%% TOKEN SGD

@dataclass
class TokenSgdState:
    x: np.ndarray
    alpha0: float
    rule: str = "constant"   # or "one_over_t"
    t: int = 0

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if self.rule not in ("constant", "one_over_t"):
            raise ValueError(f"unknown step rule {self.rule!r}")

    @property
    def alpha(self):
        return self.alpha0 if self.rule == "constant" else self.alpha0 / (self.t + 1)


def sgd_subgradient(problem):
    """
    Subgradient oracle of ``h_i = f_i + f0/n`` (sign(0) taken as 0).
    """
    f0, n = problem.f0, problem.n

    def subgrad(i, x):
        return problem.components[i].grad(x) + (f0.l1 / n) * np.sign(x) + (f0.l2 / n) * x

    return subgrad


def token_sgd_step(state, j, subgrad):
    """``x <- x - alpha_t g`` with ``g`` in the subdifferential of ``h_j``; no projection (X = R^p)."""
    state.x = state.x - state.alpha * subgrad(j, state.x)
    state.t += 1
    return state


def run_token_sgd(problem, G, seed, T, alpha0, rule="constant", x0=None, start=0):
    """Token SGD whose token follows the Metropolis chain on `G` (same stream as Dist-StochaLM)."""
    chain = MarkovChain(build_metropolis_transitions(G), start, seed)
    x0 = np.zeros(problem.p) if x0 is None else as_vector(x0, problem.p, "x0")
    state = TokenSgdState(x0.copy(), alpha0, rule)
    subgrad = sgd_subgradient(problem)
    ledger = CommLedger()
    ledger.record(0, 0, 0)

    iterates = np.empty((T + 1, problem.p))
    iterates[0] = state.x
    jj = np.empty(T, dtype=np.int64)
    loc = start
    for t in range(1, T + 1):
        j = chain.next_index()
        ledger.record(t, 1, problem.p, [(loc, j)])
        loc = j
        token_sgd_step(state, j, subgrad)
        jj[t - 1] = j
        iterates[t] = state.x
    return RunTrace(f"sgd-{rule}", jj, iterates, np.full(T + 1, np.nan), ledger.cumulative(T),
                    None, {"state": state, "alpha0": alpha0})


def largest_stable_step(problem, G, T, seed=0, start=0, factors=None):
    """
    Largest constant SGD step, from a halving grid, whose run does not blow up.

    A run counts as stable when every iterate is finite and the final objective
    is below the starting one. The grid halves down from ``64 / L`` where ``L``
    bounds the smoothness of the ``h_i``.
    """
    n = problem.n
    L = max(c.lipschitz for c in problem.components) + problem.f0.l2 / n
    if factors is None:
        factors = [64.0 / 2 ** k for k in range(20)]
    F0 = problem.value(np.zeros(problem.p))
    with np.errstate(over="ignore", invalid="ignore"):
        for f in factors:
            alpha = f / L
            tr = run_token_sgd(problem, G, seed, T, alpha, "constant", start=start)
            if np.all(np.isfinite(tr.iterates)) and problem.value(tr.final) < F0:
                return alpha
    raise ValueError("no stable step size on the grid")
