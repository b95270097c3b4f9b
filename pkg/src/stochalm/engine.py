"""
StochaLM state machine.

Each component ``f_i`` keeps an anchor ``x_i`` and the gradient ``g_i`` stored
there. A round picks ``j``, solves

    min_x  f0(x) + f_j(x) + < sum_{i != j} g_i , x >

and moves anchor ``j`` to the solution. The optimal value of that round's
surrogate, ``f_star``, never decreases and never exceeds ``min F``.
"""

from dataclasses import dataclass, field

import numpy as np

from .problem import as_vector
from .subproblem import DEFAULT_TOL, solve_subproblem


@dataclass
class SolverState:
    anchors: np.ndarray        # (n, p)
    grads: np.ndarray          # (n, p), grads[i] = grad f_i(anchors[i])
    grad_sum: np.ndarray       # (p,), running sum of grads
    current: np.ndarray        # (p,)
    loss_at_anchor: np.ndarray  # (n,), f_i(anchors[i])
    t: int = 0
    f_star: float = float("nan")
    last_residual: float = 0.0

    def exact_grad_sum(self):
        return self.grads.sum(axis=0)

    def grad_sum_drift(self):
        return float(np.max(np.abs(self.grad_sum - self.exact_grad_sum())))

    def surrogate_value(self, problem, x):
        """Current lower model ``f0(x) + sum_i [f_i(a_i) + <g_i, x - a_i>]``, a minorant of F."""
        lin = float(np.einsum("ij,ij->", self.grads, x - self.anchors))
        return problem.f0.value(x) + float(self.loss_at_anchor.sum()) + lin


@dataclass
class RunTrace:
    """
    Per-round record of a run.

    Row 0 of `iterates` (and the other per-round arrays) is the starting
    point; row ``t`` is the state after round ``t``. `f_star` is NaN where no
    certificate exists (round 0, and methods that do not produce one).
    """

    algorithm: str
    j: np.ndarray
    iterates: np.ndarray
    f_star: np.ndarray
    messages: np.ndarray
    node_error: np.ndarray = None
    info: dict = field(default_factory=dict)

    @property
    def T(self):
        return len(self.j)

    @property
    def final(self):
        return self.iterates[-1]

    def errors(self, x_star):
        """Relative error ``||x_t - x*|| / ||x*||`` for every recorded round."""
        nrm = np.linalg.norm(x_star)
        if nrm == 0:
            raise ValueError("relative error undefined for a zero reference")
        return np.linalg.norm(self.iterates - x_star, axis=1) / nrm


def init_state(problem, x0=None, init="local"):
    """
    Starting state; the reported iterate is `x0` (zero by default).

    init="local" anchors every component at the least-squares fit of its own
    block, where its gradient vanishes (up to rounding), so all stored
    gradients start near zero. init="common" anchors every component at `x0`
    with the exact gradients there.
    """
    p = problem.p
    x0 = np.zeros(p) if x0 is None else as_vector(x0, p, "x0")
    if init == "common":
        anchors = np.tile(x0, (problem.n, 1))
    elif init == "local":
        anchors = np.stack([np.linalg.lstsq(c.A, c.y, rcond=None)[0] for c in problem.components])
    else:
        raise ValueError(f"unknown init {init!r}")
    grads = np.stack([c.grad(a) for c, a in zip(problem.components, anchors)])
    losses = np.array([c.value(a) for c, a in zip(problem.components, anchors)])
    return SolverState(anchors, grads, grads.sum(axis=0), x0.copy(), losses)


def step(state, j, problem, tol=DEFAULT_TOL, max_inner=None):
    """One round with component `j` (0-based); updates `state` in place and returns it."""
    if not 0 <= j < problem.n:
        raise IndexError(f"component index {j} out of range for n={problem.n}")
    fj = problem.components[j]
    s = state.grad_sum - state.grads[j]
    kw = {} if max_inner is None else {"max_iter": max_inner}
    sol = solve_subproblem(problem.f0, fj, s, tol, warm_start=state.anchors[j], **kw)

    state.grad_sum = s + sol.g_new
    state.anchors[j] = sol.x_new
    state.grads[j] = sol.g_new
    state.loss_at_anchor[j] = fj.value(sol.x_new)
    state.current = sol.x_new.copy()
    state.t += 1
    state.last_residual = sol.residual
    state.f_star = state.surrogate_value(problem, sol.x_new)
    return state


def run(problem, schedule, T, x0=None, tol=DEFAULT_TOL, x_star=None, init="local",
        algorithm="stochalm"):
    """
    Run `T` rounds of StochaLM.

    Parameters
    ----------
    problem : CompositeProblem
    schedule : IndexSchedule or iterable of int
        Source of the component indices.
    T : int
        Number of rounds.
    x0 : ndarray, optional
        Starting iterate (zero by default).
    tol : float
        Inner solver tolerance.
    x_star : ndarray, optional
        If given, the trace also records the mean relative anchor error
        across components (`node_error`).
    init : {"local", "common"}
        Anchor initialization, see `init_state`.

    Returns
    -------
    RunTrace
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    state = init_state(problem, x0, init)
    js = iter(schedule)

    p = problem.p
    iterates = np.empty((T + 1, p))
    iterates[0] = state.current
    f_star = np.full(T + 1, np.nan)
    jj = np.empty(T, dtype=np.int64)
    tracker = _NodeErrorTracker(state.anchors, x_star, T)

    for t in range(1, T + 1):
        j = int(next(js))
        step(state, j, problem, tol)
        jj[t - 1] = j
        iterates[t] = state.current
        f_star[t] = state.f_star
        tracker.update(t, j, state.current)

    return RunTrace(algorithm, jj, iterates, f_star, np.zeros(T + 1, dtype=np.int64),
                    tracker.values, {"state": state})


class _NodeErrorTracker:
    """Mean relative error of the per-component anchors, updated one anchor at a time."""

    def __init__(self, anchors, x_star, T):
        if x_star is None:
            self.values = None
            return
        self.x_star = x_star
        self.nrm = np.linalg.norm(x_star)
        self.err = np.linalg.norm(anchors - x_star, axis=1) / self.nrm
        self.values = np.empty(T + 1)
        self.values[0] = self.err.mean()

    def update(self, t, j, x):
        if self.values is None:
            return
        self.err[j] = np.linalg.norm(x - self.x_star) / self.nrm
        self.values[t] = self.err.mean()
