"""
Per-round subproblem ``min_x f0(x) + f_j(x) + <s, x>``.

Ridge with a quadratic loss is a linear system. Everything else goes through
an accelerated proximal-gradient loop (soft-thresholding handles the l1 part
of an elastic net) that stops on the optimality residual.
"""

from dataclasses import dataclass

import numpy as np

from .problem import QuadraticLoss, Ridge, as_vector, soft_threshold

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000


class SubproblemError(RuntimeError):
    """Inner solver ran out of iterations; carries the best iterate found."""

    def __init__(self, msg, x, residual, iters):
        super().__init__(msg)
        self.x = x
        self.residual = residual
        self.iters = iters


@dataclass(frozen=True)
class SubproblemSolution:
    x_new: np.ndarray
    g_new: np.ndarray
    residual: float
    inner_iters: int


def optimality_residual(f0, x, g_sum):
    """
    Distance from ``-g_sum`` to the subdifferential of `f0` at `x`.

    Zero exactly when ``0 in df0(x) + g_sum``. For the l1 part the best
    subgradient is picked per coordinate: ``sign(x_k)`` off zero, and the
    clamp of ``-g_sum_k`` to ``[-l1, l1]`` at zero.
    """
    x = np.asarray(x, dtype=float)
    g_sum = np.asarray(g_sum, dtype=float)
    if x.shape != g_sum.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {g_sum.shape}")
    u = f0.l2 * x + f0.l1 * np.sign(x)
    at_zero = x == 0
    if f0.l1 > 0 and at_zero.any():
        u[at_zero] = np.clip(-g_sum[at_zero], -f0.l1, f0.l1)
    return float(np.linalg.norm(u + g_sum))


def _direct_ridge_quadratic(f0, fj, s):
    A, n = fj.A, fj.n
    m, p = A.shape
    rhs = A.T @ fj.y / n - s
    if m < p:
        # Woodbury: (lam I + A^T A / n)^{-1} b = (b - A^T (n lam I + A A^T)^{-1} A b) / lam
        K = A @ A.T + n * f0.lam * np.eye(m)
        return (rhs - A.T @ np.linalg.solve(K, A @ rhs)) / f0.lam
    H = A.T @ A / n + f0.lam * np.eye(p)
    return np.linalg.solve(H, rhs)


def solve_subproblem(f0, fj, s, tol=DEFAULT_TOL, warm_start=None, max_iter=DEFAULT_MAX_ITER,
                     method="auto"):
    """
    Minimize ``f0(x) + f_j(x) + <s, x>``.

    Parameters
    ----------
    f0 : Ridge or ElasticNet
    fj : QuadraticLoss or HuberLoss
    s : ndarray
        Linear term, in the algorithm the sum of the other components'
        stored subgradients.
    tol : float
        Target for `optimality_residual` at the returned point.
    warm_start : ndarray, optional
        Starting point of the iterative solver (zero if omitted).
    method : {"auto", "direct", "iterative"}
        "auto" uses the linear solve whenever the pair allows it.

    Returns
    -------
    SubproblemSolution
        ``g_new`` is the loss gradient at ``x_new``, so it is an exact
        subgradient of `fj` even when the solve is inexact.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    p = fj.p
    s = as_vector(s, p, "s")

    direct_ok = isinstance(f0, Ridge) and isinstance(fj, QuadraticLoss)
    if method == "direct" and not direct_ok:
        raise ValueError("direct solve needs a ridge regularizer and a quadratic loss")
    if method not in ("auto", "direct", "iterative"):
        raise ValueError(f"unknown method {method!r}")

    if direct_ok and method != "iterative":
        x = _direct_ridge_quadratic(f0, fj, s)
        g = fj.grad(x)
        return SubproblemSolution(x, g, optimality_residual(f0, x, g + s), 0)

    x = np.zeros(p) if warm_start is None else as_vector(warm_start, p, "warm_start").copy()
    g = fj.grad(x)
    res = optimality_residual(f0, x, g + s)
    if res <= tol:
        return SubproblemSolution(x, g, res, 0)

    l1, l2 = f0.l1, f0.l2
    L = fj.lipschitz + l2
    mu = l2
    beta = (np.sqrt(L) - np.sqrt(mu)) / (np.sqrt(L) + np.sqrt(mu))
    best = (res, x, g)

    y = x
    for k in range(1, max_iter + 1):
        grad_y = fj.grad(y) + l2 * y + s
        x_new = soft_threshold(y - grad_y / L, l1 / L)
        g = fj.grad(x_new)
        res = optimality_residual(f0, x_new, g + s)
        if res <= tol:
            return SubproblemSolution(x_new, g, res, k)
        if res < best[0]:
            best = (res, x_new, g)
        y = x_new + beta * (x_new - x)
        x = x_new

    raise SubproblemError(
        f"inner solver stopped at residual {best[0]:.3e} > {tol:.1e} after {max_iter} iterations",
        best[1], best[0], max_iter)
