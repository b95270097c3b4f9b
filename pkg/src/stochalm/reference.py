"""
High-accuracy minimizer of the full objective, used as ground truth.

Deliberately a different algorithm family from the StochaLM path: a single
linear solve for ridge least squares, and accelerated proximal gradient on
the whole of ``F`` otherwise.
"""

from dataclasses import dataclass
import json

import numpy as np

from .problem import QuadraticLoss, Ridge, as_vector, soft_threshold
from .subproblem import optimality_residual


class OracleError(RuntimeError):
    def __init__(self, msg, x, residual):
        super().__init__(msg)
        self.x = x
        self.residual = residual


@dataclass(frozen=True)
class Reference:
    x_star: np.ndarray
    F_star: float
    residual: float
    method: str

    def to_dict(self):
        return {"x_star": self.x_star.tolist(), "F_star": self.F_star,
                "residual": self.residual, "method": self.method}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["x_star"], dtype=float), float(d["F_star"]),
                   float(d["residual"]), d["method"])

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def full_residual(problem, x):
    """Optimality residual of ``F`` at `x`."""
    return optimality_residual(problem.f0, x, problem.grads(x).sum(axis=0))


def _direct(problem):
    p = problem.p
    H = problem.f0.lam * np.eye(p)
    b = np.zeros(p)
    for c in problem.components:
        H += c.A.T @ c.A / c.n
        b += c.A.T @ c.y / c.n
    return np.linalg.solve(H, b)


def _prox_grad(problem, tol, max_iter, x0=None):
    f0 = problem.f0
    l1, l2 = f0.l1, f0.l2
    H = sum(c.A.T @ c.A / c.n for c in problem.components)
    L = float(np.linalg.eigvalsh(H)[-1]) + l2
    mu = l2
    beta = (np.sqrt(L) - np.sqrt(mu)) / (np.sqrt(L) + np.sqrt(mu))

    x = np.zeros(problem.p) if x0 is None else as_vector(x0, problem.p).copy()
    y = x
    best = (np.inf, x)
    for _ in range(int(max_iter)):
        gy = problem.grads(y).sum(axis=0) + l2 * y
        x_new = soft_threshold(y - gy / L, l1 / L)
        res = full_residual(problem, x_new)
        if res < best[0]:
            best = (res, x_new)
        if res <= tol:
            return x_new, res
        y = x_new + beta * (x_new - x)
        x = x_new
    raise OracleError(f"reference solver stopped at residual {best[0]:.3e}", best[1], best[0])


def solve_reference(problem, method="auto", tol=1e-10, max_iter=1_000_000):
    """
    Minimizer ``x*`` and optimal value ``F*`` of `problem`.

    Parameters
    ----------
    method : {"auto", "direct", "prox_grad"}
        "auto" picks the linear solve for ridge with quadratic losses and
        accelerated proximal gradient for everything else.
    tol : float
        Residual target for the iterative method.

    Returns
    -------
    Reference
    """
    direct_ok = isinstance(problem.f0, Ridge) and all(
        isinstance(c, QuadraticLoss) for c in problem.components)
    if method == "auto":
        method = "direct" if direct_ok else "prox_grad"
    if method == "direct":
        if not direct_ok:
            raise ValueError("direct solve needs ridge + quadratic losses")
        x = _direct(problem)
        res = full_residual(problem, x)
    elif method == "prox_grad":
        x, res = _prox_grad(problem, tol, max_iter)
    else:
        raise ValueError(f"unknown method {method!r}")
    return Reference(x, problem.value(x), res, method)
