"""
Composite objectives ``F(x) = f0(x) + sum_i f_i(x)``.

``f0`` is a strongly convex regularizer (ridge or elastic net) and every
``f_i`` is a real-valued, differentiable loss on a private data block
``(A_i, y_i)``. Vectors are plain 1-d float64 ndarrays.
"""

from dataclasses import dataclass, field
from functools import cached_property
import json

import numpy as np


def as_vector(x, p=None, name="x"):
    """Return `x` as a finite 1-d float array, checking its length against `p`."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-d, got shape {v.shape}")
    if p is not None and v.shape[0] != p:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {p}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def soft_threshold(v, thresh):
    """Proximal operator of ``thresh * ||.||_1``."""
    return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)


#%% REGULARIZERS

@dataclass(frozen=True)
class Ridge:
    """``f0(x) = (lam/2) ||x||^2``."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("ridge weight must be positive (f0 must be strongly convex)")

    @property
    def mu(self):
        return self.lam

    # weights of the l1 and squared-l2 parts; lets solvers treat both kinds alike
    @property
    def l1(self):
        return 0.0

    @property
    def l2(self):
        return self.lam

    def value(self, x):
        return 0.5 * self.lam * float(x @ x)

    def to_dict(self):
        return {"kind": "ridge", "lam": self.lam}


@dataclass(frozen=True)
class ElasticNet:
    """``f0(x) = l1 ||x||_1 + (l2/2) ||x||^2``."""

    l1: float
    l2: float

    def __post_init__(self):
        if self.l1 < 0:
            raise ValueError("l1 weight must be nonnegative")
        if not self.l2 > 0:
            raise ValueError("l2 weight must be positive (f0 must be strongly convex)")

    @property
    def mu(self):
        return self.l2

    def value(self, x):
        return self.l1 * float(np.abs(x).sum()) + 0.5 * self.l2 * float(x @ x)

    def to_dict(self):
        return {"kind": "elastic_net", "l1": self.l1, "l2": self.l2}


#%% LOSSES

def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True, eq=False)
class _DataLoss:
    A: np.ndarray
    y: np.ndarray
    n: int

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if A.shape[0] != y.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but y has length {y.shape[0]}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(y))):
            raise ValueError("data block has non-finite entries")
        if int(self.n) < 1:
            raise ValueError("component count n must be >= 1")
        A.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "n", int(self.n))

    @property
    def p(self):
        return self.A.shape[1]

    @property
    def m(self):
        return self.A.shape[0]

    @cached_property
    def lipschitz(self):
        """Lipschitz constant of the gradient, ``||A||_2^2 / n``."""
        return float(np.linalg.norm(self.A, 2) ** 2) / self.n

    def residual(self, x):
        return x @ self.A.T - self.y


@dataclass(frozen=True, eq=False)
class QuadraticLoss(_DataLoss):
    """
    ``f(x) = ||A x - y||^2 / (2n)``.

    `value` and `grad` also accept a ``(k, p)`` batch of points.
    """

    def value(self, x):
        r = self.residual(x)
        return _scalar(np.sum(r * r, axis=-1) / (2 * self.n))

    def grad(self, x):
        return self.residual(x) @ self.A / self.n

    def to_dict(self):
        return {"kind": "quadratic", "n": self.n, "m": self.m, "A": self.A.tolist(), "y": self.y.tolist()}


def huber(r, M):
    """Elementwise Huber function with half-width `M`."""
    a = np.abs(r)
    return np.where(a <= M, 0.5 * r * r, M * a - 0.5 * M * M)


@dataclass(frozen=True, eq=False)
class HuberLoss(_DataLoss):
    """``f(x) = (1/n) sum_k huber_M(A_k x - y_k)``; batches work as for `QuadraticLoss`."""

    M: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if not self.M > 0:
            raise ValueError("Huber half-width must be positive")

    def value(self, x):
        return _scalar(huber(self.residual(x), self.M).sum(axis=-1) / self.n)

    def grad(self, x):
        return np.clip(self.residual(x), -self.M, self.M) @ self.A / self.n

    def to_dict(self):
        return {"kind": "huber", "n": self.n, "m": self.m, "M": self.M, "A": self.A.tolist(), "y": self.y.tolist()}


#%% PROBLEM

@dataclass(frozen=True, eq=False)
class CompositeProblem:
    """
    ``F(x) = f0(x) + sum_i f_i(x)`` with a strongly convex `f0`.

    All supported parts are real-valued on R^p, so the closedness, continuity
    and Slater conditions needed for convergence hold by construction; only
    shapes and the strong convexity constant need checking.
    """

    f0: object
    components: tuple = field(default_factory=tuple)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("need at least one loss component")
        p = comps[0].p
        for i, c in enumerate(comps):
            if c.p != p:
                raise ValueError(f"component {i} has dimension {c.p}, expected {p}")
        if not self.f0.mu > 0:
            raise ValueError("f0 must be strongly convex")
        object.__setattr__(self, "components", comps)

    @property
    def n(self):
        return len(self.components)

    @property
    def p(self):
        return self.components[0].p

    def value(self, x):
        x = as_vector(x, self.p)
        return self.f0.value(x) + sum(c.value(x) for c in self.components)

    def grads(self, x):
        """``(n, p)`` array stacking every component gradient at `x`."""
        x = as_vector(x, self.p)
        return np.stack([c.grad(x) for c in self.components])

    def to_dict(self):
        return {
            "f0": self.f0.to_dict(),
            "n": self.n,
            "p": self.p,
            "m": [c.m for c in self.components],
            "components": [c.to_dict() for c in self.components],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(regularizer_from_dict(d["f0"]), [loss_from_dict(c) for c in d["components"]])

    def save(self, path, **extra):
        d = self.to_dict()
        d.update(extra)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(d, fh)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def regularizer_from_dict(d):
    if d["kind"] == "ridge":
        return Ridge(float(d["lam"]))
    if d["kind"] == "elastic_net":
        return ElasticNet(float(d["l1"]), float(d["l2"]))
    raise ValueError(f"unknown regularizer kind {d['kind']!r}")


def loss_from_dict(d):
    if d["kind"] == "quadratic":
        return QuadraticLoss(d["A"], d["y"], d["n"])
    if d["kind"] == "huber":
        return HuberLoss(d["A"], d["y"], d["n"], float(d["M"]))
    raise ValueError(f"unknown loss kind {d['kind']!r}")


#%% FUNCTIONAL INTERFACE

def eval_component(c, x):
    return c.value(as_vector(x, c.p))


def subgradient_component(c, x):
    return c.grad(as_vector(x, c.p))


def eval_regularizer(r, x, p=None):
    return r.value(as_vector(x, p))


def eval_full(problem, x):
    return problem.value(x)
