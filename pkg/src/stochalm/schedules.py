"""
Index schedules producing the component sequence ``j(t)``.

Indices are 0-based. Every schedule visits each index infinitely often
(with probability one), which is all the solver needs; none of them has to
be uniform.
"""

import numpy as np
from scipy.sparse.csgraph import connected_components


class IndexSchedule:
    """Base class; subclasses implement `next_index`."""

    n: int

    def next_index(self):
        raise NotImplementedError

    def draw(self, T):
        """The next `T` indices as an int array."""
        return np.fromiter((self.next_index() for _ in range(T)), dtype=np.int64, count=T)

    def __iter__(self):
        while True:
            yield self.next_index()


class IID(IndexSchedule):
    """Independent draws with fixed positive probabilities (uniform by default)."""

    def __init__(self, n, probs=None, seed=0):
        self.n = int(n)
        if probs is None:
            probs = np.full(self.n, 1.0 / self.n)
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (self.n,):
            raise ValueError(f"need {self.n} probabilities, got {probs.shape}")
        if np.any(probs <= 0):
            raise ValueError("every probability must be positive, otherwise some index is never selected")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {probs.sum()}, not 1")
        self.probs = probs
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self._cdf = np.cumsum(probs)
        self._cdf[-1] = 1.0

    def next_index(self):
        return int(np.searchsorted(self._cdf, self._rng.random(), side="right"))


class Cyclic(IndexSchedule):
    """0, 1, ..., n-1, 0, 1, ..."""

    def __init__(self, n, seed=None):
        self.n = int(n)
        self.seed = seed
        self._t = 0

    def next_index(self):
        j = self._t % self.n
        self._t += 1
        return j


class EssentiallyCyclic(IndexSchedule):
    """
    Random order in which every index appears in every window of `period` steps.

    Draws uniformly at random except when some index is about to overrun its
    deadline, in which case that index is forced. Deadlines are distinct by
    construction, so at most one index is forced per step.
    """

    def __init__(self, n, period, seed=0):
        self.n = int(n)
        if period < self.n:
            raise ValueError(f"period {period} is shorter than n={self.n}")
        self.period = int(period)
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self._last = np.arange(self.n) - self.n
        self._t = 0

    def next_index(self):
        deadlines = self._last + self.period
        j = int(np.argmin(deadlines))
        if deadlines[j] > self._t:
            j = int(self._rng.integers(self.n))
        self._last[j] = self._t
        self._t += 1
        return j


def is_irreducible(P):
    """True when the directed graph of positive entries is strongly connected."""
    ncomp, _ = connected_components(np.asarray(P) > 0, directed=True, connection="strong")
    return ncomp == 1


class MarkovChain(IndexSchedule):
    """
    Index follows a Markov chain; each call returns the state after one transition.

    The chain must be irreducible, which makes every state recurrent. It is
    allowed to be periodic (e.g. the random walk on an even ring); the
    `aperiodic` attribute tells which case applies.
    """

    def __init__(self, transition, start=0, seed=0):
        P = np.asarray(transition, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError("transition matrix must be square")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("transition matrix must be row-stochastic")
        if not is_irreducible(P):
            raise ValueError("transition matrix is reducible; some index would stop being visited")
        self.n = P.shape[0]
        if not 0 <= start < self.n:
            raise ValueError(f"start state {start} out of range")
        self.transition = P
        self.aperiodic = bool(np.any(np.diag(P) > 0))
        self.start = int(start)
        self.seed = seed
        self.state = int(start)
        self._rng = np.random.default_rng(seed)
        self._cdf = np.cumsum(P, axis=1)
        self._cdf[:, -1] = 1.0

    def next_index(self):
        self.state = int(np.searchsorted(self._cdf[self.state], self._rng.random(), side="right"))
        return self.state


def next_index(schedule):
    return schedule.next_index()


def make_schedule(kind, n, seed=0, **kw):
    """Build a schedule by name: "uniform", "iid", "cyclic", "essentially_cyclic", "markov"."""
    if kind == "uniform":
        return IID(n, seed=seed)
    if kind == "iid":
        return IID(n, kw.get("probs"), seed=seed)
    if kind == "cyclic":
        return Cyclic(n)
    if kind == "essentially_cyclic":
        return EssentiallyCyclic(n, kw.get("period", 2 * n), seed=seed)
    if kind == "markov":
        return MarkovChain(kw["transition"], kw.get("start", 0), seed=seed)
    raise ValueError(f"unknown schedule kind {kind!r}")
