"""
Round-by-round simulators for the federated and token-passing variants.

Both replay the centralized update exactly, only the bookkeeping moves: in
the federated version a central node stores every ``g_i`` and a worker solves
the subproblem; in the decentralized version a token carrying the current
iterate and the running gradient sum walks over the network.
"""

from collections import Counter, deque
from dataclasses import dataclass, field
import csv
import json

import numpy as np
from scipy.sparse.csgraph import connected_components

from .engine import RunTrace, _NodeErrorTracker, init_state
from .schedules import MarkovChain
from .subproblem import DEFAULT_TOL, solve_subproblem


#%% NETWORK

@dataclass(frozen=True)
class Graph:
    """Undirected connected graph on nodes ``0..n_nodes-1``."""

    n_nodes: int
    edges: frozenset

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("graph needs at least one node")
        norm = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop at node {a}")
            if not (0 <= a < self.n_nodes and 0 <= b < self.n_nodes):
                raise ValueError(f"edge ({a}, {b}) out of range")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))
        ncomp, _ = connected_components(self.adjacency(), directed=False)
        if ncomp != 1:
            raise ValueError("graph is not connected")

    def adjacency(self):
        W = np.zeros((self.n_nodes, self.n_nodes), dtype=bool)
        for a, b in self.edges:
            W[a, b] = W[b, a] = True
        return W

    def degrees(self):
        return self.adjacency().sum(axis=1)

    def neighbors(self, i):
        return [int(k) for k in np.flatnonzero(self.adjacency()[i])]

    def to_dict(self):
        return {"n_nodes": self.n_nodes, "edges": sorted(list(e) for e in self.edges)}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["n_nodes"]), frozenset(tuple(e) for e in d["edges"]))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def path_graph(n):
    return Graph(n, frozenset((i, i + 1) for i in range(n - 1)))


def ring_graph(n):
    if n < 3:
        return path_graph(n)
    return Graph(n, frozenset((i, (i + 1) % n) for i in range(n)))


def star_graph(n):
    return Graph(n, frozenset((0, i) for i in range(1, n)))


def complete_graph(n):
    return Graph(n, frozenset((i, k) for i in range(n) for k in range(i + 1, n)))


def random_graph(n, p_edge=0.2, seed=0, max_tries=1000):
    """Erdos-Renyi graph, resampled until connected."""
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    for _ in range(max_tries):
        keep = rng.random(len(iu[0])) < p_edge
        edges = frozenset(zip(iu[0][keep].tolist(), iu[1][keep].tolist()))
        try:
            return Graph(n, edges)
        except ValueError:
            continue
    raise ValueError(f"no connected graph with p_edge={p_edge} after {max_tries} draws")


def make_graph(spec, n):
    """Graph from a config dict such as ``{"kind": "random", "p_edge": 0.2, "seed": 3}``."""
    kind = spec.get("kind", "ring")
    if kind == "file":
        return Graph.load(spec["path"])
    if kind == "path":
        return path_graph(n)
    if kind == "ring":
        return ring_graph(n)
    if kind == "star":
        return star_graph(n)
    if kind == "complete":
        return complete_graph(n)
    if kind == "random":
        return random_graph(n, spec.get("p_edge", 0.2), spec.get("seed", 0))
    raise ValueError(f"unknown graph kind {kind!r}")


def build_metropolis_transitions(G):
    """
    Metropolis-Hastings random walk with uniform stationary distribution.

    ``P[i, k] = min(1/deg(i), 1/deg(k))`` on edges, the leftover mass on the
    diagonal. Each node only needs its neighbors' degrees.
    """
    deg = G.degrees()
    P = np.zeros((G.n_nodes, G.n_nodes))
    for a, b in G.edges:
        P[a, b] = P[b, a] = min(1.0 / deg[a], 1.0 / deg[b])
    np.fill_diagonal(P, 0.0)
    # rounding can push a zero diagonal slightly negative
    np.fill_diagonal(P, np.maximum(1.0 - P.sum(axis=1), 0.0))
    return P


#%% COMMUNICATION ACCOUNTING

@dataclass
class CommLedger:
    """Messages and scalars sent per round (round 0 is initialization)."""

    rows: list = field(default_factory=list)
    links: Counter = field(default_factory=Counter)

    def record(self, rnd, messages, scalars, links=()):
        self.rows.append((rnd, messages, scalars))
        for link in links:
            self.links[link] += 1

    @property
    def total_messages(self):
        return sum(r[1] for r in self.rows)

    @property
    def total_scalars(self):
        return sum(r[2] for r in self.rows)

    def per_round(self, T):
        """Messages in each round ``0..T``."""
        out = np.zeros(T + 1, dtype=np.int64)
        for rnd, msgs, _ in self.rows:
            out[rnd] += msgs
        return out

    def cumulative(self, T):
        return np.cumsum(self.per_round(T))

    def write_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "messages", "scalars"])
        for row in self.rows:
            w.writerow(row)


#%% SIMULATED PARTIES

class _Node:
    """Peripheral node owning one loss and its (anchor, gradient) pair."""

    def __init__(self, idx, loss, x, g, value):
        self.idx = idx
        self.loss = loss
        self.x = x
        self.g = g
        self.value = value
        self.version = 0

    def solve(self, f0, s, tol):
        sol = solve_subproblem(f0, self.loss, s, tol, warm_start=self.x)
        self.x, self.g = sol.x_new, sol.g_new
        self.value = self.loss.value(sol.x_new)
        self.version += 1
        return sol


def _make_nodes(problem, x0, init):
    st = init_state(problem, x0, init)
    nodes = [_Node(i, c, st.anchors[i].copy(), st.grads[i].copy(), st.loss_at_anchor[i])
             for i, c in enumerate(problem.components)]
    return st.current, nodes


def _probe_f_star(problem, nodes, x):
    # global audit view, not part of any message
    lin = sum(float(nd.g @ (x - nd.x)) for nd in nodes)
    return problem.f0.value(x) + sum(nd.value for nd in nodes) + lin


def run_federated(problem, schedule, T, x0=None, tol=DEFAULT_TOL, x_star=None, init="local"):
    """
    Fed-StochaLM: a central node stores all ``g_i`` and picks a worker per round.

    Each round costs two messages: the central node sends the sum of the other
    gradients down, the worker sends its new ``(x_j, g_j)`` back. Before the
    first round every worker uploads its initial gradient.

    Returns
    -------
    (RunTrace, CommLedger)
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    p, n = problem.p, problem.n
    x_c, nodes = _make_nodes(problem, x0, init)
    ledger = CommLedger()

    g_table = np.stack([nd.g for nd in nodes])
    ledger.record(0, n, n * p, [(i, "center") for i in range(n)])
    g_sum = g_table.sum(axis=0)

    iterates = np.empty((T + 1, p))
    iterates[0] = x_c
    f_star = np.full(T + 1, np.nan)
    jj = np.empty(T, dtype=np.int64)
    tracker = _NodeErrorTracker(np.stack([nd.x for nd in nodes]), x_star, T)
    js = iter(schedule)

    for t in range(1, T + 1):
        j = int(next(js))
        down = g_sum - g_table[j]
        sol = nodes[j].solve(problem.f0, down, tol)
        x_new, g_new = sol.x_new.copy(), sol.g_new.copy()
        ledger.record(t, 2, 3 * p, [("center", j), (j, "center")])

        g_sum = down + g_new
        g_table[j] = g_new
        x_c = x_new

        jj[t - 1] = j
        iterates[t] = x_c
        f_star[t] = _probe_f_star(problem, nodes, x_c)
        tracker.update(t, j, x_new)

    trace = RunTrace("fed-stochalm", jj, iterates, f_star, ledger.cumulative(T), tracker.values,
                     {"grad_sum": g_sum, "grad_table": g_table})
    return trace, ledger


@dataclass
class Token:
    x0: np.ndarray
    g_bar: np.ndarray
    location: int


def _spanning_tree_sum(G, root, vectors):
    # convergecast over a BFS tree; children are folded into parents deepest-first
    parent = {root: None}
    order = [root]
    q = deque([root])
    while q:
        u = q.popleft()
        for v in G.neighbors(u):
            if v not in parent:
                parent[v] = u
                order.append(v)
                q.append(v)
    partial = {i: vectors[i].copy() for i in order}
    for v in reversed(order[1:]):
        partial[parent[v]] += partial[v]
    return partial[root]


def run_decentralized(problem, G, seed, T, x0=None, tol=DEFAULT_TOL, start=0, x_star=None,
                      init="local", audit_every=0):
    """
    Dist-StochaLM: a token walks the graph along the Metropolis chain.

    The visited node updates its own pair and the token's ``(x0, g_bar)``; no
    other node changes state in that round, which the simulator checks.
    The index stream equals that of ``MarkovChain(build_metropolis_transitions(G),
    start, seed)``.

    Parameters
    ----------
    audit_every : int
        If positive, every that many rounds compare the token's gradient sum
        with the freshly recomputed one; the worst gap lands in
        ``trace.info["max_drift"]``.

    Returns
    -------
    (RunTrace, CommLedger)
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if G.n_nodes != problem.n:
        raise ValueError(f"graph has {G.n_nodes} nodes but problem has {problem.n} components")
    p, n = problem.p, problem.n
    chain = MarkovChain(build_metropolis_transitions(G), start, seed)
    x_c, nodes = _make_nodes(problem, x0, init)
    ledger = CommLedger()

    token = Token(x_c, _spanning_tree_sum(G, start, [nd.g for nd in nodes]), start)
    ledger.record(0, n, n * p)

    iterates = np.empty((T + 1, p))
    iterates[0] = token.x0
    f_star = np.full(T + 1, np.nan)
    jj = np.empty(T, dtype=np.int64)
    tracker = _NodeErrorTracker(np.stack([nd.x for nd in nodes]), x_star, T)
    max_drift = 0.0

    for t in range(1, T + 1):
        j = chain.next_index()
        ledger.record(t, 1, 2 * p, [(token.location, j)])
        token.location = j
        before = [nd.version for nd in nodes]

        node = nodes[j]
        s = token.g_bar - node.g
        sol = node.solve(problem.f0, s, tol)
        token.x0 = sol.x_new.copy()
        token.g_bar = s + sol.g_new

        changed = [i for i, nd in enumerate(nodes) if nd.version != before[i]]
        assert changed == [j], f"round {t}: nodes {changed} changed, only {j} may"

        if audit_every and t % audit_every == 0:
            exact = np.sum([nd.g for nd in nodes], axis=0)
            max_drift = max(max_drift, float(np.max(np.abs(token.g_bar - exact))))

        jj[t - 1] = j
        iterates[t] = token.x0
        f_star[t] = _probe_f_star(problem, nodes, token.x0)
        tracker.update(t, j, token.x0)

    trace = RunTrace("dist-stochalm", jj, iterates, f_star, ledger.cumulative(T), tracker.values,
                     {"token": token, "max_drift": max_drift,
                      "node_grads": np.stack([nd.g for nd in nodes])})
    return trace, ledger
