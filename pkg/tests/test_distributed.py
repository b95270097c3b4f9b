import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochalm.distributed import (CommLedger, Graph, build_metropolis_transitions, complete_graph,
                                  make_graph, path_graph, random_graph, ring_graph,
                                  run_decentralized, run_federated, star_graph)
from stochalm.engine import run
from stochalm.problem import CompositeProblem, QuadraticLoss, Ridge
from stochalm.reference import solve_reference
from stochalm.schedules import IID, MarkovChain

from conftest import random_problem


#%% graphs and transition matrices

def test_metropolis_path():
    P = build_metropolis_transitions(path_graph(3))
    np.testing.assert_allclose(P, [[0.5, 0.5, 0], [0.5, 0, 0.5], [0, 0.5, 0.5]])
    np.testing.assert_allclose(P.T @ np.full(3, 1 / 3), np.full(3, 1 / 3))


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_metropolis_complete(n):
    P = build_metropolis_transitions(complete_graph(n))
    np.testing.assert_allclose(P, (np.ones((n, n)) - np.eye(n)) / (n - 1))


def test_metropolis_single_edge():
    np.testing.assert_array_equal(build_metropolis_transitions(path_graph(2)), [[0, 1], [1, 0]])


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 30), p_edge=st.floats(0.2, 1.0), seed=st.integers(0, 2**32 - 1))
def test_metropolis_doubly_stochastic(n, p_edge, seed):
    G = random_graph(n, p_edge, seed)
    P = build_metropolis_transitions(G)
    assert np.all(P >= 0)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(P, P.T)
    off = ~np.eye(n, dtype=bool)
    assert np.array_equal(P[off] > 0, G.adjacency()[off])


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(3, frozenset({(0, 0), (0, 1), (1, 2)}))
    with pytest.raises(ValueError):
        Graph(4, frozenset({(0, 1), (2, 3)}))
    with pytest.raises(ValueError):
        Graph(2, frozenset({(0, 2)}))


def test_graph_builders():
    assert len(ring_graph(6).edges) == 6
    assert list(star_graph(5).degrees()) == [4, 1, 1, 1, 1]
    assert path_graph(4).neighbors(1) == [0, 2]
    assert make_graph({"kind": "complete"}, 4) == complete_graph(4)
    assert make_graph({"kind": "random", "p_edge": 0.3, "seed": 7}, 10) == random_graph(10, 0.3, 7)
    with pytest.raises(ValueError):
        make_graph({"kind": "hypercube"}, 4)


def test_graph_file_round_trip(tmp_path):
    G = random_graph(12, 0.3, 4)
    path = tmp_path / "g.json"
    G.save(path)
    assert Graph.load(path) == G
    assert make_graph({"kind": "file", "path": str(path)}, 12) == G


#%% federated

def test_federated_matches_centralized(rng):
    prob = random_problem(rng, 6, 8, 3, loss="huber")
    cen = run(prob, IID(6, seed=3), 200)
    fed, _ = run_federated(prob, IID(6, seed=3), 200)
    np.testing.assert_array_equal(fed.j, cen.j)
    assert np.max(np.abs(fed.iterates - cen.iterates)) <= 1e-12
    np.testing.assert_allclose(fed.f_star[1:], cen.f_star[1:], atol=1e-10)


def test_federated_ledger_counts(rng):
    prob = random_problem(rng, 30, 10, 2)
    T = 90
    trace, ledger = run_federated(prob, IID(30, seed=0), T)
    assert ledger.total_messages == 2 * T + 30
    assert trace.messages[-1] == 2 * T + 30
    per = ledger.per_round(T)
    assert per[0] == 30 and np.all(per[1:] == 2)


def test_federated_single_node():
    prob = CompositeProblem(Ridge(1.0), [QuadraticLoss([[1.0]], [2.0], 1)])
    trace, _ = run_federated(prob, IID(1), 1)
    assert trace.final[0] == pytest.approx(1.0, abs=1e-12)


def test_ledger_csv(rng):
    prob = random_problem(rng, 3, 4, 2)
    _, ledger = run_federated(prob, IID(3, seed=0), 5)
    buf = io.StringIO()
    ledger.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "round,messages,scalars"
    assert lines[1] == "0,3,12" and lines[2] == "1,2,12"
    assert len(lines) == 7


def test_ledger_basics():
    led = CommLedger()
    led.record(0, 3, 6)
    led.record(2, 1, 2, [(0, 1)])
    assert list(led.per_round(3)) == [3, 0, 1, 0]
    assert list(led.cumulative(3)) == [3, 3, 4, 4]
    assert led.total_scalars == 8 and led.links[(0, 1)] == 1


#%% decentralized

def test_decentralized_matches_markov_schedule(rng):
    prob = random_problem(rng, 8, 6, 3)
    G = random_graph(8, 0.4, 1)
    dec, ledger = run_decentralized(prob, G, 5, 300, start=2)
    cen = run(prob, MarkovChain(build_metropolis_transitions(G), 2, 5), 300)
    np.testing.assert_array_equal(dec.j, cen.j)
    assert np.max(np.abs(dec.iterates - cen.iterates)) <= 1e-12
    assert ledger.total_messages == 300 + 8
    assert sum(ledger.links.values()) == 300


def test_token_only_moves_along_edges(rng):
    prob = random_problem(rng, 6, 4, 2)
    G = path_graph(6)
    tr, ledger = run_decentralized(prob, G, 0, 500)
    W = G.adjacency()
    for (a, b), _ in ledger.links.items():
        assert a == b or W[a, b]


def test_decentralized_drift_audit(rng):
    prob = random_problem(rng, 10, 8, 3, loss="huber")
    tr, _ = run_decentralized(prob, ring_graph(10), 0, 2000, audit_every=1)
    assert tr.info["max_drift"] <= 1e-10


def test_decentralized_size_mismatch(rng):
    prob = random_problem(rng, 4, 3, 2)
    with pytest.raises(ValueError):
        run_decentralized(prob, ring_graph(5), 0, 10)


def test_decentralized_certificate(rng):
    prob = random_problem(rng, 6, 5, 3)
    ref = solve_reference(prob)
    tr, _ = run_decentralized(prob, ring_graph(6), 3, 300)
    fs = tr.f_star[1:]
    assert np.all(np.diff(fs) >= -1e-9) and np.all(fs <= ref.F_star + 1e-8)
