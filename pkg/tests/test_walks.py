import itertools
import math
from collections import defaultdict

import numpy as np
import pytest

from conftest import random_network
from tempo import BudgetExceeded, TemporalNetwork, assemble_time_evolving, enumerate_walks, recurrence_check, tally_walks
from tempo.walks import oracle_series, tally_alternating_walks


def test_single_edge():
    net = TemporalNetwork.from_edges(2, [[(1, 2, 3.0)]])
    walks = enumerate_walks(net, 1)
    assert len(walks) == 1 and walks[0].weight == 3 and walks[0].nodes == (0, 1)


def test_backtrack_excluded():
    net = TemporalNetwork.from_edges(2, [[(1, 2, 1.0), (2, 1, 1.0)]])
    assert [w for w in enumerate_walks(net, 2, nonbacktracking=True) if w.nodes[0] == 0] == []
    assert len([w for w in enumerate_walks(net, 2) if w.nodes[0] == 0]) == 1


def test_time_respecting_order():
    net = TemporalNetwork.from_edges(3, [[(1, 2, 1.0)], [(2, 3, 1.0)]])
    walks = enumerate_walks(net, 2)
    assert [(w.nodes, w.frames) for w in walks] == [((0, 1, 2), (0, 1))]
    reversed_net = TemporalNetwork.from_edges(3, [[(2, 3, 1.0)], [(1, 2, 1.0)]])
    assert enumerate_walks(reversed_net, 2) == []


def test_labels_distinguish_walks():
    net = TemporalNetwork.from_edges(2, [[(1, 2, 1.0)], [(1, 2, 1.0)]])
    walks = enumerate_walks(net, 1)
    assert sorted(w.frames for w in walks) == [(0,), (1,)]


def test_budget_is_an_error(rng):
    net = random_network(rng, 4, 3, density=0.9)
    with pytest.raises(BudgetExceeded):
        enumerate_walks(net, 6, budget=100)


def test_length_one_reproduces_adjacency(rng):
    net = random_network(rng, 4, 3)
    A = assemble_time_evolving(net).materialize()
    assert np.array_equal(tally_walks(net, 1).as_blocks(), A)
    assert np.array_equal(tally_walks(net, 0).as_blocks(), np.eye(12))


def test_walk_power_identity(rng):
    for _ in range(5):
        net = random_network(rng, 4, 3, density=0.5)
        A = assemble_time_evolving(net).materialize().astype(np.int64)
        power = np.eye(12, dtype=np.int64)
        for k in range(1, 5):
            power = power @ A
            tally = tally_walks(net, k)
            assert tally.table.dtype == np.int64
            assert np.array_equal(tally.as_blocks(), power)
            assert np.array_equal(tally_walks(net, k, strategy="memo").as_blocks(), power)


def test_shorter_weight_product_fails(rng):
    """Weighting a k-step walk by its first k - 1 edges does not reproduce the matrix power."""
    net = random_network(rng, 3, 2, density=0.7, weights=(2, 3))
    A = assemble_time_evolving(net).materialize()
    k = 2
    n = net.n
    table = defaultdict(float)
    for w in enumerate_walks(net, k):
        frames_adj = [net.frames[f] for f in w.frames]
        weight = 1.0
        for l in range(k - 1):
            fr = frames_adj[l]
            hit = (fr.sources == w.nodes[l]) & (fr.targets == w.nodes[l + 1])
            weight *= float(fr.weights[hit][0])
        table[(w.frames[0], w.frames[-1], w.nodes[0], w.nodes[-1])] += weight
    blocks = np.zeros_like(A)
    for (f, last, i, j), val in table.items():
        for a in range(f + 1):
            blocks[a * n + i, last * n + j] += val
    assert not np.allclose(blocks, A @ A)
    assert np.array_equal(tally_walks(net, k).as_blocks(), A @ A)


def test_nonbacktracking_is_restriction(rng):
    net = random_network(rng, 4, 2, density=0.6)
    for k in range(1, 5):
        nbt = tally_walks(net, k, nonbacktracking=True).table
        allw = tally_walks(net, k).table
        assert np.all(nbt <= allw) and np.all(nbt >= 0)
        assert np.array_equal(tally_walks(net, k, nonbacktracking=True, strategy="memo").table, nbt)
        walks = enumerate_walks(net, k, nonbacktracking=True)
        assert not any(w.is_backtracking() for w in walks)


def test_subnetwork_consistency(rng):
    net = random_network(rng, 3, 4, density=0.5)
    for k in range(1, 4):
        full = tally_walks(net, k, nonbacktracking=True).table
        sub = tally_walks(net.subnetwork(2, 3), k, nonbacktracking=True).table
        assert np.array_equal(full[1:3, 1:3], sub)


def test_alternating_walks_by_enumeration(rng):
    net = random_network(rng, 3, 2, density=0.7)
    for k in range(1, 3):
        table = tally_alternating_walks(net, k)
        for i, j in itertools.product(range(3), repeat=2):
            expect = np.zeros((2, 2))
            for w in enumerate_walks(net, 2 * k):
                if w.nodes[0] == i and all(v == (i if l % 2 == 0 else j) for l, v in enumerate(w.nodes)):
                    expect[: w.frames[0] + 1, w.frames[-1]] += w.weight
            assert np.array_equal(table[:, :, i, j], np.triu(expect))


def test_recurrence_base_and_triangle():
    tri = TemporalNetwork.from_edges(3, [[(1, 2, 1.0), (2, 3, 1.0), (3, 1, 1.0), (2, 1, 1.0), (3, 2, 1.0), (1, 3, 1.0)]])
    report = recurrence_check(tri, k_max=4)
    assert report.max_discrepancy == [0.0] * 4
    assert report.walk_counts[0] == 6


def test_recurrence_random_binary(rng):
    for _ in range(3):
        net = random_network(rng, 3, 2, density=0.6, weights=(1,))
        assert recurrence_check(net, k_max=6).worst == 0.0


def test_recurrence_literal_even_index_fails(rng):
    net = random_network(rng, 3, 2, density=0.8, weights=(1,), reciprocal=True)
    assert recurrence_check(net, k_max=5).worst == 0.0
    assert recurrence_check(net, k_max=5, even_index="literal").worst > 0


def test_report_json(rng):
    net = random_network(rng, 3, 2)
    report = recurrence_check(net, k_max=3)
    d = report.to_dict(include_runtime=False)
    assert set(d) == {"k_max", "max_discrepancy", "discrepancy", "walk_counts"}
    assert "runtime_s" in report.to_json()


def test_oracle_series_terms(rng):
    net = random_network(rng, 3, 2)
    t = 0.1
    terms = oracle_series(net, t, 4, nonbacktracking=False)
    A = assemble_time_evolving(net).materialize()
    for k in range(5):
        assert np.allclose(terms[k], t**k * np.linalg.matrix_power(A, k).sum(axis=1), rtol=1e-13)
    assert math.isclose(terms[0].sum(), 6.0)
