import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairspread import _rng
from fairspread.diffusion import (CascadeConfig, SpreadEstimate, disparity, estimate_spread, exact_spread,
                                  fair_reward, marginal_reward, maximin_fairness, read_seeds, run_cascade,
                                  simulate_counts, write_seeds)
from fairspread.graph import CommunityPartition, Graph

from conftest import path_graph, random_graph, random_partition, star_graph

EDGE = Graph.from_edges(2, [(0, 1)])
ONE = CommunityPartition.single


def brute_force_spread(graph, seeds, p):
    """Independent oracle: enumerate edge liveness with itertools, reach by BFS."""
    edges = [tuple(e) for e in graph.edges]
    n = graph.node_count
    mean = sq = 0.0
    for live in itertools.product([0, 1], repeat=len(edges)):
        w = math.prod(p if b else 1 - p for b in live)
        nb = {v: [] for v in range(n)}
        for (u, v), b in zip(edges, live):
            if b:
                nb[u].append(v)
                nb[v].append(u)
        seen, todo = set(seeds), list(seeds)
        while todo:
            for u in nb[todo.pop()]:
                if u not in seen:
                    seen.add(u)
                    todo.append(u)
        mean += w * len(seen) / n
        sq += w * (len(seen) / n) ** 2
    return mean, math.sqrt(max(sq - mean * mean, 0.0))


# ------------------------------------------------------------- run_cascade

def test_cascade_certain_and_blocked():
    assert run_cascade(EDGE, [0], 1.0, np.random.default_rng(0)) == {0, 1}
    g = star_graph(5)
    assert run_cascade(g, [2, 3], 0.0, np.random.default_rng(0)) == {2, 3}


def test_cascade_deterministic_per_seed():
    tri = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    runs = [run_cascade(tri, [0], 0.5, np.random.default_rng(99)) for _ in range(2)]
    assert runs[0] == runs[1] and 0 in runs[0]


def test_cascade_errors():
    with pytest.raises(ValueError, match="empty"):
        run_cascade(EDGE, [], 0.5, np.random.default_rng(0))
    with pytest.raises(IndexError):
        run_cascade(EDGE, [2], 0.5, np.random.default_rng(0))


# ------------------------------------------------------------ estimate/exact

def test_isolated_nodes():
    g = Graph.from_edges(4, [])
    for p in (0.0, 0.3, 1.0):
        est = estimate_spread(g, ONE(4), [0], CascadeConfig(p, 7), 1)
        assert est.total_outreach == 0.25


def test_edge_estimate_near_exact():
    est = estimate_spread(EDGE, ONE(2), [0], CascadeConfig(0.5, 100_000), 5)
    assert abs(est.total_outreach - 0.75) <= 0.01


def test_two_communities_full_spread():
    part = CommunityPartition.from_labels([0, 1])
    est = estimate_spread(EDGE, part, [0], CascadeConfig(1.0, 10), 0)
    assert est.community_outreach.tolist() == [1.0, 1.0]


def test_exact_examples():
    e = exact_spread(EDGE, ONE(2), [0], 0.5)
    assert e.total_outreach == 0.75 and e.std_total == 0.25
    assert exact_spread(path_graph(3), ONE(3), [0], 0.5).total_outreach == pytest.approx(1.75 / 3, abs=1e-15)
    g = Graph.from_edges(6, [(0, 1), (1, 2), (3, 4)])
    assert exact_spread(g, ONE(6), [0], 1.0).total_outreach == pytest.approx(0.5)
    assert exact_spread(g, ONE(6), [0, 4], 1.0).total_outreach == pytest.approx(5 / 6)


def test_exact_edge_limit():
    g = Graph.from_edges(8, list(itertools.combinations(range(8), 2))[:21])
    with pytest.raises(ValueError, match="limited"):
        exact_spread(g, ONE(8), [0], 0.5)


def test_exact_matches_brute_force(rng):
    for _ in range(15):
        g = random_graph(rng, int(rng.integers(3, 8)), 9)
        seeds = sorted(rng.choice(g.node_count, size=int(rng.integers(1, 3)), replace=False).tolist())
        p = float(rng.uniform(0.05, 0.95))
        mean, std = brute_force_spread(g, seeds, p)
        e = exact_spread(g, ONE(g.node_count), seeds, p)
        assert e.total_outreach == pytest.approx(mean, abs=1e-12)
        assert e.std_total == pytest.approx(std, abs=1e-9)


def test_estimate_agrees_with_exact(rng):
    for _ in range(5):
        g = random_graph(rng, 8, 12)
        part = random_partition(rng, 8)
        p = float(rng.choice([0.2, 0.5, 0.8]))
        ex = exact_spread(g, part, [0], p)
        est = estimate_spread(g, part, [0], CascadeConfig(p, 20_000), int(rng.integers(1 << 30)))
        assert abs(est.total_outreach - ex.total_outreach) <= 4 * ex.std_total / math.sqrt(20_000)


def test_reproducible_and_chunk_independent():
    g = random_graph(np.random.default_rng(3), 30, 60, 40)
    part = random_partition(np.random.default_rng(4), 30, 3)
    cfg = CascadeConfig(0.3, 700)
    a = estimate_spread(g, part, [0, 5], cfg, 42)
    b = estimate_spread(g, part, [0, 5], cfg, 42)
    c = estimate_spread(g, part, [0, 5], cfg, 42, jobs=3)
    assert a.total_outreach == b.total_outreach == c.total_outreach
    assert np.array_equal(a.community_outreach, c.community_outreach)
    # realization i depends only on its own stream
    counts = simulate_counts(g, part, [0, 5], 0.3, 700, 42)
    single = run_cascade(g, [0, 5], 0.3, _rng.simulation_generator(42, 123))
    assert counts[123].sum() == len(single)


def test_estimate_invariants(rng):
    for _ in range(10):
        g = random_graph(rng, 25, 50, 10)
        part = random_partition(rng, 25, int(rng.integers(1, 4)))
        est = estimate_spread(g, part, [int(rng.integers(25))], CascadeConfig(0.4, 50), int(rng.integers(99)))
        weighted = float(est.community_outreach @ part.community_sizes) / 25
        assert est.total_outreach == pytest.approx(weighted, abs=1e-12)
        assert est.community_outreach.min() <= est.total_outreach + 1e-12
        assert est.total_outreach <= est.community_outreach.max() + 1e-12
        assert maximin_fairness(est) <= est.total_outreach + 1e-12


def test_exact_monotone_submodular(rng):
    for _ in range(6):
        n = int(rng.integers(4, 8))
        g = random_graph(rng, n, 8)
        part = ONE(n)
        p = float(rng.uniform(0.1, 0.9))
        f = {}
        for r in range(0, 4):
            for s in itertools.combinations(range(n), r):
                f[s] = exact_spread(g, part, s, p).total_outreach if s else 0.0
        for s in f:
            for v in range(n):
                if v in s or len(s) >= 3:
                    continue
                sv = tuple(sorted(s + (v,)))
                assert f[sv] >= f[s] - 1e-12
                for w in range(n):
                    if w in sv or len(s) >= 2:
                        continue
                    big = tuple(sorted(s + (w,)))
                    gain_small = f[sv] - f[s]
                    gain_big = f[tuple(sorted(big + (v,)))] - f[big]
                    assert gain_small >= gain_big - 1e-12


# ----------------------------------------------------------------- metrics

def _est(values, sizes=None):
    values = np.asarray(values, dtype=float)
    sizes = np.ones(len(values)) if sizes is None else np.asarray(sizes)
    return SpreadEstimate(float(values @ sizes / sizes.sum()), values, 0.0)


def test_metric_examples():
    assert maximin_fairness(_est([0.3, 0.7])) == 0.3
    assert maximin_fairness(_est([0.5, 0.5, 0.5])) == 0.5
    assert disparity(_est([0.3, 0.7])) == pytest.approx(0.4)
    assert disparity(_est([0.5, 0.5])) == 0.0
    assert disparity(_est([0.2, 0.5, 0.9])) == pytest.approx(0.7)


def test_fair_reward_examples():
    e = SpreadEstimate(0.2, np.array([0.1, 0.3]), 0.0)
    assert fair_reward(e, 1.0) == pytest.approx(0.3)
    assert fair_reward(e, 0.0) == 0.2
    table = SpreadEstimate(0.2098, np.array([0.2010, 0.2120]), 0.0)
    assert fair_reward(table, 1.0) == pytest.approx(0.4108, abs=1e-12)
    assert maximin_fairness(table) <= table.total_outreach
    with pytest.raises(ValueError):
        fair_reward(e, -0.1)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=6))
def test_disparity_zero_iff_equal(values):
    e = _est(values)
    assert disparity(e) >= 0
    assert (disparity(e) <= 1e-12) == (max(values) - min(values) <= 1e-12)
    assert maximin_fairness(e) <= e.total_outreach + 1e-12


def test_marginal_reward_examples():
    g4 = Graph.from_edges(4, [])
    cfg = CascadeConfig(0.5, 20)
    assert marginal_reward(g4, ONE(4), [], 0, 0.0, cfg, 1) == 0.25
    g = star_graph(5)
    cfg0 = CascadeConfig(0.0, 20)
    assert marginal_reward(g, ONE(6), [1, 2], 0, 0.0, cfg0, 1) == pytest.approx(1 / 6)
    cfg1 = CascadeConfig(1.0, 5)
    assert marginal_reward(EDGE, ONE(2), [], 0, 0.0, cfg1, 1) == 1.0
    assert marginal_reward(EDGE, ONE(2), [0], 1, 0.0, cfg1, 1) == 0.0
    with pytest.raises(ValueError, match="already"):
        marginal_reward(EDGE, ONE(2), [0], 0, 0.0, cfg1, 1)


def test_seed_file_round_trip(tmp_path):
    g = Graph.from_edges(3, [(0, 1)], node_ids=("a", "b", "c"))
    write_seeds(tmp_path / "s", [2, 0], g)
    assert (tmp_path / "s").read_text() == "c\na\n"
    assert read_seeds(tmp_path / "s", g) == [2, 0]
    write_seeds(tmp_path / "t", [1])
    assert read_seeds(tmp_path / "t") == [1]
