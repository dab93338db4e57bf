"""Independent Cascade simulation, exact spread by live-edge enumeration, and
the outreach/fairness metrics built on top of them.

A cascade realization is driven by one uniform draw per stored arc. Arc
``(u, v)`` fires when ``u`` is newly active, ``v`` is still inactive and the
draw is below ``p``. Because a node activates at most once, every arc is
attempted at most once, which is exactly the one-chance rule of the IC model.
Realization ``i`` of an estimate always uses the stream
``_rng.simulation_generator(seed, i)``, so chunked or parallel execution
reproduces serial results bit for bit.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _rng
from .graph import CommunityPartition, Graph

EXACT_EDGE_LIMIT = 20
_CHUNK = 256


@dataclass(frozen=True)
class CascadeConfig:
    influence_probability: float = 0.1
    num_simulations: int = 1000

    def __post_init__(self):
        if not 0.0 <= self.influence_probability <= 1.0:
            raise ValueError("influence_probability must be in [0, 1]")
        if self.num_simulations < 1:
            raise ValueError("num_simulations must be >= 1")


@dataclass(frozen=True)
class SpreadEstimate:
    total_outreach: float
    community_outreach: np.ndarray
    std_total: float
    community_std: np.ndarray | None = None
    num_simulations: int = 0


def _check_seeds(graph: Graph, seeds) -> np.ndarray:
    s = np.unique(np.asarray(list(seeds), dtype=np.int64))
    if s.size == 0:
        raise ValueError("seed set is empty")
    if s[0] < 0 or s[-1] >= graph.node_count:
        raise IndexError("seed index out of range")
    return s


def _propagate(graph: Graph, seeds: np.ndarray, live: np.ndarray) -> np.ndarray:
    """Activated masks for a batch of live-arc patterns.

    ``live`` has shape (m, n_arcs); returns a boolean (m, n) array.
    """
    m = live.shape[0]
    n = graph.node_count
    active = np.zeros((m, n), dtype=bool)
    active[:, seeds] = True
    if graph.indices.size == 0:
        return active
    frontier = active.copy()
    # incoming arcs of v are rev[indptr[v]:indptr[v+1]]
    rev = graph.reverse_arc
    in_src = graph.arc_sources[rev]
    in_live = live[:, rev]
    has_in = graph.degrees > 0
    starts = graph.indptr[:-1][has_in]
    while True:
        fired = frontier[:, in_src] & in_live
        hit = np.zeros((m, n), dtype=bool)
        hit[:, has_in] = np.logical_or.reduceat(fired, starts, axis=1)
        new = hit & ~active
        if not new.any():
            return active
        active |= new
        frontier = new


def run_cascade(graph: Graph, seeds: Iterable[int], p: float, rng: np.random.Generator) -> set[int]:
    """One IC realization; returns the final active set."""
    s = _check_seeds(graph, seeds)
    live = (rng.random(graph.indices.size) < p)[None, :]
    return set(np.flatnonzero(_propagate(graph, s, live)[0]).tolist())


def sample_live_arcs(graph: Graph, p: float, seed, start: int, stop: int) -> np.ndarray:
    """Live-arc patterns for realizations ``start..stop-1``."""
    out = np.empty((stop - start, graph.indices.size), dtype=bool)
    for row, i in enumerate(range(start, stop)):
        out[row] = _rng.simulation_generator(seed, i).random(graph.indices.size) < p
    return out


def simulate_counts(graph: Graph, partition: CommunityPartition, seeds, p: float,
                    num_simulations: int, seed, jobs: int = 1) -> np.ndarray:
    """Per-realization activated counts per community, shape (m, l), int64."""
    s = _check_seeds(graph, seeds)
    if partition.node_count != graph.node_count:
        raise ValueError("partition does not match graph")
    onehot = np.zeros((graph.node_count, partition.community_count), dtype=np.int64)
    onehot[np.arange(graph.node_count), partition.labels] = 1

    def chunk(bounds):
        a, b = bounds
        act = _propagate(graph, s, sample_live_arcs(graph, p, seed, a, b))
        return act.astype(np.int64) @ onehot

    bounds = [(a, min(a + _CHUNK, num_simulations)) for a in range(0, num_simulations, _CHUNK)]
    if jobs > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(jobs) as pool:
            parts = list(pool.map(chunk, bounds))
    else:
        parts = [chunk(b) for b in bounds]
    return np.concatenate(parts, axis=0)


def _count_std(counts: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Population std of counts / sizes per column, from exact integer sums."""
    c = counts.astype(np.int64)
    m = c.shape[0]
    if float(m) * m * float(c.max(initial=0)) ** 2 >= 2.0 ** 62:  # integer sums would overflow
        return np.std(c / np.asarray(sizes, dtype=np.float64), axis=0)
    spread = m * (c * c).sum(axis=0) - c.sum(axis=0) ** 2
    return np.sqrt(spread.astype(np.float64)) / (m * np.asarray(sizes, dtype=np.float64))


def summarize_counts(counts: np.ndarray, partition: CommunityPartition) -> SpreadEstimate:
    m = counts.shape[0]
    sizes = partition.community_sizes
    n = int(sizes.sum())
    totals = counts.sum(axis=1)
    # sums of integers first, one division at the end
    total = float(totals.sum()) / (m * n)
    comm = counts.sum(axis=0) / (m * sizes)
    std_total = float(_count_std(totals[:, None], np.array([n]))[0])
    comm_std = _count_std(counts, sizes)
    return SpreadEstimate(total, comm, std_total, comm_std, m)


def estimate_spread(graph: Graph, partition: CommunityPartition, seeds, config: CascadeConfig,
                    seed, jobs: int = 1) -> SpreadEstimate:
    """Monte Carlo average over ``config.num_simulations`` realizations."""
    counts = simulate_counts(graph, partition, seeds, config.influence_probability,
                             config.num_simulations, seed, jobs)
    return summarize_counts(counts, partition)


def _reach_all_patterns(graph: Graph, seeds: np.ndarray, live: np.ndarray) -> np.ndarray:
    edges = graph.edges
    reached = np.zeros((live.shape[0], graph.node_count), dtype=bool)
    reached[:, seeds] = True
    changed = True
    while changed:
        changed = False
        for e, (u, v) in enumerate(edges):
            le = live[:, e]
            to_v = reached[:, u] & le & ~reached[:, v]
            to_u = reached[:, v] & le & ~reached[:, u]
            if to_v.any() or to_u.any():
                reached[:, v] |= to_v
                reached[:, u] |= to_u
                changed = True
    return reached


def exact_spread(graph: Graph, partition: CommunityPartition, seeds, p: float) -> SpreadEstimate:
    """Expected outreach by enumerating all 2^|E| live-edge subgraphs."""
    s = _check_seeds(graph, seeds)
    n_e = graph.edge_count
    if n_e > EXACT_EDGE_LIMIT:
        raise ValueError(f"exact enumeration limited to {EXACT_EDGE_LIMIT} edges, graph has {n_e}")
    patterns = np.arange(2 ** n_e, dtype=np.int64)
    live = ((patterns[:, None] >> np.arange(n_e)) & 1).astype(bool)
    k_live = live.sum(axis=1)
    weight = p ** k_live * (1.0 - p) ** (n_e - k_live)
    reached = _reach_all_patterns(graph, s, live)

    sizes = partition.community_sizes
    n = graph.node_count
    onehot = np.zeros((n, partition.community_count))
    onehot[np.arange(n), partition.labels] = 1.0
    frac_c = (reached.astype(np.float64) @ onehot) / sizes
    frac = reached.sum(axis=1) / n
    mean_c = weight @ frac_c
    mean = float(weight @ frac)
    var = max(float(weight @ frac ** 2) - mean ** 2, 0.0)
    var_c = np.maximum(weight @ frac_c ** 2 - mean_c ** 2, 0.0)
    return SpreadEstimate(mean, mean_c, math.sqrt(var), np.sqrt(var_c), 0)


def maximin_fairness(estimate: SpreadEstimate) -> float:
    return float(np.min(estimate.community_outreach))


def disparity(estimate: SpreadEstimate) -> float:
    c = estimate.community_outreach
    return float(np.max(c) - np.min(c))


def fair_reward(estimate: SpreadEstimate, phi: float) -> float:
    """Outreach plus ``phi`` times maximin fairness."""
    if phi < 0:
        raise ValueError("phi must be non-negative")
    return estimate.total_outreach + phi * maximin_fairness(estimate)


def marginal_reward(graph: Graph, partition: CommunityPartition, current_seeds: Sequence[int],
                    new_node: int, phi: float, train_config: CascadeConfig, seed) -> float:
    """Gain in fair reward from adding ``new_node``; both terms share ``seed``."""
    current = list(current_seeds)
    if new_node in current:
        raise ValueError(f"node {new_node} is already a seed")
    after = fair_reward(estimate_spread(graph, partition, current + [new_node], train_config, seed), phi)
    if not current:
        return after
    return after - fair_reward(estimate_spread(graph, partition, current, train_config, seed), phi)


def read_seeds(path, graph: Graph | None = None) -> list[int]:
    ids = {str(x): i for i, x in enumerate(graph.node_ids)} if graph is not None and graph.node_ids else None
    out = []
    with open(path) as fh:
        for line in fh:
            tok = line.strip()
            if not tok or tok.startswith("#"):
                continue
            out.append(ids[tok] if ids is not None else int(tok))
    return out


def write_seeds(path, seeds: Iterable[int], graph: Graph | None = None) -> None:
    ids = graph.node_ids if graph is not None and graph.node_ids else None
    with open(path, "w") as fh:
        for v in seeds:
            fh.write(f"{ids[v] if ids is not None else int(v)}\n")
