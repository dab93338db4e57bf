"""Seeding baselines: greedy and CELF on Monte Carlo spread, degree, PageRank,
and parity (group-proportional) seeding on top of a centrality ranking."""
from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _rng
from .diffusion import CascadeConfig, _check_seeds, _propagate, exact_spread, sample_live_arcs
from .graph import CommunityPartition, Graph

log = logging.getLogger(__name__)

RankedNodes = list  # list[tuple[int, float]], (score desc, node asc)


class SpreadOracle:
    """Spread evaluator with a call counter.

    ``value(seeds)`` must be a monotone set function; greedy and CELF only
    compare and subtract its values.
    """

    def __init__(self, fn: Callable[[Sequence[int]], float]):
        self._fn = fn
        self.evaluations = 0

    def __call__(self, seeds: Sequence[int]) -> float:
        self.evaluations += 1
        return self._fn(seeds)


class MonteCarloOracle(SpreadOracle):
    """Total activated count summed over a fixed set of live-arc samples.

    The samples are drawn once, so every candidate in every round sees the
    same realizations (common random numbers) and the value is an exact
    coverage function: monotone and submodular.
    """

    def __init__(self, graph: Graph, config: CascadeConfig, seed):
        self.graph = graph
        self.live = sample_live_arcs(graph, config.influence_probability, seed, 0, config.num_simulations)
        super().__init__(self._count)

    def _count(self, seeds):
        if len(seeds) == 0:
            return 0
        return int(_propagate(self.graph, _check_seeds(self.graph, seeds), self.live).sum())


class ExactOracle(SpreadOracle):
    def __init__(self, graph: Graph, p: float):
        part = CommunityPartition.single(graph.node_count)
        super().__init__(lambda s: exact_spread(graph, part, s, p).total_outreach if len(s) else 0.0)


def _check_budget(graph: Graph, k: int):
    if k < 0 or k > graph.node_count:
        raise ValueError(f"budget k={k} must be in [0, {graph.node_count}]")


def greedy_im(graph: Graph, k: int, config: CascadeConfig | None = None, seed=0,
              oracle: SpreadOracle | None = None) -> list[int]:
    """Plain greedy: each round evaluates every remaining node, ties to the lowest index."""
    _check_budget(graph, k)
    if oracle is None:
        oracle = MonteCarloOracle(graph, config or CascadeConfig(num_simulations=200), seed)
    seeds: list[int] = []
    current = 0
    for _ in range(k):
        best, best_gain = -1, None
        for v in range(graph.node_count):
            if v in seeds:
                continue
            gain = oracle(seeds + [v]) - current
            if best_gain is None or gain > best_gain:
                best, best_gain = v, gain
        seeds.append(best)
        current += best_gain
    return seeds


def celf(graph: Graph, k: int, config: CascadeConfig | None = None, seed=0,
         oracle: SpreadOracle | None = None) -> list[int]:
    """Lazy greedy. Stale gains are upper bounds by submodularity, so the top
    entry is re-evaluated until it is fresh for the current round."""
    _check_budget(graph, k)
    if oracle is None:
        oracle = MonteCarloOracle(graph, config or CascadeConfig(num_simulations=200), seed)
    if k == 0:
        return []
    heap = [(-oracle([v]), v, 0) for v in range(graph.node_count)]
    heapq.heapify(heap)
    seeds: list[int] = []
    current = 0
    while len(seeds) < k:
        neg_gain, v, fresh_at = heapq.heappop(heap)
        if fresh_at == len(seeds):
            seeds.append(v)
            current += -neg_gain
            continue
        gain = oracle(seeds + [v]) - current
        heapq.heappush(heap, (-gain, v, len(seeds)))
    return seeds


def brute_force_im(graph: Graph, k: int, oracle: SpreadOracle) -> tuple[list[int], float]:
    from itertools import combinations
    best, best_val = None, None
    for s in combinations(range(graph.node_count), k):
        val = oracle(list(s))
        if best_val is None or val > best_val:
            best, best_val = list(s), val
    return best, best_val


def _ranking(scores: np.ndarray) -> RankedNodes:
    order = np.lexsort((np.arange(len(scores)), -scores))
    return [(int(v), float(scores[v])) for v in order]


def degree_ranking(graph: Graph) -> RankedNodes:
    return _ranking(graph.degrees.astype(np.float64))


def top_degree(graph: Graph, k: int) -> list[int]:
    _check_budget(graph, k)
    return [v for v, _ in degree_ranking(graph)[:k]]


class ConvergenceError(RuntimeError):
    pass


def pagerank_scores(graph: Graph, damping: float = 0.85, tol: float = 1e-10, max_iters: int = 200) -> np.ndarray:
    """Power iteration on the random walk with uniform teleport.

    Isolated nodes teleport uniformly. Stops when the L1 change is <= tol.
    """
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must be in (0, 1)")
    n = graph.node_count
    deg = graph.degrees.astype(np.float64)
    dangling = deg == 0
    inv = np.divide(1.0, deg, out=np.zeros(n), where=~dangling)
    walk = graph.matrix  # symmetric, so A.T @ (r / deg) is the walk step
    r = np.full(n, 1.0 / n)
    for _ in range(max_iters):
        nxt = damping * (walk @ (r * inv)) + (damping * r[dangling].sum() + 1.0 - damping) / n
        delta = np.abs(nxt - r).sum()
        r = nxt
        if delta <= tol:
            return r / r.sum()
    raise ConvergenceError(f"PageRank did not converge in {max_iters} iterations")


def pagerank(graph: Graph, damping: float = 0.85, tol: float = 1e-10, max_iters: int = 200) -> RankedNodes:
    scores = pagerank_scores(graph, damping, tol, max_iters)
    # scores agree only up to round-off; ties inside 1e-12 fall back to node index
    return [(v, float(scores[v])) for v, _ in _ranking(np.round(scores, 12))]


def top_pagerank(graph: Graph, k: int, **kw) -> list[int]:
    _check_budget(graph, k)
    return [v for v, _ in pagerank(graph, **kw)[:k]]


def parity_quotas(sizes: Sequence[int], k: int) -> np.ndarray:
    """Largest-remainder split of ``k`` proportional to ``sizes``.

    Leftover seats go by remainder, then larger community, then lower index.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    total = int(sizes.sum())
    exact = k * sizes  # fractions over ``total``, kept integral
    quotas = exact // total
    rem = exact - quotas * total
    left = k - int(quotas.sum())
    order = sorted(range(len(sizes)), key=lambda i: (-rem[i], -sizes[i], i))
    for i in order[:left]:
        quotas[i] += 1
    return quotas


@dataclass(frozen=True)
class ParityAllocation:
    seeds: list[int]
    quotas: np.ndarray
    spilled: int   # seats moved to other communities because a quota exceeded its community


def parity_allocation(ranking: RankedNodes, partition: CommunityPartition, k: int) -> ParityAllocation:
    if k > partition.node_count:
        raise ValueError(f"k={k} exceeds node count {partition.node_count}")
    quotas = parity_quotas(partition.community_sizes, k)
    taken = np.zeros(partition.community_count, dtype=np.int64)
    seeds = []
    for v, _ in ranking:
        c = partition.labels[v]
        if taken[c] < quotas[c]:
            seeds.append(v)
            taken[c] += 1
    spilled = k - len(seeds)
    if spilled:
        chosen = set(seeds)
        extra = [v for v, _ in ranking if v not in chosen][:spilled]
        log.info("parity quota overflow: %d seats filled from other communities", spilled)
        seeds.extend(extra)
    return ParityAllocation(seeds, quotas, spilled)


def parity_seeding(ranking: RankedNodes, partition: CommunityPartition, k: int) -> list[int]:
    """Fill community quotas with each community's top-ranked nodes."""
    return parity_allocation(ranking, partition, k).seeds


def parity_degree(graph: Graph, partition: CommunityPartition, k: int) -> list[int]:
    return parity_seeding(degree_ranking(graph), partition, k)


def fair_pagerank(graph: Graph, partition: CommunityPartition, k: int, damping: float = 0.85,
                  tol: float = 1e-10, max_iters: int = 200) -> list[int]:
    return parity_seeding(pagerank(graph, damping, tol, max_iters), partition, k)
