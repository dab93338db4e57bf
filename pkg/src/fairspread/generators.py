"""Homophilic Barabasi-Albert graphs with a minority and a majority group.

Community 0 is the majority, community 1 the minority.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import CommunityPartition, Graph

MAJORITY, MINORITY = 0, 1


@dataclass(frozen=True)
class HbaParams:
    node_count: int
    edges_per_node: int = 4
    minority_fraction: float = 0.2
    homophily: float = 0.8
    rng_seed: int = 0

    def __post_init__(self):
        if not 1 <= self.edges_per_node < self.node_count:
            raise ValueError("edges_per_node must be in [1, node_count)")
        if not 0.0 < self.minority_fraction < 1.0:
            raise ValueError("minority_fraction must be in (0, 1)")
        if not 0.0 <= self.homophily <= 1.0:
            raise ValueError("homophily must be in [0, 1]")


def generate_hba(params: HbaParams) -> tuple[Graph, CommunityPartition]:
    """Grow a homophilic preferential-attachment graph.

    Starts from a clique on ``edges_per_node`` nodes. Each arriving node draws
    its group, then links to ``edges_per_node`` distinct existing nodes, each
    picked with probability proportional to ``degree * w`` where ``w`` is
    ``homophily`` for a same-group target and ``1 - homophily`` otherwise.
    When every remaining weight is zero the pick is uniform.
    """
    n, m, h = params.node_count, params.edges_per_node, params.homophily
    rng = np.random.default_rng(params.rng_seed)
    groups = (rng.random(n) < params.minority_fraction).astype(np.int64)
    deg = np.zeros(n, dtype=np.float64)

    edges = [(u, v) for u in range(m) for v in range(u + 1, m)]
    deg[:m] = m - 1
    for new in range(m, n):
        same = groups[:new] == groups[new]
        weights = deg[:new] * np.where(same, h, 1.0 - h)
        taken = np.zeros(new, dtype=bool)
        for _ in range(m):
            w = np.where(taken, 0.0, weights)
            total = w.sum()
            if total > 0:
                target = int(np.searchsorted(np.cumsum(w), rng.random() * total, side="right"))
                target = min(target, new - 1)
                while taken[target] or w[target] == 0:  # guard against cumsum round-off
                    target -= 1
            else:
                free = np.flatnonzero(~taken)
                target = int(free[rng.integers(len(free))])
            taken[target] = True
            edges.append((target, new))
        deg[:new][taken] += 1
        deg[new] = m

    graph = Graph.from_edges(n, edges)
    names = ("majority", "minority")
    labels = groups
    if not labels.any() or labels.all():
        # a draw without one of the groups cannot form two communities
        raise ValueError("generated graph has only one group; use another seed or a larger graph")
    return graph, CommunityPartition(labels, 2, names)
