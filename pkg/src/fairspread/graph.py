"""Undirected graphs with a disjoint community label per node, plus text I/O.

File formats
------------
Edge list: one edge per line, two whitespace-separated node ids. Lines that
start with ``#`` and blank lines are ignored.

Attributes: one line per node, ``node_id<TAB>community_label``. Labels are
arbitrary strings, indexed densely in first-seen order.

Node ids are remapped to ``0..n-1`` in the order they appear in the attribute
file; the original ids are kept on ``Graph.node_ids``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


class GraphFormatError(ValueError):
    """Malformed or inconsistent graph input."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph in CSR form.

    ``indices[indptr[v]:indptr[v+1]]`` are the sorted neighbors of ``v``.
    """

    node_count: int
    indptr: np.ndarray
    indices: np.ndarray
    node_ids: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        _readonly(self.indptr)
        _readonly(self.indices)

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[tuple[int, int]], node_ids=None) -> "Graph":
        """Build from an edge iterable; duplicates (in either orientation) collapse."""
        n = int(node_count)
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if e.size:
            if e.min() < 0 or e.max() >= n:
                raise GraphFormatError(f"edge endpoint outside [0, {n})")
            if np.any(e[:, 0] == e[:, 1]):
                u = int(e[e[:, 0] == e[:, 1]][0, 0])
                raise GraphFormatError(f"self-loop on node {u}")
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        arcs = np.unique(src * n + dst) if n else np.empty(0, np.int64)
        src, dst = np.divmod(arcs, n) if n else (arcs, arcs)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, indptr, dst.astype(np.int64), tuple(node_ids) if node_ids is not None else None)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.node_count == other.node_count
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    __hash__ = object.__hash__

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @property
    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(v).tolist() for v in range(self.node_count)]

    @cached_property
    def degrees(self) -> np.ndarray:
        return _readonly(np.diff(self.indptr))

    @cached_property
    def arc_sources(self) -> np.ndarray:
        """Source node of every stored arc, aligned with ``indices``."""
        return _readonly(np.repeat(np.arange(self.node_count), self.degrees))

    @cached_property
    def reverse_arc(self) -> np.ndarray:
        """Position of arc (v, u) for each stored arc (u, v)."""
        n = self.node_count
        key = self.indices * n + self.arc_sources
        fwd = self.arc_sources * n + self.indices
        return _readonly(np.searchsorted(fwd, key))

    @cached_property
    def edges(self) -> np.ndarray:
        """(|E|, 2) array of undirected edges with u < v, sorted."""
        mask = self.arc_sources < self.indices
        return _readonly(np.column_stack([self.arc_sources[mask], self.indices[mask]]))

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.node_count,) * 2)

    def permuted(self, perm: Sequence[int]) -> "Graph":
        """Relabel node ``v`` as ``perm[v]``."""
        perm = np.asarray(perm)
        return Graph.from_edges(self.node_count, perm[self.edges])


@dataclass(frozen=True, eq=False)
class CommunityPartition:
    labels: np.ndarray
    community_count: int
    names: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", _readonly(labels))
        if labels.size and (labels.min() < 0 or labels.max() >= self.community_count):
            raise GraphFormatError("community label out of range")
        if np.any(self.community_sizes == 0):
            empty = int(np.flatnonzero(self.community_sizes == 0)[0])
            raise GraphFormatError(f"community {empty} is empty")

    @classmethod
    def from_labels(cls, labels, community_count: int | None = None, names=None) -> "CommunityPartition":
        labels = np.asarray(labels, dtype=np.int64)
        if community_count is None:
            community_count = int(labels.max()) + 1 if labels.size else 0
        return cls(labels, community_count, names)

    @classmethod
    def single(cls, node_count: int) -> "CommunityPartition":
        return cls(np.zeros(node_count, dtype=np.int64), 1)

    def __eq__(self, other):
        if not isinstance(other, CommunityPartition):
            return NotImplemented
        return self.community_count == other.community_count and np.array_equal(self.labels, other.labels)

    __hash__ = object.__hash__

    @property
    def node_count(self) -> int:
        return len(self.labels)

    @cached_property
    def community_sizes(self) -> np.ndarray:
        return _readonly(np.bincount(self.labels, minlength=self.community_count))

    def members(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.labels == i)

    def permuted(self, perm: Sequence[int]) -> "CommunityPartition":
        labels = np.empty_like(self.labels)
        labels[np.asarray(perm)] = self.labels
        return CommunityPartition(labels, self.community_count, self.names)


def degree(graph: Graph, v: int) -> int:
    if not 0 <= v < graph.node_count:
        raise IndexError(f"node {v} out of range [0, {graph.node_count})")
    return int(graph.indptr[v + 1] - graph.indptr[v])


def _content_lines(path: Path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if line and not line.startswith("#"):
                yield lineno, line


def load_graph(edge_list_path, attribute_path) -> tuple[Graph, CommunityPartition]:
    """Read an edge list and an attribute file.

    Nodes are indexed in attribute-file order, so nodes with no edges are
    kept. Every endpoint in the edge list must have a community label.
    Communities are indexed in sorted label order (numeric when every label
    is an integer), so the same label maps to the same index in every file.
    """
    ids: dict[str, int] = {}
    comm_index: dict[str, int] = {}
    labels: list[int] = []
    for lineno, line in _content_lines(Path(attribute_path)):
        parts = line.split("\t")
        if len(parts) != 2:
            parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"{attribute_path}:{lineno}: expected 'node_id<TAB>label'")
        node, label = parts[0].strip(), parts[1].strip()
        c = comm_index.setdefault(label, len(comm_index))
        if node in ids:
            if labels[ids[node]] != c:
                raise GraphFormatError(f"{attribute_path}:{lineno}: node {node!r} has two labels")
            continue
        ids[node] = len(ids)
        labels.append(c)

    edges = []
    for lineno, line in _content_lines(Path(edge_list_path)):
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"{edge_list_path}:{lineno}: expected two node ids")
        for node in parts:
            if node not in ids:
                raise GraphFormatError(f"{edge_list_path}:{lineno}: node {node!r} has no community label")
        u, v = ids[parts[0]], ids[parts[1]]
        if u == v:
            raise GraphFormatError(f"{edge_list_path}:{lineno}: self-loop on node {parts[0]!r}")
        edges.append((u, v))

    node_ids = tuple(ids)
    graph = Graph.from_edges(len(ids), edges, node_ids=node_ids)
    seen = list(comm_index)
    try:
        names = tuple(sorted(seen, key=int))
    except ValueError:
        names = tuple(sorted(seen))
    remap = np.array([names.index(name) for name in seen], dtype=np.int64)
    labels = remap[np.asarray(labels, dtype=np.int64)] if labels else np.zeros(0, dtype=np.int64)
    partition = CommunityPartition(labels, len(names), names)
    return graph, partition


def write_graph(graph: Graph, partition: CommunityPartition, edge_list_path, attribute_path) -> None:
    ids = graph.node_ids or tuple(str(v) for v in range(graph.node_count))
    names = partition.names or tuple(str(i) for i in range(partition.community_count))
    with open(edge_list_path, "w") as fh:
        fh.write(f"# nodes={graph.node_count} edges={graph.edge_count}\n")
        for u, v in graph.edges:
            fh.write(f"{ids[u]} {ids[v]}\n")
    with open(attribute_path, "w") as fh:
        for v in range(graph.node_count):
            fh.write(f"{ids[v]}\t{names[partition.labels[v]]}\n")
