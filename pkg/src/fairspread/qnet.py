"""Structure2Vec node embeddings and the Q-value head, with manual backprop.

Row-vector convention throughout: for node features ``X`` (n, F) and
embeddings ``mu`` (n, d)::

    mu <- relu(X @ theta1 + (A @ mu) @ theta2.T)          # T_embed rounds from 0
    Q(a) = theta3 . relu([theta4 @ sum_u mu_u , theta5 @ mu_a])

A batch of states from different graphs is handled as one block-diagonal
graph; pooled sums are taken per block.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .graph import CommunityPartition, Graph

NAMES = ("theta1", "theta2", "theta3", "theta4", "theta5")
MAGIC = b"FSQNET\r\n"
VERSION = 1


@dataclass
class ParameterSet:
    theta1: np.ndarray  # (1 + l, d)
    theta2: np.ndarray  # (d, d)
    theta3: np.ndarray  # (2d,)
    theta4: np.ndarray  # (d, d)
    theta5: np.ndarray  # (d, d)

    def __post_init__(self):
        d = self.theta2.shape[0]
        shapes = {"theta1": (self.theta1.shape[0], d), "theta2": (d, d), "theta3": (2 * d,),
                  "theta4": (d, d), "theta5": (d, d)}
        for name, shape in shapes.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def d(self) -> int:
        return self.theta2.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.theta1.shape[0]

    @property
    def community_count(self) -> int:
        return self.feature_dim - 1

    @classmethod
    def zeros(cls, community_count: int, d: int) -> "ParameterSet":
        f = 1 + community_count
        return cls(np.zeros((f, d)), np.zeros((d, d)), np.zeros(2 * d), np.zeros((d, d)), np.zeros((d, d)))

    @classmethod
    def random(cls, community_count: int, d: int, rng: np.random.Generator, scale: float = 0.05) -> "ParameterSet":
        f = 1 + community_count
        u = lambda *shape: rng.uniform(-scale, scale, size=shape)
        return cls(u(f, d), u(d, d), u(2 * d), u(d, d), u(d, d))

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, n) for n in NAMES]

    def zeros_like(self) -> "ParameterSet":
        return ParameterSet(*(np.zeros_like(a) for a in self.arrays()))

    def copy(self) -> "ParameterSet":
        return ParameterSet(*(a.copy() for a in self.arrays()))

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def with_flat(self, vec: np.ndarray) -> "ParameterSet":
        out, i = [], 0
        for a in self.arrays():
            out.append(np.asarray(vec[i:i + a.size], dtype=np.float64).reshape(a.shape))
            i += a.size
        return ParameterSet(*out)

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


@dataclass(frozen=True)
class StateFeatures:
    """Per-node features: column 0 is the selection bit, then the community one-hot."""
    x: np.ndarray


@dataclass(frozen=True)
class EmbeddingState:
    mu: np.ndarray
    T_embed: int


def state_features(partition: CommunityPartition, seeds: Sequence[int] = ()) -> StateFeatures:
    n, l = partition.node_count, partition.community_count
    x = np.zeros((n, 1 + l))
    x[list(seeds), 0] = 1.0
    x[np.arange(n), 1 + partition.labels] = 1.0
    return StateFeatures(x)


def _check_features(x: np.ndarray, params: ParameterSet):
    if x.shape[1] != params.feature_dim:
        raise ValueError(f"feature width {x.shape[1]} does not match theta1 rows {params.feature_dim}")


def _embed(adj, x: np.ndarray, params: ParameterSet, T_embed: int, keep: bool):
    if T_embed < 1:
        raise ValueError("T_embed must be >= 1")
    _check_features(x, params)
    dt = x.dtype
    theta2t = params.theta2.T.astype(dt, copy=False)
    base = x @ params.theta1.astype(dt, copy=False)
    # round 0 aggregates all-zero embeddings
    mu = np.maximum(base, 0.0)
    trace = [(None, base)] if keep else None
    for _ in range(1, T_embed):
        agg = adj @ mu
        pre = agg @ theta2t
        pre += base
        if keep:
            trace.append((agg, pre))
        mu = np.maximum(pre, 0.0)
    return mu, trace


def compute_embeddings(graph: Graph, features: StateFeatures, params: ParameterSet, T_embed: int = 4) -> EmbeddingState:
    mu, _ = _embed(graph.matrix, features.x, params, T_embed, keep=False)
    return EmbeddingState(mu, T_embed)


def q_values(graph: Graph, embeddings: EmbeddingState, candidate_nodes, params: ParameterSet) -> np.ndarray:
    cand = np.asarray(list(candidate_nodes), dtype=np.int64)
    if cand.size == 0:
        raise ValueError("no candidate nodes")
    mu = embeddings.mu
    if mu.shape[1] != params.d:
        raise ValueError("embedding width does not match parameters")
    d = params.d
    pooled = params.theta4 @ mu.sum(axis=0)
    h_state = np.maximum(pooled, 0.0) @ params.theta3[:d]
    h_action = np.maximum(mu[cand] @ params.theta5.T, 0.0) @ params.theta3[d:]
    return h_state + h_action


# ---------------------------------------------------------------- batches

class StateBatch:
    """Several states stacked as one block-diagonal graph.

    ``features[i]`` is the (n_i, 1 + l) feature matrix of ``graphs[i]``.
    """

    def __init__(self, graphs: Sequence[Graph], features: Sequence[np.ndarray], dtype=np.float64):
        sizes = np.array([g.node_count for g in graphs], dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.size = len(graphs)
        total = int(self.offsets[-1])
        if self.size == 1:
            self.adj = graphs[0].matrix.astype(dtype, copy=False)
        else:
            indptr = [np.zeros(1, dtype=np.int64)]
            indices = []
            nnz = 0
            for g, off in zip(graphs, self.offsets[:-1]):
                indptr.append(g.indptr[1:] + nnz)
                indices.append(g.indices + off)
                nnz += g.indices.size
            indptr = np.concatenate(indptr)
            indices = np.concatenate(indices)
            self.adj = sp.csr_matrix((np.ones(indices.size, dtype=dtype), indices, indptr), shape=(total, total))
        self.x = np.concatenate(features).astype(dtype, copy=False)
        self.selected = self.x[:, 0] > 0
        self.owner = np.repeat(np.arange(self.size), sizes)

    @classmethod
    def from_states(cls, states: Sequence[tuple[Graph, CommunityPartition, Sequence[int]]],
                    dtype=np.float64) -> "StateBatch":
        return cls([g for g, _, _ in states], [state_features(p, s).x for _, p, s in states], dtype)


@dataclass
class _Forward:
    mu: np.ndarray
    trace: list
    pooled_sum: np.ndarray   # (B, d)
    z4: np.ndarray           # (B, d)


def _forward(batch: StateBatch, params: ParameterSet, T_embed: int, keep: bool) -> _Forward:
    mu, trace = _embed(batch.adj, batch.x, params, T_embed, keep)
    pooled_sum = np.add.reduceat(mu, batch.offsets[:-1], axis=0) if mu.shape[0] else np.zeros((0, params.d))
    z4 = pooled_sum @ params.theta4.T
    return _Forward(mu, trace, pooled_sum, z4)


def batch_q(batch: StateBatch, params: ParameterSet, T_embed: int, nodes: np.ndarray) -> np.ndarray:
    """Q of one action per state; ``nodes`` are local indices within each state's graph."""
    fw = _forward(batch, params, T_embed, keep=False)
    d = params.d
    glob = batch.offsets[:-1] + np.asarray(nodes)
    return np.maximum(fw.z4, 0.0) @ params.theta3[:d] + np.maximum(fw.mu[glob] @ params.theta5.T, 0.0) @ params.theta3[d:]


def batch_max_q(batch: StateBatch, params: ParameterSet, T_embed: int) -> np.ndarray:
    """Max Q over unselected nodes of each state (-inf if every node is selected)."""
    fw = _forward(batch, params, T_embed, keep=False)
    d, dt = params.d, batch.x.dtype
    state_part = np.maximum(fw.z4, 0.0) @ params.theta3[:d]
    action_part = np.maximum(fw.mu @ params.theta5.T.astype(dt, copy=False), 0.0) @ params.theta3[d:].astype(dt, copy=False)
    q = action_part + state_part[batch.owner]
    q[batch.selected] = -np.inf
    return np.maximum.reduceat(q, batch.offsets[:-1])


def batch_loss_gradient(batch: StateBatch, params: ParameterSet, T_embed: int, actions, targets):
    """Summed squared TD error and its gradient, targets held constant.

    Returns (loss_sum, q, gradient ParameterSet).
    """
    d, dt = params.d, batch.x.dtype
    fw = _forward(batch, params, T_embed, keep=True)
    glob = batch.offsets[:-1] + np.asarray(actions, dtype=np.int64)
    z5 = fw.mu[glob] @ params.theta5.T
    h = np.concatenate([np.maximum(fw.z4, 0.0), np.maximum(z5, 0.0)], axis=1)
    q = h @ params.theta3
    err = q - np.asarray(targets, dtype=np.float64)
    loss = float(err @ err)
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite loss")
    dq = 2.0 * err                                            # (B,)

    g3 = dq @ h
    dh = dq[:, None] * params.theta3[None, :] * (np.concatenate([fw.z4, z5], axis=1) > 0)
    g4_out, g5_out = dh[:, :d], dh[:, d:]
    g4 = g4_out.T @ fw.pooled_sum
    g5 = g5_out.T @ fw.mu[glob]
    dmu = (g4_out @ params.theta4).astype(dt)[batch.owner]
    np.add.at(dmu, glob, (g5_out @ params.theta5).astype(dt))

    g1 = np.zeros(params.theta1.shape, dtype=dt)
    g2 = np.zeros(params.theta2.shape, dtype=dt)
    theta2 = params.theta2.astype(dt, copy=False)
    for agg, pre in reversed(fw.trace):
        dpre = dmu * (pre > 0)
        g1 += batch.x.T @ dpre
        if agg is None:
            break
        g2 += dpre.T @ agg
        dmu = batch.adj.T @ (dpre @ theta2)
    grad = ParameterSet(*(np.asarray(g, dtype=np.float64) for g in (g1, g2, g3, g4, g5)))
    if not grad.all_finite():
        raise FloatingPointError("non-finite gradient")
    return loss, q, grad


def q_gradient(graph: Graph, features: StateFeatures, params: ParameterSet, action_node: int,
               target: float, T_embed: int = 4) -> ParameterSet:
    """Gradient of ``(target - Q(state, action_node))**2`` w.r.t. all parameters."""
    if not 0 <= action_node < graph.node_count:
        raise IndexError("action node out of range")
    _check_features(features.x, params)
    batch = StateBatch([graph], [features.x])
    _, _, grad = batch_loss_gradient(batch, params, T_embed, [action_node], [target])
    return grad


def sgd_step(params: ParameterSet, gradient: ParameterSet, learning_rate: float, batch_size: int) -> ParameterSet:
    """``params - (learning_rate / batch_size) * gradient`` as a new ParameterSet."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    step = learning_rate / batch_size
    out = []
    for name in NAMES:
        p, g = getattr(params, name), getattr(gradient, name)
        if p.shape != g.shape:
            raise ValueError(f"gradient shape mismatch for {name}")
        out.append(p - step * g)
    return ParameterSet(*out)


class Adam:
    """Adam on the batch-mean gradient ``gradient / batch_size``."""

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None

    def step(self, params: ParameterSet, gradient: ParameterSet, learning_rate: float,
             batch_size: int) -> ParameterSet:
        grads = [g / batch_size for g in gradient.arrays()]
        if self.m is None:
            self.m = [np.zeros_like(g) for g in grads]
            self.v = [np.zeros_like(g) for g in grads]
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        out = []
        for p, g, m, v in zip(params.arrays(), grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            out.append(p - learning_rate * (m / c1) / (np.sqrt(v / c2) + self.eps))
        return ParameterSet(*out)


# ------------------------------------------------------------ checkpoints
#
# Layout (little endian):
#   8 bytes  magic  b"FSQNET\r\n"
#   uint32   version
#   uint32   d, community_count, T_embed
#   float64  theta1, theta2, theta3, theta4, theta5, each row-major

def save_checkpoint(path, params: ParameterSet, T_embed: int) -> None:
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(params, T_embed))


def checkpoint_bytes(params: ParameterSet, T_embed: int) -> bytes:
    head = MAGIC + struct.pack("<4I", VERSION, params.d, params.community_count, T_embed)
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in params.arrays())
    return head + body


def load_checkpoint(path) -> tuple[ParameterSet, int]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a Q-network checkpoint")
    version, d, l, T_embed = struct.unpack("<4I", raw[8:24])
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    f = 1 + l
    shapes = [(f, d), (d, d), (2 * d,), (d, d), (d, d)]
    expected = 24 + 8 * sum(int(np.prod(s)) for s in shapes)
    if len(raw) != expected:
        raise ValueError(f"{path}: size {len(raw)} does not match header shapes ({expected})")
    arrays, pos = [], 24
    for s in shapes:
        count = int(np.prod(s))
        arrays.append(np.frombuffer(raw, dtype="<f8", count=count, offset=pos).reshape(s).astype(np.float64))
        pos += 8 * count
    return ParameterSet(*arrays), T_embed
