"""Deep Q-learning for fair seed selection, and greedy inference with a trained net."""
from __future__ import annotations

import csv
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _rng
from .diffusion import CascadeConfig, estimate_spread, fair_reward, maximin_fairness
from .graph import CommunityPartition, Graph
from .qnet import (Adam, ParameterSet, StateBatch, batch_loss_gradient, batch_max_q, compute_embeddings,
                   q_values, save_checkpoint, sgd_step, state_features)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Hyperparameters:
    k: int = 10
    phi: float = 1.0
    episodes: int = 750
    gamma: float = 1.0
    epsilon: float = 1.0
    epsilon_decay: float = 0.995
    epsilon_min: float = 0.05
    decay_per: str = "step"          # "step" or "episode"
    replay_capacity: int = 2000
    batch_size: int = 32
    learning_rate: float = 0.001
    optimizer: str = "adam"          # "adam" or "sgd"
    update_period: int = 1
    target_sync: int = 500           # steps between target-network copies; 0 bootstraps from the live net
    train_sims: int = 20
    influence_probability: float = 0.1
    embed_dim: int = 64
    embed_iters: int = 4
    init_scale: float = 0.05
    rng_seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.phi < 0:
            raise ValueError("phi must be non-negative")
        if not 0.0 <= self.epsilon_min <= self.epsilon <= 1.0:
            raise ValueError("need 0 <= epsilon_min <= epsilon <= 1")
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ValueError("epsilon_decay must be in (0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.batch_size < 1 or self.batch_size > self.replay_capacity:
            raise ValueError("batch_size must be in [1, replay_capacity]")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.target_sync < 0:
            raise ValueError("target_sync must be >= 0")
        if self.update_period < 1 or self.episodes < 0 or self.train_sims < 1:
            raise ValueError("update_period, train_sims must be >= 1 and episodes >= 0")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError("optimizer must be 'sgd' or 'adam'")
        if self.decay_per not in ("step", "episode"):
            raise ValueError("decay_per must be 'step' or 'episode'")


@dataclass(frozen=True)
class Transition:
    graph_id: int
    before: tuple[int, ...]
    action: int
    reward: float
    after: tuple[int, ...]
    terminal: bool


class ReplayMemory:
    """Bounded FIFO of transitions; the oldest entry is evicted first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.buffer: deque[Transition] = deque(maxlen=capacity)

    def __len__(self):
        return len(self.buffer)

    def __iter__(self):
        return iter(self.buffer)

    def append(self, t: Transition) -> None:
        self.buffer.append(t)

    def sample(self, size: int, rng: np.random.Generator) -> list[Transition]:
        idx = rng.choice(len(self.buffer), size=size, replace=False)
        return [self.buffer[i] for i in idx]


@dataclass
class TrainReport:
    reward: list[float] = field(default_factory=list)
    outreach: list[float] = field(default_factory=list)
    fairness: list[float] = field(default_factory=list)
    epsilon: list[float] = field(default_factory=list)
    mean_loss: list[float] = field(default_factory=list)
    graph_index: list[int] = field(default_factory=list)
    epsilon_trace: list[float] = field(default_factory=list)   # value after every decay
    checkpoint: str | None = None

    @property
    def episodes(self) -> int:
        return len(self.reward)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["episode", "reward", "outreach", "fairness", "epsilon", "mean_loss"])
            for i in range(self.episodes):
                w.writerow([i + 1, repr(self.reward[i]), repr(self.outreach[i]), repr(self.fairness[i]),
                            repr(self.epsilon[i]), repr(self.mean_loss[i])])


def unselected(n: int, seeds: Sequence[int]) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[list(seeds)] = False
    return np.flatnonzero(mask)


def greedy_action(graph: Graph, partition: CommunityPartition, seeds: Sequence[int],
                  params: ParameterSet, T_embed: int = 4) -> int:
    """Highest-Q unselected node; ties go to the lowest index."""
    cand = unselected(graph.node_count, seeds)
    if cand.size == 0:
        raise ValueError("every node is already selected")
    emb = compute_embeddings(graph, state_features(partition, seeds), params, T_embed)
    q = q_values(graph, emb, cand, params)
    return int(cand[int(np.argmax(q))])


def epsilon_greedy_action(graph: Graph, partition: CommunityPartition, seeds: Sequence[int],
                          params: ParameterSet, epsilon: float, rng: np.random.Generator,
                          T_embed: int = 4) -> int:
    cand = unselected(graph.node_count, seeds)
    if cand.size == 0:
        raise ValueError("every node is already selected")
    if cand.size == 1:
        return int(cand[0])
    if rng.random() < epsilon:
        return int(cand[rng.integers(cand.size)])
    return greedy_action(graph, partition, seeds, params, T_embed)


def select_seeds(graph: Graph, partition: CommunityPartition, params: ParameterSet, k: int,
                 T_embed: int = 4) -> list[int]:
    """Run the learned policy greedily for ``k`` steps."""
    if k > graph.node_count:
        raise ValueError(f"k={k} exceeds node count {graph.node_count}")
    seeds: list[int] = []
    for _ in range(k):
        seeds.append(greedy_action(graph, partition, seeds, params, T_embed))
    return seeds


def compute_targets(batch: Sequence[Transition], pool, params: ParameterSet, gamma: float,
                    T_embed: int, dtype=np.float32) -> np.ndarray:
    """``r`` for terminal transitions, ``r + gamma * max_a Q(next, a)`` otherwise."""
    y = np.array([t.reward for t in batch], dtype=np.float64)
    open_idx = [i for i, t in enumerate(batch) if not t.terminal]
    if open_idx and gamma != 0.0:
        nxt = StateBatch.from_states([(pool[batch[i].graph_id][0], pool[batch[i].graph_id][1], batch[i].after)
                                      for i in open_idx], dtype)
        y[open_idx] += gamma * batch_max_q(nxt, params, T_embed).astype(np.float64)
    return y


def train(pool: Sequence[tuple[Graph, CommunityPartition]], hp: Hyperparameters,
          params: ParameterSet | None = None, checkpoint_path=None,
          on_episode: Callable[[int, TrainReport], None] | None = None,
          dtype=np.float32) -> tuple[ParameterSet, TrainReport]:
    """Train a Q-network on ``pool`` and return (parameters, report).

    Streams derived from ``hp.rng_seed``: "init" for the weights, "policy"
    for graph draws and exploration, "replay" for minibatches, and
    ("reward", step) for the cascade simulations of each step.
    """
    if not pool:
        raise ValueError("training pool is empty")
    counts = {p.community_count for _, p in pool}
    if len(counts) != 1:
        raise ValueError(f"pool mixes community counts {sorted(counts)}")
    l = counts.pop()
    if params is None:
        params = ParameterSet.random(l, hp.embed_dim, _rng.generator(hp.rng_seed, "init"), hp.init_scale)
    elif params.community_count != l:
        raise ValueError("parameter feature width does not match the pool")
    for g, _ in pool:
        if hp.k > g.node_count:
            raise ValueError("k exceeds the node count of a training graph")

    policy_rng = _rng.generator(hp.rng_seed, "policy")
    replay_rng = _rng.generator(hp.rng_seed, "replay")
    cascade = CascadeConfig(hp.influence_probability, hp.train_sims)
    memory = ReplayMemory(hp.replay_capacity)
    report = TrainReport()
    adam = Adam() if hp.optimizer == "adam" else None
    eps = hp.epsilon
    step = 0
    target = params.copy() if hp.target_sync else None

    def decay():
        nonlocal eps
        eps = max(hp.epsilon_decay * eps, hp.epsilon_min)
        report.epsilon_trace.append(eps)

    for episode in range(hp.episodes):
        gid = int(policy_rng.integers(len(pool)))
        graph, part = pool[gid]
        seeds: list[int] = []
        prev = 0.0
        losses = []
        est = None
        for t in range(hp.k):
            a = epsilon_greedy_action(graph, part, seeds, params, eps, policy_rng, hp.embed_iters)
            after = seeds + [a]
            est = estimate_spread(graph, part, after, cascade, _rng.substream(hp.rng_seed, "reward", step))
            total = fair_reward(est, hp.phi)
            memory.append(Transition(gid, tuple(seeds), a, total - prev, tuple(after), t == hp.k - 1))
            prev = total
            seeds = after
            step += 1
            if step % hp.update_period == 0 and len(memory) >= hp.batch_size:
                sample = memory.sample(hp.batch_size, replay_rng)
                y = compute_targets(sample, pool, params if target is None else target, hp.gamma,
                                    hp.embed_iters, dtype)
                states = StateBatch.from_states([(pool[s.graph_id][0], pool[s.graph_id][1], s.before)
                                                 for s in sample], dtype)
                loss, _, grad = batch_loss_gradient(states, params, hp.embed_iters, [s.action for s in sample], y)
                if adam is None:
                    params = sgd_step(params, grad, hp.learning_rate, hp.batch_size)
                else:
                    params = adam.step(params, grad, hp.learning_rate, hp.batch_size)
                losses.append(loss / hp.batch_size)
            if target is not None and step % hp.target_sync == 0:
                target = params.copy()
            if hp.decay_per == "step":
                decay()
        if hp.decay_per == "episode":
            decay()
        report.reward.append(prev)
        report.outreach.append(est.total_outreach)
        report.fairness.append(maximin_fairness(est))
        report.epsilon.append(eps)
        report.mean_loss.append(float(np.mean(losses)) if losses else math.nan)
        report.graph_index.append(gid)
        if on_episode is not None:
            on_episode(episode, report)
        if (episode + 1) % 50 == 0:
            log.info("episode %d reward %.4f eps %.3f", episode + 1,
                     float(np.mean(report.reward[-50:])), eps)

    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, params, hp.embed_iters)
        report.checkpoint = str(checkpoint_path)
    return params, report
