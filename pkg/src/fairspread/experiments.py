"""Evaluation protocol, method comparison tables and parameter sweeps.

Streams: the evaluation of graph ``i`` uses ``("eval", i)`` under the master
seed for every method, so two methods that pick the same seeds get identical
rows. A method's own randomness (CELF sampling) uses ``("method", name, i)``.
"""
from __future__ import annotations

import csv
import hashlib
import logging
import math
import time
from dataclasses import asdict, dataclass, fields, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from . import _rng, baselines
from .agent import Hyperparameters, TrainReport, select_seeds, train
from .diffusion import CascadeConfig, disparity, estimate_spread, maximin_fairness
from .graph import CommunityPartition, Graph
from .qnet import ParameterSet, checkpoint_bytes

log = logging.getLogger(__name__)

Method = Callable[[Graph, CommunityPartition, int, float, object], list]
TestSet = Sequence[tuple[Graph, CommunityPartition]]

RESULT_COLUMNS = ["method", "dataset", "k", "p", "outreach_mean", "outreach_std", "fairness_mean",
                  "fairness_std", "disparity_mean", "seconds", "seed"]


@dataclass(frozen=True)
class EvalRecord:
    method: str
    dataset: str
    k: int
    p: float
    outreach_mean: float
    outreach_std: float
    fairness_mean: float
    fairness_std: float
    disparity_mean: float
    seconds: float
    seed: int
    m_eval: int = 0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def evaluate_seed_set(graph: Graph, partition: CommunityPartition, seeds: Sequence[int], p: float,
                      m_eval: int = 1000, seed=0, *, method: str = "", dataset: str = "",
                      seconds: float = 0.0, jobs: int = 1) -> EvalRecord:
    """Outreach, maximin fairness and disparity of one seed set.

    ``fairness_std`` is the per-realization spread of the activated fraction
    in the least-reached community.
    """
    est = estimate_spread(graph, partition, seeds, CascadeConfig(p, m_eval), seed, jobs)
    worst = int(np.argmin(est.community_outreach))
    master = seed if isinstance(seed, (int, np.integer)) else int(_rng.as_seedseq(seed).entropy)
    return EvalRecord(method, dataset, len(seeds), float(p), est.total_outreach, est.std_total,
                      maximin_fairness(est), float(est.community_std[worst]), disparity(est),
                      float(seconds), int(master), m_eval)


# ---------------------------------------------------------------- methods

def _celf(sims: int) -> Method:
    def run(g, part, k, p, seed):
        return baselines.celf(g, k, CascadeConfig(p, sims), seed)
    return run


def dq4fairim_method(params: ParameterSet, T_embed: int = 4) -> Method:
    def run(g, part, k, p, seed):
        return select_seeds(g, part, params, k, T_embed)
    return run


def baseline_methods(celf_sims: int = 200) -> dict[str, Method]:
    return {
        "celf": _celf(celf_sims),
        "degree": lambda g, part, k, p, seed: baselines.top_degree(g, k),
        "pagerank": lambda g, part, k, p, seed: baselines.top_pagerank(g, k),
        "parity": lambda g, part, k, p, seed: baselines.parity_degree(g, part, k),
        "fair_pagerank": lambda g, part, k, p, seed: baselines.fair_pagerank(g, part, k),
    }


def resolve_methods(names: Sequence[str], params: ParameterSet | None = None, T_embed: int = 4,
                    celf_sims: int = 200) -> dict[str, Method]:
    table = baseline_methods(celf_sims)
    out = {}
    for name in names:
        if name == "dq4fairim":
            if params is None:
                raise ValueError("method 'dq4fairim' needs a checkpoint")
            out[name] = dq4fairim_method(params, T_embed)
        elif name in table:
            out[name] = table[name]
        else:
            valid = ", ".join(sorted([*table, "dq4fairim"]))
            raise ValueError(f"unknown method {name!r}; valid methods: {valid}")
    return out


# ---------------------------------------------------------------- tables

def _failed(method, dataset, k, p, seed, msg, seconds=0.0) -> EvalRecord:
    nan = math.nan
    return EvalRecord(method, dataset, k, float(p), nan, nan, nan, nan, nan, seconds, int(seed), 0, msg)


def evaluate_cells(test_set: TestSet, methods: Mapping[str, Method], k: int, p: float, m_eval: int = 1000,
                   seed: int = 0, dataset: str = "", time_budget: float | None = None,
                   jobs: int = 1) -> dict[str, list[EvalRecord]]:
    """One record per (method, graph). Failures are recorded, not raised."""
    if not test_set:
        raise ValueError("empty test set")
    out: dict[str, list[EvalRecord]] = {}
    for name, method in methods.items():
        rows, spent = [], 0.0
        for gi, (g, part) in enumerate(test_set):
            if time_budget is not None and spent > time_budget:
                rows.append(_failed(name, dataset, k, p, seed, "time budget exceeded"))
                continue
            t0 = time.perf_counter()
            try:
                seeds = method(g, part, k, p, _rng.substream(seed, "method", name, gi))
                elapsed = time.perf_counter() - t0
                rows.append(evaluate_seed_set(g, part, seeds, p, m_eval, _rng.substream(seed, "eval", gi),
                                              method=name, dataset=dataset, seconds=elapsed, jobs=jobs))
                rows[-1] = replace(rows[-1], k=k, seed=int(seed))
            except Exception as exc:  # recorded per cell
                elapsed = time.perf_counter() - t0
                log.warning("%s failed on graph %d: %s", name, gi, exc)
                rows.append(_failed(name, dataset, k, p, seed, f"{type(exc).__name__}: {exc}", elapsed))
            spent += elapsed
        out[name] = rows
    return out


def average_records(rows: Sequence[EvalRecord]) -> EvalRecord:
    good = [r for r in rows if r.ok]
    first = rows[0]
    if not good:
        return replace(first, error=first.error)
    avg = {f: float(np.mean([getattr(r, f) for r in good]))
           for f in ("outreach_mean", "outreach_std", "fairness_mean", "fairness_std", "disparity_mean", "seconds")}
    err = None if len(good) == len(rows) else f"{len(rows) - len(good)} of {len(rows)} cells failed"
    return replace(good[0], **avg, error=err)


def compare_methods(test_set: TestSet, methods: Mapping[str, Method], k: int, p: float, m_eval: int = 1000,
                    seed: int = 0, dataset: str = "", time_budget: float | None = None,
                    jobs: int = 1) -> list[EvalRecord]:
    """Run every method on every graph and average per method."""
    cells = evaluate_cells(test_set, methods, k, p, m_eval, seed, dataset, time_budget, jobs)
    return [average_records(rows) for rows in cells.values()]


def sweep_k(test_set: TestSet, methods: Mapping[str, Method], k_values: Sequence[int], p: float,
            m_eval: int = 1000, seed: int = 0, dataset: str = "", **kw) -> list[EvalRecord]:
    out = []
    for k in k_values:
        out.extend(compare_methods(test_set, methods, k, p, m_eval, seed, dataset, **kw))
    return out


def sweep_p(test_set: TestSet, methods: Mapping[str, Method], p_values: Sequence[float], k: int,
            m_eval: int = 1000, seed: int = 0, dataset: str = "", **kw) -> list[EvalRecord]:
    out = []
    for p in p_values:
        out.extend(compare_methods(test_set, methods, k, p, m_eval, seed, dataset, **kw))
    return out


def checkpoint_hash(params: ParameterSet, T_embed: int) -> str:
    return hashlib.sha256(checkpoint_bytes(params, T_embed)).hexdigest()


@dataclass
class GeneralizationResult:
    records: list[EvalRecord]
    cells: dict[str, dict[str, list[EvalRecord]]]   # dataset -> method -> per-graph records
    params: ParameterSet
    report: TrainReport | None
    checkpoint_sha256: str
    hashes_seen: list[str]


def generalization_run(train_pool: TestSet, test_sets: Mapping[str, TestSet], hp: Hyperparameters,
                       methods: Mapping[str, Method], m_eval: int = 1000, seed: int = 0,
                       params: ParameterSet | None = None, checkpoint_path=None) -> GeneralizationResult:
    """Train once on the small pool (unless ``params`` is given), then evaluate
    the frozen network next to the baselines on each larger test set."""
    report = None
    if params is None:
        params, report = train(train_pool, hp, checkpoint_path=checkpoint_path)
    digest = checkpoint_hash(params, hp.embed_iters)
    frozen = checkpoint_bytes(params, hp.embed_iters)
    records, cells, seen = [], {}, []
    for name, tests in test_sets.items():
        all_methods = {"dq4fairim": dq4fairim_method(params, hp.embed_iters), **methods}
        per = evaluate_cells(tests, all_methods, hp.k, hp.influence_probability, m_eval, seed, name)
        # the checkpoint must not change between sizes
        seen.append(hashlib.sha256(checkpoint_bytes(params, hp.embed_iters)).hexdigest())
        assert checkpoint_bytes(params, hp.embed_iters) == frozen
        cells[name] = per
        records.extend(average_records(rows) for rows in per.values())
    return GeneralizationResult(records, cells, params, report, digest, seen)


def rolling_mean(series: Sequence[float], window: int = 50) -> np.ndarray:
    x = np.asarray(series, dtype=np.float64)
    if window < 1 or window > x.size:
        raise ValueError("window must be in [1, len(series)]")
    c = np.concatenate([[0.0], np.cumsum(x)])
    return (c[window:] - c[:-window]) / window


def rolling_std(series: Sequence[float], window: int = 50) -> np.ndarray:
    x = np.asarray(series, dtype=np.float64)
    view = np.lib.stride_tricks.sliding_window_view(x, window)
    return view.std(axis=1)


def ablate_phi(train_pool: TestSet, phi_values: Sequence[float], hp: Hyperparameters,
               checkpoint_dir=None) -> dict[float, TrainReport]:
    """One training run per phi with every other knob (including the seed) fixed."""
    out = {}
    for phi in phi_values:
        path = None
        if checkpoint_dir is not None:
            path = f"{checkpoint_dir}/phi_{phi:g}.ckpt"
        _, report = train(train_pool, replace(hp, phi=float(phi)), checkpoint_path=path)
        out[float(phi)] = report
    return out


# ------------------------------------------------------------------ CSVs

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def write_results_csv(records: Sequence[EvalRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_COLUMNS)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in RESULT_COLUMNS])


def read_results_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_sweep_plot_csv(records: Sequence[EvalRecord], path, axis: str) -> None:
    """Plot data for a k or p sweep: one row per (axis value, method)."""
    cols = [axis, "method", "outreach_mean", "outreach_std", "fairness_mean", "fairness_std", "disparity_mean"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in records:
            w.writerow([_fmt(getattr(r, axis)), r.method] + [_fmt(getattr(r, c)) for c in cols[2:]])


def write_ablation_plot_csv(reports: Mapping[float, TrainReport], path, window: int = 50) -> None:
    """Rolling curves per phi: row ``episode`` closes the window ending there."""
    cols = ["phi", "episode", "reward_mean", "reward_std", "outreach_mean", "outreach_std",
            "fairness_mean", "fairness_std"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for phi, rep in reports.items():
            w_eff = min(window, rep.episodes)
            if w_eff == 0:
                continue
            curves = []
            for series in (rep.reward, rep.outreach, rep.fairness):
                curves += [rolling_mean(series, w_eff), rolling_std(series, w_eff)]
            for i in range(len(curves[0])):
                w.writerow([_fmt(float(phi)), i + w_eff] + [_fmt(float(c[i])) for c in curves])
