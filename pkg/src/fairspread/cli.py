"""Command-line entry point: ``fairspread <subcommand> [flags]``.

Every subcommand accepts ``--config FILE`` (``key = value`` lines, keys are
flag names) and flags given on the command line override the file. All
randomness comes from ``--seed``. Errors print one line, ``error: <kind>:
<message>``, to stderr and exit non-zero.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import _rng
from .agent import Hyperparameters, train
from .diffusion import write_seeds
from .experiments import (ablate_phi, compare_methods, resolve_methods, sweep_k, sweep_p,
                          write_ablation_plot_csv, write_results_csv, write_sweep_plot_csv)
from .generators import HbaParams, generate_hba
from .graph import load_graph, write_graph
from .qnet import load_checkpoint

log = logging.getLogger("fairspread")

MANIFEST = "manifest.csv"
METHODS = ("dq4fairim", "celf", "degree", "pagerank", "parity", "fair_pagerank")

# flag help for every Hyperparameters field; "reference value" marks the published setting
HP_HELP = {
    "k": "seed budget per episode (reference values: 10 to 50)",
    "phi": "fairness weight in reward = outreach + phi * fairness (reference value: 1)",
    "episodes": "training episodes (reference value: 750)",
    "gamma": "discount factor (reference value: 1)",
    "epsilon": "initial exploration rate (reference value: 1)",
    "epsilon_decay": "multiplicative exploration decay (reference value: 0.995)",
    "epsilon_min": "exploration floor (reference value: 0.05)",
    "decay_per": "apply the decay after every 'step' or every 'episode'",
    "replay_capacity": "replay memory size (reference value: 2000)",
    "batch_size": "minibatch size (reference value: 32)",
    "learning_rate": "step size (reference value: 0.001)",
    "optimizer": "'adam' or plain 'sgd'",
    "update_period": "gradient update every this many steps",
    "target_sync": "steps between target-network copies (0: bootstrap from the live network)",
    "train_sims": "cascade simulations per training reward",
    "influence_probability": "IC activation probability (reference value: 0.1)",
    "embed_dim": "embedding dimension (reference value: 64)",
    "embed_iters": "embedding rounds",
    "init_scale": "std of the initial weights",
}
HP_CHOICES = {"decay_per": ("step", "episode"), "optimizer": ("adam", "sgd")}


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"error: usage: {self.prog}: {' '.join(message.split())}\n")
        sys.exit(2)


def _jobs_default() -> int:
    raw = os.environ.get("FAIRSPREAD_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _name_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; command-line flags win")
    p.add_argument("--seed", type=int, default=0, help="master seed for every random stream")
    p.add_argument("--jobs", type=int, default=_jobs_default(),
                   help="worker threads for cascade simulation (env FAIRSPREAD_JOBS)")
    p.add_argument("--log-level", default="WARNING", help="logging level")


def _hp_flags(p: argparse.ArgumentParser, skip=()) -> None:
    defaults = Hyperparameters()
    for f in fields(Hyperparameters):
        if f.name == "rng_seed" or f.name in skip:
            continue
        flag = "--" + f.name.replace("_", "-")
        kind = type(getattr(defaults, f.name))
        extra = {"choices": HP_CHOICES[f.name]} if f.name in HP_CHOICES else {}
        aliases = [flag, "--p"] if f.name == "influence_probability" else [flag]
        p.add_argument(*aliases, dest=f.name, type=kind, default=getattr(defaults, f.name),
                       help=HP_HELP[f.name], **extra)
    p.add_argument("--precision", choices=("float32", "float64"), default="float32",
                   help="arithmetic for training updates")


def _eval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="directory with a manifest.csv of test graphs")
    p.add_argument("--dataset", help="dataset name in the CSV (default: directory name)")
    p.add_argument("--methods", type=_name_list, default=list(METHODS[1:]),
                   help=f"comma-separated subset of {', '.join(METHODS)}")
    p.add_argument("--checkpoint", help="trained network, required for dq4fairim")
    p.add_argument("--m-eval", type=int, default=1000, help="evaluation simulations (reference value: 1000)")
    p.add_argument("--celf-sims", type=int, default=200, help="simulations per CELF spread estimate")
    p.add_argument("--time-budget", type=float, help="wall-clock seconds per method before cells are skipped")
    p.add_argument("--timing", choices=("wall", "off"), default="wall",
                   help="'off' writes seconds=0 so repeated runs give byte-identical CSVs")
    p.add_argument("--out", required=True, help="results CSV")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="fairspread", description="Fairness-aware influence maximization.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", formatter_class=fmt, help="write synthetic homophilic graphs")
    _common(g)
    g.add_argument("--n", dest="node_count", type=int, default=200, help="nodes per graph")
    g.add_argument("--edges-per-node", type=int, default=4, help="edges added per arriving node")
    g.add_argument("--minority-fraction", type=float, default=0.2, help="minority share (reference value: 20:80)")
    g.add_argument("--homophily", type=float, default=0.8, help="same-group attachment weight")
    g.add_argument("--count", type=int, default=60, help="number of graphs (reference value: 60 per dataset)")
    g.add_argument("--out", required=True, help="output directory")

    t = sub.add_parser("train", formatter_class=fmt, help="train the Q-network on a graph pool")
    _common(t)
    _hp_flags(t)
    t.add_argument("--data", required=True, help="directory with a manifest.csv of training graphs")
    t.add_argument("--checkpoint", required=True, help="output checkpoint path")
    t.add_argument("--report", help="per-episode CSV (default: <checkpoint>.csv)")

    s = sub.add_parser("seeds", formatter_class=fmt, help="pick a seed set on one graph")
    _common(s)
    s.add_argument("--graph", required=True, help="edge list")
    s.add_argument("--attributes", required=True, help="node attribute file")
    s.add_argument("--method", required=True, choices=METHODS, metavar="METHOD",
                   help=f"one of {', '.join(METHODS)}")
    s.add_argument("--k", type=int, default=10, help="seed budget")
    s.add_argument("--p", type=float, default=0.1, help="IC activation probability (reference value: 0.1)")
    s.add_argument("--checkpoint", help="trained network, required for dq4fairim")
    s.add_argument("--celf-sims", type=int, default=200, help="simulations per CELF spread estimate")
    s.add_argument("--out", help="seed file (default: print to stdout)")

    e = sub.add_parser("evaluate", formatter_class=fmt, help="compare methods on a test set")
    _common(e)
    _eval_flags(e)
    e.add_argument("--k", type=int, default=10, help="seed budget")
    e.add_argument("--p", type=float, default=0.1, help="IC activation probability (reference value: 0.1)")

    w = sub.add_parser("sweep", formatter_class=fmt, help="compare methods over a grid of k or p")
    _common(w)
    _eval_flags(w)
    w.add_argument("--sweep", required=True, choices=("k", "p"), help="swept axis")
    w.add_argument("--values", required=True, type=_float_list, help="comma-separated grid, e.g. 10,20,30")
    w.add_argument("--k", type=int, default=10, help="seed budget when sweeping p")
    w.add_argument("--p", type=float, default=0.1, help="activation probability when sweeping k")
    w.add_argument("--plot", help="plot-data CSV (default: <out> with .plot.csv)")

    a = sub.add_parser("ablate", formatter_class=fmt, help="train once per fairness weight")
    _common(a)
    _hp_flags(a, skip=("phi",))
    a.add_argument("--data", required=True, help="directory with a manifest.csv of training graphs")
    a.add_argument("--phis", type=_float_list, default=[0.0, 0.25, 0.5, 0.75, 1.0],
                   help="fairness weights (reference value: 0, 0.25, 0.5, 0.75, 1)")
    a.add_argument("--window", type=int, default=50, help="rolling window (reference value: 50)")
    a.add_argument("--checkpoint-dir", help="write one checkpoint per weight here")
    a.add_argument("--out", required=True, help="rolling-curve CSV")
    return parser


# ------------------------------------------------------------------ config

def read_config(path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (x.strip() for x in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def _subparser(parser, name) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    raise CliError(f"unknown subcommand {name!r}")


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.config:
        return args
    sub = _subparser(parser, args.command)
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    tokens = {t.split("=", 1)[0] for t in argv if t.startswith("--")}
    given = {a.dest for a in sub._actions if tokens & set(a.option_strings)}
    for key, value in read_config(args.config).items():
        if key not in actions or key == "config":
            raise CliError(f"{args.config}: unknown key {key!r} for {args.command}")
        if key in given:
            continue
        action = actions[key]
        conv = action.type or str
        try:
            val = conv(value)
        except (TypeError, ValueError) as exc:
            raise CliError(f"{args.config}: bad value for {key!r}: {exc}") from None
        if action.choices is not None and val not in action.choices:
            raise CliError(f"{args.config}: {key!r} must be one of {list(action.choices)}")
        setattr(args, key, val)
    return args


# ---------------------------------------------------------------- data

def load_dataset(directory) -> list:
    """Graphs listed in ``directory/manifest.csv``, in manifest order."""
    root = Path(directory)
    manifest = root / MANIFEST
    if not manifest.is_file():
        raise CliError(f"{manifest}: manifest not found")
    with open(manifest, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise CliError(f"{manifest}: no graphs listed")
    return [load_graph(root / r["edge_file"], root / r["attribute_file"]) for r in rows]


def _hp_from(args, **over) -> Hyperparameters:
    kw = {f.name: getattr(args, f.name) for f in fields(Hyperparameters) if hasattr(args, f.name)}
    kw["rng_seed"] = args.seed
    kw.update(over)
    return Hyperparameters(**kw)


def _writable(path) -> None:
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise CliError(f"{parent}: directory does not exist")
    if not os.access(parent, os.W_OK):
        raise CliError(f"{parent}: directory is not writable")


def _params(args, methods):
    if "dq4fairim" not in methods:
        return None, 4
    if not args.checkpoint:
        raise CliError("method dq4fairim needs --checkpoint")
    return load_checkpoint(args.checkpoint)


# --------------------------------------------------------------- commands

def cmd_generate(args) -> None:
    if args.count < 1:
        raise CliError("--count must be >= 1")
    base = HbaParams(args.node_count, args.edges_per_node, args.minority_fraction, args.homophily)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(args.count):
        seed = int(_rng.generator(args.seed, "generate", i).integers(2 ** 63))
        params = replace(base, rng_seed=seed)
        g, part = generate_hba(params)
        stem = f"hba_{i:04d}"
        write_graph(g, part, out / f"{stem}.edges", out / f"{stem}.attr")
        rows.append([i, f"{stem}.edges", f"{stem}.attr", seed, params.node_count, params.edges_per_node,
                     repr(params.minority_fraction), repr(params.homophily)])
    with open(out / MANIFEST, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "edge_file", "attribute_file", "rng_seed", "node_count", "edges_per_node",
                    "minority_fraction", "homophily"])
        w.writerows(rows)
    print(f"wrote {args.count} graphs to {out}")


def cmd_train(args) -> None:
    hp = _hp_from(args)
    _writable(args.checkpoint)
    report_path = args.report or f"{args.checkpoint}.csv"
    _writable(report_path)
    pool = load_dataset(args.data)
    dtype = np.float32 if args.precision == "float32" else np.float64
    _, report = train(pool, hp, checkpoint_path=args.checkpoint, dtype=dtype)
    report.write_csv(report_path)
    print(f"trained {report.episodes} episodes; checkpoint {args.checkpoint}; report {report_path}")


def cmd_seeds(args) -> None:
    if args.out:
        _writable(args.out)
    params, T = _params(args, [args.method])
    g, part = load_graph(args.graph, args.attributes)
    method = resolve_methods([args.method], params, T, args.celf_sims)[args.method]
    seeds = method(g, part, args.k, args.p, _rng.substream(args.seed, "method", args.method, 0))
    if args.out:
        write_seeds(args.out, seeds, g)
    else:
        ids = g.node_ids or tuple(str(v) for v in range(g.node_count))
        print("\n".join(ids[v] for v in seeds))


def _prepare_eval(args):
    unknown = [m for m in args.methods if m not in METHODS]
    if unknown:
        raise CliError(f"unknown method {unknown[0]!r}; valid methods: {', '.join(sorted(METHODS))}")
    if args.m_eval < 1:
        raise CliError("--m-eval must be >= 1")
    _writable(args.out)
    params, T = _params(args, args.methods)
    methods = resolve_methods(args.methods, params, T, args.celf_sims)
    tests = load_dataset(args.data)
    dataset = args.dataset or Path(args.data).resolve().name
    return methods, tests, dataset


def _finish(records, args):
    if args.timing == "off":
        records = [replace(r, seconds=0.0) for r in records]
    for r in records:
        if r.error:
            log.warning("%s on %s: %s", r.method, r.dataset, r.error)
    return records


def cmd_evaluate(args) -> None:
    methods, tests, dataset = _prepare_eval(args)
    rows = compare_methods(tests, methods, args.k, args.p, args.m_eval, args.seed, dataset,
                           args.time_budget, args.jobs)
    write_results_csv(_finish(rows, args), args.out)
    print(f"wrote {len(rows)} rows to {args.out}")


def cmd_sweep(args) -> None:
    if args.sweep == "k" and any(v != int(v) or v < 0 for v in args.values):
        raise CliError("--values for a k sweep must be non-negative integers")
    plot = args.plot or str(Path(args.out).with_suffix(".plot.csv"))
    _writable(plot)
    methods, tests, dataset = _prepare_eval(args)
    kw = dict(time_budget=args.time_budget, jobs=args.jobs)
    if args.sweep == "k":
        rows = sweep_k(tests, methods, [int(v) for v in args.values], args.p, args.m_eval, args.seed, dataset, **kw)
    else:
        rows = sweep_p(tests, methods, args.values, args.k, args.m_eval, args.seed, dataset, **kw)
    rows = _finish(rows, args)
    write_results_csv(rows, args.out)
    write_sweep_plot_csv(rows, plot, args.sweep)
    print(f"wrote {len(rows)} rows to {args.out} and {plot}")


def cmd_ablate(args) -> None:
    if not args.phis or min(args.phis) < 0:
        raise CliError("--phis must be a non-empty list of non-negative weights")
    hp = _hp_from(args)
    _writable(args.out)
    if args.checkpoint_dir:
        Path(args.checkpoint_dir).mkdir(parents=True, exist_ok=True)
    pool = load_dataset(args.data)
    reports = ablate_phi(pool, args.phis, hp, args.checkpoint_dir)
    write_ablation_plot_csv(reports, args.out, args.window)
    print(f"wrote rolling curves for {len(reports)} weights to {args.out}")


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "seeds": cmd_seeds, "evaluate": cmd_evaluate,
            "sweep": cmd_sweep, "ablate": cmd_ablate}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
        if args.jobs < 1:
            raise CliError("--jobs must be >= 1")
        COMMANDS[args.command](args)
    except CliError as exc:
        sys.stderr.write(f"error: usage: {exc}\n")
        return 2
    except (ValueError, OSError, KeyError, RuntimeError) as exc:
        msg = " ".join(str(exc).split())
        sys.stderr.write(f"error: {type(exc).__name__}: {msg}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
