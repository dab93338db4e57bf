"""
Training a fair seeding policy and comparing it with baselines
==============================================================

A small run: 200 episodes on a pool of 100-node graphs, then the frozen
network picks seeds on larger unseen graphs next to the baselines. Takes about
a minute on one core; raise ``episodes`` for a stronger policy.
"""

import logging

from fairspread.agent import Hyperparameters, train
from fairspread.experiments import compare_methods, dq4fairim_method, resolve_methods
from fairspread.generators import HbaParams, generate_hba

logging.basicConfig(level=logging.INFO, format="%(message)s")

pool = [generate_hba(HbaParams(100, 4, rng_seed=10 + i)) for i in range(5)]
hp = Hyperparameters(k=5, episodes=200, rng_seed=0)
params, report = train(pool, hp)
print("mean reward, first 50 episodes %.3f, last 50 %.3f"
      % (sum(report.reward[:50]) / 50, sum(report.reward[-50:]) / 50))

# unseen, twice as large
tests = [generate_hba(HbaParams(200, 4, rng_seed=900 + i)) for i in range(3)]
methods = {"dq4fairim": dq4fairim_method(params, hp.embed_iters),
           **resolve_methods(["degree", "parity", "fair_pagerank", "celf"], celf_sims=100)}
for row in compare_methods(tests, methods, k=5, p=0.1, m_eval=1000, seed=1, dataset="hba200"):
    print(f"{row.method:14s} outreach {row.outreach_mean:.4f}  maximin fairness {row.fairness_mean:.4f}  "
          f"disparity {row.disparity_mean:.4f}  {row.seconds:.2f}s")
