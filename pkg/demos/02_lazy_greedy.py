"""
Greedy and lazy greedy seed selection
=====================================

Both run on one fixed set of live-arc samples, so the spread estimate is a
coverage count and the lazy variant must return the same seeds with fewer
spread evaluations.
"""

from fairspread.baselines import MonteCarloOracle, celf, greedy_im
from fairspread.diffusion import CascadeConfig
from fairspread.generators import HbaParams, generate_hba

graph, _ = generate_hba(HbaParams(150, edges_per_node=3, rng_seed=1))
config = CascadeConfig(influence_probability=0.1, num_simulations=300)

plain = MonteCarloOracle(graph, config, seed=5)
lazy = MonteCarloOracle(graph, config, seed=5)
a = greedy_im(graph, 8, oracle=plain)
b = celf(graph, 8, oracle=lazy)

print("greedy ", a, plain.evaluations, "evaluations")
print("celf   ", b, lazy.evaluations, "evaluations")
print("same seeds:", a == b)
