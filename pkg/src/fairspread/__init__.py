"""Fairness-aware influence maximization with a deep Q-network over graph embeddings."""
from .agent import Hyperparameters, TrainReport, select_seeds, train
from .baselines import celf, fair_pagerank, greedy_im, pagerank, parity_degree, top_degree, top_pagerank
from .diffusion import (CascadeConfig, SpreadEstimate, disparity, estimate_spread, exact_spread, fair_reward,
                        maximin_fairness)
from .generators import HbaParams, generate_hba
from .graph import CommunityPartition, Graph, load_graph, write_graph
from .qnet import ParameterSet, load_checkpoint, save_checkpoint

__version__ = "0.1.0"
