"""Thermal- and wirelength-aware chiplet placement on 2.5D interposers.

A threshold router splits the placement sequence between a thermal agent
and a wirelength agent; both are trained with PPO on a shared grid
environment.  Simulated annealing, random search and a single-agent
weighted-sum learner serve as baselines, compared through Pareto fronts
over (wirelength, hotspot temperature).
"""

__version__ = "0.1.0"
