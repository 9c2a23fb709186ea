"""
Hypergraph correlation detection lab: combinatorics, samplers, statistics,
bounds, second moments and the Monte Carlo harness.
"""
