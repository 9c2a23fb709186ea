"""
Tests for the hypergraph correlation detection lab.
"""
