"""Shared plumbing: logging, configuration, errors, records and RNG streams."""
