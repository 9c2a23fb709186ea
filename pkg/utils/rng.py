"""
Seed-keyed random streams.

Every random draw in an experiment comes from a stream identified by
(master_seed, grid index, domain, trial index). The key is hashed by
numpy's SeedSequence and drives a Philox counter-based generator, so a
trial's draws never depend on which worker ran it or in which order.
"""
import numpy as np

# Stream domains; calibration draws never share a key with evaluation draws.
DOMAIN_H0 = 0
DOMAIN_H1 = 1
DOMAIN_CALIBRATION = 2

HYPOTHESIS_DOMAINS = {"h0": DOMAIN_H0, "h1": DOMAIN_H1}

MAX_SEED = 2**64 - 1


def seed_sequence(master_seed, *key):
    """SeedSequence for a master seed and an integer key path."""
    if not 0 <= int(master_seed) <= MAX_SEED:
        raise ValueError(f"master seed must be a 64-bit unsigned integer, got {master_seed}")
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))


def stream(master_seed, *key):
    """Independent Philox generator for (master_seed, *key)."""
    return np.random.Generator(np.random.Philox(seed_sequence(master_seed, *key)))


def trial_stream(master_seed, grid_index, domain, trial_index):
    """Generator for one Monte Carlo trial."""
    return stream(master_seed, grid_index, domain, trial_index)


def as_generator(rng):
    """Accept a Generator, an int seed or None and return a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return np.random.default_rng()
    return stream(int(rng))
