"""
Utility functions for the application.
"""
import math

import numpy as np

UINT64_MAX = 2**64 - 1


def format_float(value):
    """
    Format a number with 17 significant digits (exact round-trip for doubles).
    """
    return format(float(value), '.17g')


def validate_seed(seed):
    """
    Return seed as int if it is a valid unsigned 64-bit integer.
    """
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f'seed must be an integer, got {type(seed).__name__}')
    seed = int(seed)
    if not 0 <= seed <= UINT64_MAX:
        raise ValueError(f'seed {seed} outside the unsigned 64-bit range')
    return seed


def derive_seed(seed, *keys):
    """
    Derive a child 64-bit seed from a parent seed and integer keys.
    Same inputs always give the same child; distinct keys give independent children.
    """
    sequence = np.random.SeedSequence([validate_seed(seed), *[int(k) for k in keys]])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def log_uniform(rng, low, high):
    """
    Draw from the log-uniform distribution on [low, high].
    """
    return float(math.exp(rng.uniform(math.log(low), math.log(high))))
