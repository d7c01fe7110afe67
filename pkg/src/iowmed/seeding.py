"""Counter-style seed derivation.

A child seed depends only on the parent seed and the integer keys, never on
how many seeds were drawn before it, so parallel or reordered execution
reproduces the same streams.
"""
import numpy as np


def derive_seed(*keys) -> int:
    """Map a tuple of non-negative integers to a 63-bit seed."""
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(1, dtype=np.uint64)
    return int(state[0] >> np.uint64(1))
