"""Deterministic seed derivation.

A single run seed is expanded into independent per-member / per-stage
streams by feeding ``(seed, *key)`` into a numpy SeedSequence.  The same
key always yields the same stream, regardless of the order in which
streams are created, so parallel and serial execution agree bit for bit.
"""

import numpy as np

# Fixed labels are hashed into integers so keys can mix strings and ints.
_LABEL_SPACE = 2**31


def _as_entropy(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part)
    if isinstance(part, str):
        # stable (non-randomized) string hash
        h = 0
        for ch in part.encode("utf-8"):
            h = (h * 131 + ch) % _LABEL_SPACE
        return h
    raise TypeError(f"seed key parts must be int or str, got {type(part).__name__}")


def derive_rng(seed: int, *key) -> np.random.Generator:
    """Return a Generator for the stream identified by (seed, *key)."""
    entropy = (int(seed),) + tuple(_as_entropy(p) for p in key)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed: int, *key) -> int:
    """Collapse (seed, *key) to a plain integer seed."""
    entropy = (int(seed),) + tuple(_as_entropy(p) for p in key)
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
