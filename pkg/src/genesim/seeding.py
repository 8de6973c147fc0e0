"""Deterministic derivation of independent random streams.

Sub-tasks (bagging rounds, GA offspring, experiment cells) each get their
own stream derived from a master seed plus the sub-task coordinates, so
results never depend on execution order or on process boundaries.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    """Map a tuple of labels to a stable 64-bit seed.

    Labels are joined by a separator byte and hashed, so ("a", 12) and
    ("a1", 2) cannot collide the way naive string concatenation would.
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def spawn_rng(*parts) -> np.random.Generator:
    """Return a fresh generator seeded from the given labels."""
    return np.random.default_rng(derive_seed(*parts))
