"""Deterministic derivation of independent random streams."""

from __future__ import annotations

import numpy as np


def derive_seed(*parts: int) -> int:
    """Collapse an integer path into a single RNG seed.

    Distinct paths give statistically independent streams; identical paths
    always give the same seed. Used to keep every random consumer (channel
    draws, map perturbations, selection, detection noise) on its own stream.
    """
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])
