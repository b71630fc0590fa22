"""Seed-stream plumbing for reproducible Monte Carlo runs.

Every stochastic routine in the package draws from a generator created here.
Streams are addressed by a master seed plus an integer path, so independent
pipeline stages (and independent replica batches inside a stage) never share
state and never depend on call order.
"""

from __future__ import annotations

import numpy as np


def stream(master_seed: int, *path: int) -> np.random.Generator:
    """Generator for one labeled node of the experiment tree.

    The same (master_seed, path) pair always yields an identical stream,
    which is what makes simulation snapshots bit-reproducible.
    """
    entropy = [int(master_seed)] + [int(p) for p in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def spawn_streams(master_seed: int, n: int, *path: int) -> list[np.random.Generator]:
    """n independent generators below one node, e.g. one per replica batch."""
    root = np.random.SeedSequence([int(master_seed)] + [int(p) for p in path])
    return [np.random.default_rng(child) for child in root.spawn(int(n))]
