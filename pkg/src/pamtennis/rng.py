"""Deterministic RNG substreams derived from a single master seed.

Every stochastic consumer (launcher balls, training episodes, evaluation
episodes) gets its own substream keyed by a namespace and an index, so
results are reproducible and independent of scheduling or worker count.
"""

import numpy as np

# Namespace tags keep substreams of different subsystems disjoint even
# when their indices collide.
NS_LAUNCHER = 1
NS_EPISODE = 2
NS_EVAL = 3
NS_INIT = 4
NS_EVAL_DATA = 5


def substream(master_seed: int, namespace: int, index: int) -> np.random.Generator:
    """Generator for item ``index`` of ``namespace`` under ``master_seed``."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(namespace, index))
    return np.random.Generator(np.random.PCG64(seq))
