"""Reproducible, non-overlapping random streams.

Every stream is a PCG64 generator seeded from
``SeedSequence(entropy=seed, spawn_key=(chain_id, purpose_code))``. Distinct
``(chain_id, purpose)`` pairs therefore yield statistically independent
streams, and identical triples yield bitwise-identical draws.
"""

import numpy as np

PURPOSES = {"chain": 0, "init": 1, "test": 2}


def make_rng(seed, chain_id=0, purpose="chain"):
    """Return the generator for ``(seed, chain_id, purpose)``.

    Parameters
    ----------
    seed : int
        Unsigned 64-bit user seed.
    chain_id : int
        Index of the chain; parallel chains must use distinct ids.
    purpose : str
        One of ``PURPOSES``.
    """
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    if purpose not in PURPOSES:
        raise ValueError(f"unknown stream purpose {purpose!r}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(int(chain_id), PURPOSES[purpose]))
    return np.random.Generator(np.random.PCG64(ss))
