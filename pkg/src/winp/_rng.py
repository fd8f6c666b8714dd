"""Named random streams derived from one master seed.

Every concern draws from its own stream so that, e.g., changing the number of
subcarriers never perturbs job latencies.
"""

import numpy as np

STREAMS = {
    "latency_jitter": 1,
    "core_speed": 2,
    "bandwidth_jitter": 3,
    "channel": 4,
}


def stream(seed, name, *sub):
    """Return a generator for stream ``name`` (optionally sub-indexed) of ``seed``."""
    key = (STREAMS[name],) + tuple(int(s) for s in sub)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))
