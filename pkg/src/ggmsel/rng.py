"""Deterministic random-stream derivation.

All randomness in the package flows from one top-level integer seed.  Streams
for independent work units (replicates, subsamples, generation stages) are
derived as

    rng_for(seed, domain, *indices) = Generator(PCG64(SeedSequence([seed, domain, *indices])))

so that every unit owns an independent stream addressed by its indices alone.
Results are therefore identical no matter in which order (or on how many
threads) the units run.

Domain codes:
    0  topology generation
    1  precision-matrix weights
    2  data sampling
    3  subsample row draws (A-MSE / StARS), index = replicate
    4  subset selection for large-p clustering
"""

from __future__ import annotations

import numpy as np

TOPOLOGY = 0
PRECISION = 1
SAMPLING = 2
SUBSAMPLE = 3
SUBSET = 4


def rng_for(seed: int, domain: int, *indices: int) -> np.random.Generator:
    """Return the dedicated Generator for one work unit.

    Args:
        seed: Top-level experiment seed.
        domain: Domain code (module constants above).
        *indices: Unit coordinates, e.g. replicate number.

    Returns:
        Independent numpy Generator for this unit.
    """
    ss = np.random.SeedSequence([int(seed), int(domain), *[int(i) for i in indices]])
    return np.random.Generator(np.random.PCG64(ss))
