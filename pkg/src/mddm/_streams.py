"""Deterministic named random substreams.

Every stochastic stage (bootstrap, pair subsampling, synthetic generators)
draws from its own counter-based stream derived from the run seed and a
stage label.  Streams are independent of each other and of execution
order, so running stages in parallel or re-ordering them cannot change
any result.
"""
from __future__ import annotations

import hashlib

import numpy as np


def substream(seed: int, *labels: str | int) -> np.random.Generator:
    """Return a Generator keyed by ``seed`` and a path of stage labels.

    Parameters
    ----------
    seed : int
        Run-level seed.
    *labels : str or int
        Stage path, e.g. ``("dimension", "horizontal")``.  The same
        ``(seed, labels)`` pair always yields the same stream.

    Returns
    -------
    numpy.random.Generator
        Philox-based generator, safe to use concurrently with streams
        derived from different labels.
    """
    tag = "/".join(str(part) for part in labels)
    digest = hashlib.blake2b(tag.encode("utf-8"), digest_size=16).digest()
    words = tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=words)
    return np.random.Generator(np.random.Philox(ss))
