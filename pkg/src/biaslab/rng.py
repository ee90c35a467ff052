"""Counter-based random streams keyed by (seed, model, index, block)."""

import zlib

import numpy as np


def model_key(model_id):
    return zlib.crc32(model_id.encode("utf-8"))


def block_stream(seed, model_id, n, block):
    """Philox generator for one block of samples.

    Blocks have a fixed size per (model, n), so the stream of every sample is
    determined by the seed, the model, the index and the sample position alone.
    """
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    entropy = [int(seed), model_key(model_id), int(n), int(block)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def auxiliary_stream(seed, label):
    """Independent stream for companion simulations and oracles."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), model_key(label)])))
