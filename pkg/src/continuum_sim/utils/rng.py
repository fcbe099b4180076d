# stdlib
import zlib

# third party
import numpy as np


def stream_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def child_generator(seed: int, *keys: str) -> np.random.Generator:
    """
    Returns an independent counter-based generator for (seed, *keys). Adding a new key
    never perturbs the draws of any other key.
    """
    entropy = [int(seed)] + [stream_key(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
