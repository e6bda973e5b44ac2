"""Keyed, counter-based random number streams.

Every Monte Carlo draw in the package comes from a Philox generator whose
key is derived from the user seed plus a tuple of labels naming the
consumer (study row, sample block, bootstrap replicate). Streams with
distinct labels are statistically independent and do not depend on the
order in which they are created, so serial runs, reordered runs, and
reruns with the same seed all produce identical numbers.
"""

import hashlib

import numpy as np


def stream(seed, *labels):
    """Return a numpy Generator keyed by (seed, *labels).

    seed is an integer; labels may be ints, floats, or strings. The Philox
    key is the 128-bit blake2b digest of the repr of the whole tuple, so
    any change in seed or labels yields an unrelated stream.
    """
    parts = []
    for label in labels:
        if isinstance(label, (bool, np.bool_)):
            parts.append(bool(label))
        elif isinstance(label, (int, np.integer)):
            parts.append(int(label))
        elif isinstance(label, (float, np.floating)):
            parts.append(float(label))
        else:
            parts.append(str(label))
    material = repr((int(seed),) + tuple(parts)).encode()
    digest = hashlib.blake2b(material, digest_size=16).digest()
    key = int.from_bytes(digest, "little")
    return np.random.Generator(np.random.Philox(key=key))
