"""Seed handling.

Every random draw in the package goes through :func:`generator`, which wraps
numpy's counter-based ``Philox`` bit generator (4x64, 10 rounds, as shipped
with numpy >= 1.17).  Per-purpose streams (``"train"``, ``"test"``,
``"covariance"``, ``"basket_x0"``, ...) are derived from a master seed with
:func:`derive_seed`, which hashes the label into a ``SeedSequence`` spawn key.
No module keeps a global generator.
"""

import zlib

import numpy as np

ALGORITHM = "numpy.random.Philox(4x64-10) seeded via SeedSequence"

_MASK64 = (1 << 64) - 1


def _check_seed(seed):
    seed = int(seed)
    if seed < 0 or seed > _MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def derive_seed(master, label):
    """Return the 64-bit seed of stream ``label`` under ``master``.

    The mapping is a pure function of its arguments, so the same
    ``(master, label)`` gives the same seed on every platform.
    """
    master = _check_seed(master)
    key = zlib.crc32(label.encode("utf-8"))
    ss = np.random.SeedSequence(entropy=master, spawn_key=(key,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generator(seed):
    """A fresh ``numpy.random.Generator`` for a 64-bit seed."""
    seed = _check_seed(seed)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
