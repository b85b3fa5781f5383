"""Seed plumbing.

One master seed fans out to labeled streams (scorer fit, tie breaking,
replicates, ...) so each component is independently reproducible.  Streams
use the counter-based Philox generator, and data-dependent seeding goes
through an order-invariant hash so that permuting a sample never changes
the derived randomness.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _label_int(label):
    if isinstance(label, str):
        digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    return int(label) & _MASK64


def _seed_sequence(seed, labels):
    entropy = [int(seed) & _MASK64] + [_label_int(lab) for lab in labels]
    return np.random.SeedSequence(entropy)


def derive_rng(seed, *labels):
    """Generator for the stream identified by ``(seed, *labels)``."""
    return np.random.Generator(np.random.Philox(_seed_sequence(seed, labels)))


def derive_seed(seed, *labels):
    """64-bit child seed for the stream identified by ``(seed, *labels)``."""
    state = _seed_sequence(seed, labels).generate_state(2, dtype=np.uint64)
    return int(state[0] ^ (state[1] >> 1))


def _as_rows(a):
    if a.ndim == 1:
        return a.reshape(-1, 1)
    width = int(np.prod(a.shape[1:], dtype=np.int64))
    return a.reshape(a.shape[0], width)


def canonical_order(x):
    """Row-lexicographic argsort; the canonical layout of a sample multiset."""
    a = _as_rows(np.asarray(x, dtype=np.float64))
    if a.shape[0] == 0:
        return np.arange(0)
    # lexsort uses the last key as primary: feed columns in reverse.
    return np.lexsort(a.T[::-1])


def multiset_hash(*arrays):
    """Order-invariant 64-bit hash of one or more sample arrays.

    Rows are sorted lexicographically before hashing, so any permutation of
    a sample yields the same value.  Exact float64 bytes are hashed; scores
    that differ in the last bit hash differently, by design.
    """
    h = hashlib.blake2b(digest_size=8)
    for arr in arrays:
        a = _as_rows(np.ascontiguousarray(np.asarray(arr, dtype=np.float64)))
        h.update(np.int64(a.shape[1]).tobytes())
        if a.shape[0]:
            order = np.lexsort(a.T[::-1])
            h.update(np.ascontiguousarray(a[order]).tobytes())
    return int.from_bytes(h.digest(), "little")
