"""Counter-based random words.

Every random word is a pure function of (seed, sample index, step, slot), so a
batch of realizations can be split across any number of workers and still see
exactly the same numbers. The mixing function is the SplitMix64 finalizer,
applied twice with distinct odd constants between stages.
"""
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_STEP = np.uint64(0xD6E8FEB86659FD93)
_SLOT = np.uint64(0xA0761D6478BD642F)


def mix64(x):
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = x ^ (x >> np.uint64(30))
        x = x * _M1
        x = x ^ (x >> np.uint64(27))
        x = x * _M2
        x = x ^ (x >> np.uint64(31))
    return x


def sample_keys(seed, indices):
    """Per-realization keys derived from the master seed and sample indices."""
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)
        return mix64(base ^ mix64(idx * _GOLDEN + _GOLDEN))


def words(keys, step, slot):
    """One 64-bit random word per key for the given (step, slot) counter."""
    with np.errstate(over="ignore"):
        c = np.uint64(step) * _STEP + np.uint64(slot) * _SLOT + _GOLDEN
        return mix64(keys ^ mix64(c))


def below(word, n):
    """Map 64-bit words to integers in [0, n) using the high 32 bits."""
    hi = (word >> np.uint64(32)).astype(np.uint64)
    return ((hi * np.uint64(n)) >> np.uint64(32)).astype(np.int64)
