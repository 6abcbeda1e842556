import numpy as np
from hypothesis import given, strategies as st

from relaxkit import rng


@given(seed=st.integers(0, 2 ** 63), n=st.integers(1, 1000))
def test_below_in_range(seed, n):
    keys = rng.sample_keys(seed, np.arange(64))
    v = rng.below(rng.words(keys, 3, 1), n)
    assert v.min() >= 0 and v.max() < n


def test_keys_depend_only_on_index():
    a = rng.sample_keys(7, np.arange(10))
    b = rng.sample_keys(7, np.arange(5, 10))
    assert np.array_equal(a[5:], b)


def test_roughly_uniform():
    keys = rng.sample_keys(1, np.arange(200000))
    counts = np.bincount(rng.below(rng.words(keys, 0, 0), 3), minlength=3)
    assert np.all(np.abs(counts / 200000 - 1 / 3) < 0.005)
