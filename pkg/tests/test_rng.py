"""Counter-based substreams: determinism, stream separation, uniformity."""

import math

import numpy as np
import pytest

from bell_lab import rng


def test_pure_function_of_keys():
    idx = np.arange(1000, dtype=np.uint64)
    a = rng.uniforms(7, "source", idx)
    b = rng.uniforms(7, "source", idx)
    assert np.array_equal(a, b)


def test_streams_differ_by_label_seed_and_draw():
    idx = np.arange(1000, dtype=np.uint64)
    base = rng.uniforms(7, "source", idx)
    assert not np.array_equal(base, rng.uniforms(7, "die", idx))
    assert not np.array_equal(base, rng.uniforms(8, "source", idx))
    assert not np.array_equal(base, rng.uniforms(7, "source", idx, draw=1))


def test_scalar_matches_vector():
    vec = rng.uniforms(3, "ip.s1", np.arange(10, dtype=np.uint64))
    for i in range(10):
        assert rng.uniform(3, "ip.s1", i) == vec[i]


def test_uniform_range_and_mean():
    n = 1_000_000
    u = rng.uniforms(11, "source", np.arange(n, dtype=np.uint64))
    assert u.min() >= 0.0
    assert u.max() < 1.0
    # mean of U[0,1): sd = 1/sqrt(12N)
    sd = 1.0 / math.sqrt(12 * n)
    assert abs(u.mean() - 0.5) < 4 * sd


def test_choice_of_4_uniformity():
    n = 1_000_000
    c = rng.choice_of_4(5, "die", np.arange(n, dtype=np.uint64))
    counts = np.bincount(c, minlength=4)
    sd = math.sqrt(n * 0.25 * 0.75)
    for k in range(4):
        assert abs(counts[k] - n / 4) < 4 * sd, counts


def test_integers_below():
    n = 100_000
    v = rng.integers_below(9, "die", np.arange(n, dtype=np.uint64), 3)
    assert v.min() >= 0 and v.max() <= 2
    counts = np.bincount(v, minlength=3)
    sd = math.sqrt(n * (1 / 3) * (2 / 3))
    for k in range(3):
        assert abs(counts[k] - n / 3) < 4 * sd
    assert np.all(rng.integers_below(9, "die", np.arange(10, dtype=np.uint64), 1) == 0)
    with pytest.raises(ValueError):
        rng.integers_below(9, "die", np.arange(4), 0)


def test_draw_accepts_arrays():
    idx = np.arange(16, dtype=np.uint64)
    per_draw = rng.uniforms(1, "x", idx, draw=np.arange(16, dtype=np.uint64))
    stacked = np.array([rng.uniform(1, "x", int(i), draw=int(i)) for i in idx])
    assert np.array_equal(per_draw, stacked)


def test_frozen_reference_words():
    # Regression pin: these exact outputs define the bitstream. If the mixing
    # constants or key layout change, every seeded artifact changes with them.
    got = rng.hash_words(42, "source", np.arange(3, dtype=np.uint64)).tolist()
    assert got == [15468791892608045549, 7649598349439893535, 11560117808847572821]
    assert [rng.uniform(42, "die", i) for i in range(3)] == [
        0.4808224035067491,
        0.47506164243554716,
        0.5385271118391676,
    ]
