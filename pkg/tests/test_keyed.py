import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from smcodec.keyed import MASK64, KeyedStream, check_seed, derive_seed, uniforms, word, words

# Outputs of the reference SplitMix64 C implementation.
SPLITMIX_1234567 = [
    6457827717110365317,
    3203168211198807973,
    9817491932198370423,
    4593380528125082431,
    16408922859458223821,
]


def test_splitmix_reference_vector():
    assert [word(1234567, i) for i in range(5)] == SPLITMIX_1234567


def test_splitmix_seed_zero():
    assert word(0, 0) == 0xE220A8397B1DCDAF


def test_stream_matches_counter_form():
    s = KeyedStream(1234567)
    assert [s.next_word() for _ in range(5)] == SPLITMIX_1234567


@given(st.integers(0, MASK64), st.integers(0, 1000), st.integers(1, 50))
def test_bulk_words_match_scalar(seed, start, count):
    bulk = words(seed, start, count)
    assert bulk.dtype == np.uint64
    assert [int(v) for v in bulk] == [word(seed, start + i) for i in range(count)]


def test_uniforms_range_and_mean():
    u = uniforms(99, 200_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.005
    assert stats.kstest(u, "uniform").pvalue > 1e-3


def test_below_is_uniform():
    s = KeyedStream(7)
    k = 10
    counts = np.bincount([s.below(k) for _ in range(50_000)], minlength=k)
    assert stats.chisquare(counts).pvalue > 1e-3


def test_below_rejects_low_words():
    # k = 3: threshold = 2**64 mod 3 = 1, so only the word 0 is rejected
    s = KeyedStream(5)
    assert all(0 <= s.below(3) < 3 for _ in range(100))
    with pytest.raises(ValueError):
        s.below(0)


def test_below_one_is_zero_and_consumes_a_word():
    s = KeyedStream(11)
    assert s.below(1) == 0
    assert s.counter == 1


@pytest.mark.parametrize("bad", [-1, 1 << 64])
def test_check_seed_range(bad):
    with pytest.raises(ValueError):
        check_seed(bad)


def test_derive_seed_is_stable_and_separating():
    a = derive_seed(0, "lena", 0.6, 3)
    assert a == derive_seed(0, "lena", 0.6, 3)
    assert 0 <= a <= MASK64
    others = {derive_seed(0, "lena", 0.6, t) for t in range(100)}
    assert len(others) == 100
    # length prefixing keeps ("ab", "c") and ("a", "bc") apart
    assert derive_seed("ab", "c") != derive_seed("a", "bc")
