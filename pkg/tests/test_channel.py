import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smcodec.channel import ChannelConfig, LossModel, lost_count, survivors_mask, transmit


@given(st.integers(1, 3000), st.floats(0, 1), st.integers(0, 2**64 - 1))
@settings(max_examples=80)
def test_count_exact_survivors(P, plr, seed):
    keep = survivors_mask(P, ChannelConfig(plr, LossModel.COUNT_EXACT, seed))
    assert keep.sum() == P - int(np.floor(P * plr + 0.5))


def test_lena_packet_count_example():
    keep = survivors_mask(1573, ChannelConfig(0.2, "count", 3))
    assert lost_count(1573, 0.2) == 315
    assert keep.sum() == 1258


def test_extremes():
    pk = list(range(50))
    assert transmit(pk, ChannelConfig(0.0, "count", 1)) == pk
    assert transmit(pk, ChannelConfig(1.0, "count", 1)) == []
    assert transmit(pk, ChannelConfig(0.0, "iid", 1)) == pk
    assert transmit(pk, ChannelConfig(1.0, "iid", 1)) == []


def test_transmit_preserves_order_and_determinism():
    pk = list(range(200))
    cfg = ChannelConfig(0.3, "count", 17)
    out = transmit(pk, cfg)
    assert out == sorted(out)
    assert out == transmit(pk, cfg)
    assert out != transmit(pk, ChannelConfig(0.3, "count", 18))


def test_iid_mean_within_three_standard_errors():
    P, plr, trials = 200, 0.2, 10_000
    counts = np.array([survivors_mask(P, ChannelConfig(plr, "iid", s)).sum() for s in range(trials)])
    se = np.sqrt(P * plr * (1 - plr) / trials)
    assert abs(counts.mean() - P * (1 - plr)) < 3 * se


def test_iid_decision_depends_only_on_index():
    a = survivors_mask(100, ChannelConfig(0.4, "iid", 5))
    b = survivors_mask(300, ChannelConfig(0.4, "iid", 5))
    assert np.array_equal(a, b[:100])


def test_count_exact_is_uniform_over_positions():
    P, trials = 10, 5000
    hits = np.zeros(P)
    for s in range(trials):
        hits += ~survivors_mask(P, ChannelConfig(0.3, "count", s))
    assert np.all(np.abs(hits / trials - 0.3) < 0.03)


def test_config_validation():
    with pytest.raises(ValueError):
        ChannelConfig(1.5)
    with pytest.raises(ValueError):
        ChannelConfig(0.1, "burst")
