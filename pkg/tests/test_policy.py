import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from singular_harvest.errors import DomainError, InvalidParameterError
from singular_harvest.model import ConstantPrice, GeneralPrice, PowerHalf
from singular_harvest.policy import (
    Barrier,
    Chattering,
    NoHarvest,
    Policy,
    TakeAll,
    chattering_lump_value,
    chattering_riemann_sum,
    initial_events,
    policy_events,
)


@pytest.mark.parametrize("bad", [0, -3, 2.5])
def test_chattering_rejects_bad_m(bad):
    with pytest.raises(InvalidParameterError):
        Chattering(bad)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_barrier_rejects_bad_level(bad):
    with pytest.raises(InvalidParameterError):
        Barrier(bad)


def test_chattering_rejects_negative_span():
    with pytest.raises(InvalidParameterError):
        Chattering(10, eta=-0.1)


def test_policy_encode_and_label():
    pol = Policy([NoHarvest(), TakeAll(), Chattering(5, 0.2), Barrier(1.5)])
    codes, params = pol.encode()
    assert codes.tolist() == [0, 1, 2, 3]
    assert params.shape == (4, 2)
    assert params[2].tolist() == [5.0, 0.2] and params[3, 0] == 1.5
    assert pol.label == "NoHarvest+TakeAll+Chattering+Barrier"
    assert len(Policy.uniform(TakeAll(), 3)) == 3
    with pytest.raises(InvalidParameterError):
        Policy(["take_all"])


def test_lump_value_closed_forms():
    assert chattering_lump_value(PowerHalf(1.5), 4.0, 1.0) == pytest.approx(3.0, rel=1e-15)
    assert chattering_lump_value(ConstantPrice(2.0), 3.0, 0.5) == 5.0
    assert chattering_lump_value(PowerHalf(1.0), 2.0, 2.0) == 0.0
    gen = GeneralPrice(lambda v: 1.5 * v**-0.5)
    assert chattering_lump_value(gen, 4.0, 1.0) == pytest.approx(3.0, rel=1e-9)
    with pytest.raises(DomainError):
        chattering_lump_value(PowerHalf(1.0), 1.0, 2.0)


def test_instantaneous_chattering_takes_equal_lumps():
    ev = initial_events(Chattering(8), 4.0, 0.5)
    assert len(ev) == 8
    assert all(t == 0.5 for t, _ in ev)
    assert np.allclose([a for _, a in ev], 0.5, rtol=1e-14)
    assert math.fsum(a for _, a in ev) == pytest.approx(4.0, rel=1e-15)


def test_initial_events_other_strategies():
    assert initial_events(TakeAll(), 2.0, 0.0) == [(0.0, 2.0)]
    assert initial_events(Barrier(1.5), 2.0, 0.0) == [(0.0, 0.5)]
    assert initial_events(Barrier(3.0), 2.0, 0.0) == []
    assert initial_events(NoHarvest(), 2.0, 0.0) == []
    assert initial_events(Chattering(4, eta=1.0), 2.0, 0.0) == []


def test_spread_chattering_schedule():
    strat = Chattering(4, eta=1.0)
    ev = policy_events(strat, 2.0, 0.0, 0.6, 0.0)
    assert [t for t, _ in ev] == pytest.approx([0.25, 0.5])
    assert ev[0][1] == pytest.approx(0.5) and ev[1][1] == pytest.approx(0.5)
    rest = policy_events(strat, 1.0, 0.6, 0.6, 0.0, lumps_done=2)
    assert [t for t, _ in rest] == pytest.approx([0.75, 1.0])
    assert math.fsum(a for _, a in rest) == pytest.approx(1.0)
    assert policy_events(strat, 1.0, 1.2, 0.6, 0.0, lumps_done=4) == []


def test_barrier_events_harvest_excess_only():
    assert policy_events(Barrier(1.0), 1.3, 0.0, 0.1, 0.0) == [(0.1, pytest.approx(0.3))]
    assert policy_events(Barrier(1.0), 0.9, 0.0, 0.1, 0.0) == []


@given(theta=st.floats(0.1, 10), x=st.floats(1e-3, 1e3), m=st.integers(1, 2000))
def test_riemann_sum_below_integral(theta, x, m):
    # Left-point prices sit at the larger stock, where the price is lower.
    r = chattering_riemann_sum(theta, x, m)
    full = 2 * theta * math.sqrt(x)
    assert 0 < r <= full * (1 + 1e-12)
    assert chattering_riemann_sum(theta, x, 2 * m) >= r * (1 - 1e-12)


def test_riemann_sum_converges():
    gaps = [2 - chattering_riemann_sum(1.0, 1.0, m) for m in (100, 400, 1600, 10_000)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    # The last lump dominates the error: roughly (2 - 1) * m^(-1/2).
    assert gaps[-1] < 1.5e-2
    assert gaps[-1] == pytest.approx(gaps[2] * math.sqrt(1600 / 10_000), rel=0.1)
