import io
import json

import numpy as np
import pytest

from lossnet import network
from lossnet.distributions import erlang2, exponential, hyper2
from lossnet.errors import InvalidHorizon, SimulationInvariantError
from lossnet.loss_core import erlang_b
from lossnet.network import Level, Stream, UnitModel
from lossnet.simulator import Pool, RoutingPolicy, default_policy, place, pool_occupancy, simulate_unit

L32 = default_policy(Level.L32)
# (stream, pool) -> occupancy coordinate, written out independently of the simulator
COORD = {(1, "NICU"): 0, (1, "SCBU"): 1, (2, "SCBU"): 2, (2, "NICU"): 3, (2, "TC"): 4}


def test_nicu_overflows_to_scbu():
    occ = [2, 0, 0, 0, 0]
    assert place(1, occ, L32, (2, 3, 1)) == 1
    assert occ == [2, 1, 0, 0, 0]


def test_scbu_overflows_to_nicu_then_tc():
    occ = [0, 0, 3, 0, 0]
    assert place(2, occ, L32, (1, 3, 1)) == 3
    assert place(2, occ, L32, (1, 3, 1)) == 4
    assert occ == [0, 0, 3, 1, 1]


def test_everything_full_rejects_without_change():
    occ = [1, 0, 3, 0, 1]
    assert place(2, occ, L32, (1, 3, 1)) is None
    assert occ == [1, 0, 3, 0, 1]


def test_stream1_never_uses_tc():
    occ = [2, 0, 3, 0, 0]
    assert place(1, occ, L32, (2, 3, 4)) is None
    with pytest.raises(ValueError):
        RoutingPolicy(Level.L32, ((Pool.NICU, Pool.TC), (Pool.SCBU,)))


def test_policy_must_start_at_home():
    with pytest.raises(ValueError):
        RoutingPolicy.from_names(Level.L32, (("SCBU", "NICU"), ("SCBU",)))
    assert RoutingPolicy.from_names(Level.L32, (("nicu",), ("scbu", "tc"))).describe() == (
        "stream 1: NICU -> reject; stream 2: SCBU -> TC -> reject"
    )


def test_pool_occupancy():
    assert pool_occupancy([1, 2, 3, 4, 5]) == (5, 5, 5)


def small_l32():
    return UnitModel("small", Level.L32, (2, 3, 1),
                     [Stream(exponential(1.0), exponential(2.0)), Stream(exponential(0.8), exponential(2.5))])


def test_same_seed_same_result():
    a = simulate_unit(small_l32(), horizon=2000, warmup=100, reps=3, seed=5)
    b = simulate_unit(small_l32(), horizon=2000, warmup=100, reps=3, seed=5)
    c = simulate_unit(small_l32(), horizon=2000, warmup=100, reps=3, seed=6)
    assert a == b
    assert a != c


def test_counts_reconcile():
    res = simulate_unit(small_l32(), horizon=2000, warmup=100, reps=4, seed=1, debug=True)
    assert np.array_equal(res.arrivals, res.admitted + res.overflowed + res.rejected)
    assert res.rep_rejection.shape == (4, 2)


@pytest.mark.parametrize("arrival", [exponential(1.0), erlang2(1.0), hyper2(1.0, 3.0)])
def test_debug_mode_holds_for_all_families(arrival):
    unit = UnitModel("u", Level.L32, (2, 2, 1), [Stream(arrival, hyper2(2.0, 2.0)), Stream(arrival, erlang2(2.5))])
    simulate_unit(unit, horizon=1500, warmup=50, reps=2, seed=3, debug=True)


def test_zero_arrivals_flagged():
    unit = UnitModel("quiet", Level.L1, (3, 0, 0), [Stream(exponential(1e9), exponential(1.0))])
    res = simulate_unit(unit, horizon=1000, warmup=10, reps=2, seed=0)
    assert res.zero_arrivals.tolist() == [True]
    assert res.rejection.tolist() == [0.0]


@pytest.mark.parametrize("horizon, warmup", [(100, 100), (100, 200), (float("inf"), 0), (100, -1)])
def test_invalid_horizon(horizon, warmup):
    with pytest.raises(InvalidHorizon):
        simulate_unit(small_l32(), horizon=horizon, warmup=warmup, reps=1)


def test_single_rep_has_infinite_half_width():
    res = simulate_unit(small_l32(), horizon=500, warmup=10, reps=1)
    assert np.all(np.isinf(res.rejection_half_width))


def test_event_log_replays_with_place():
    log = io.StringIO()
    unit = small_l32()
    simulate_unit(unit, horizon=300, warmup=10, reps=2, seed=9, event_log=log)
    events = [json.loads(line) for line in log.getvalue().splitlines()]
    assert {e["rep"] for e in events} == {0, 1}
    occ, rep, last = None, None, -1.0
    for e in events:
        if e["rep"] != rep:
            occ, rep, last = [0] * 5, e["rep"], -1.0
        assert e["time"] >= last
        last = e["time"]
        if e["event"] == "arrival":
            k = place(e["stream"], occ, L32, unit.cots)
            expected = "reject" if k is None else [p for (s, p), c in COORD.items() if c == k][0]
            assert e["placement"] == expected
        else:
            occ[COORD[(e["stream"], e["placement"])]] -= 1
        assert e["occupancy"] == occ


def test_conservation_violation_is_detected(monkeypatch):
    from lossnet import simulator

    def broken(occ, busy, cots, t):
        raise SimulationInvariantError("forced")

    monkeypatch.setattr(simulator, "_check_state", broken)
    with pytest.raises(SimulationInvariantError):
        simulate_unit(small_l32(), horizon=100, warmup=1, reps=1, debug=True)


def test_level1_agrees_with_erlang_b(units):
    unit = units["Chase Farm"]
    res = simulate_unit(unit, horizon=20_000, warmup=500, reps=10, seed=4)
    exact = erlang_b(10, 8.03 / 1.05)
    assert abs(res.rejection[0] - exact) <= 3 * res.rejection_half_width[0]
    assert res.rejection_half_width[0] < 0.01


def test_level1_itu_agrees_with_marginals(units):
    unit = units["Royal Free"]
    res = simulate_unit(unit, horizon=20_000, warmup=500, reps=10, seed=4)
    exact = network.evaluate(unit).rejection
    assert np.all(np.abs(res.rejection - exact) <= 3 * res.rejection_half_width)
    assert res.overflowed.tolist() == [0, 0]


def test_warmup_change_is_within_noise(units):
    unit = units["Chase Farm"]
    a = simulate_unit(unit, horizon=20_000, warmup=500, reps=10, seed=8)
    b = simulate_unit(unit, horizon=20_000, warmup=1000, reps=10, seed=8)
    assert abs(a.rejection[0] - b.rejection[0]) < a.rejection_half_width[0] + b.rejection_half_width[0]


def test_erlang_los_does_not_change_markov_arrival_answer():
    # Loss systems with Poisson arrivals are insensitive to the LOS law.
    m = UnitModel("m", Level.L1, (4, 0, 0), [Stream(exponential(1.0), exponential(3.0))])
    e = UnitModel("e", Level.L1, (4, 0, 0), [Stream(exponential(1.0), erlang2(3.0))])
    rm = simulate_unit(m, horizon=30_000, warmup=200, reps=8, seed=2)
    re = simulate_unit(e, horizon=30_000, warmup=200, reps=8, seed=2)
    exact = erlang_b(4, 3.0)
    for r in (rm, re):
        assert abs(r.rejection[0] - exact) <= 3 * r.rejection_half_width[0]
