import csv
import io
import itertools

import pytest
from scipy.stats import poisson

from lossnet import network
from lossnet.distributions import Family, exponential
from lossnet.errors import TargetUnreachable, UndefinedApe
from lossnet.network import Level, Stream, UnitModel
from lossnet.planner import (
    STANDARD_SCENARIOS,
    Scenario,
    apply_scenario,
    ape,
    build_report,
    cot_header,
    min_cots,
    render_report,
    reported_ape,
)


def erlang_b_scan(a, target, start=1):
    c = start
    while poisson.pmf(c, a) / poisson.cdf(c, a) > target:
        c += 1
    return c


@pytest.mark.parametrize(
    "observed, estimated, expected",
    [(0.1895, 0.1962, 3.54), (0.1332, 0.1652, 24.02), (0.5, 0.5, 0.0), (0.2, 0.1, 50.0)],
)
def test_ape(observed, estimated, expected):
    assert ape(observed, estimated) == expected


def test_ape_is_not_symmetric():
    assert ape(0.2, 0.1) != ape(0.1, 0.2)


def test_ape_undefined_for_zero():
    with pytest.raises(UndefinedApe):
        ape(0.0, 0.1)


def test_reported_ape_suppression():
    assert reported_ape(0.0216, 0.0007) == "*"
    assert reported_ape(0.0, 0.0) == "*"
    assert reported_ape(0.06, 0.01) == ape(0.06, 0.01)
    assert reported_ape(None, 0.3) is None


def test_chase_farm_plan_matches_erlang_scan(units):
    plan = min_cots(units["Chase Farm"], 0.05)
    assert plan.cots == (12, 0, 0)
    assert plan.cots[0] == erlang_b_scan(8.03 / 1.05, 0.05)
    assert plan.achieved[0] == pytest.approx(0.0419, abs=5e-5)


def test_royal_free_plan_matches_erlang_scan(units):
    plan = min_cots(units["Royal Free"], 0.05)
    assert plan.cots[:2] == (erlang_b_scan(2.21 / 2.77, 0.05, 2), erlang_b_scan(9.99 / 0.91, 0.05, 12))


def test_loose_target_keeps_current_cots(units):
    for unit in units.values():
        assert min_cots(unit, 1.0).cots == unit.cots


def test_level32_plan_is_minimal_by_exhaustion():
    unit = UnitModel("u", Level.L32, (1, 1, 0),
                     [Stream(exponential(1.0), exponential(1.5)), Stream(exponential(1.0), exponential(2.0))])
    bounds = (6, 6, 4)
    plan = min_cots(unit, 0.05, bounds)
    feasible = [
        c for c in itertools.product(range(1, 7), range(1, 7), range(0, 5))
        if max(network.evaluate(unit.with_cots(c)).rejection) <= 0.05
    ]
    best = min(sum(c) for c in feasible)
    assert sum(plan.cots) == best
    assert plan.cots == min(c for c in feasible if sum(c) == best)
    assert max(plan.achieved) <= 0.05


def test_unreachable_target():
    unit = UnitModel("u", Level.L1, (1, 0, 0), [Stream(exponential(1.0), exponential(50.0))])
    with pytest.raises(TargetUnreachable):
        min_cots(unit, 0.01, (5, 0, 0))


@pytest.mark.parametrize("target", [0.0, -0.1, 1.5])
def test_bad_target(units, target):
    with pytest.raises(ValueError):
        min_cots(units["Chase Farm"], target)


def test_cot_headers(units):
    assert cot_header(units["UCLH"]) == "17 NICU, 12 SCBU and 8 TC cots"
    assert cot_header(units["Royal Free"]) == "2 ITU and 12 SCBU"
    assert cot_header(units["Chase Farm"]) == "10 SCBU"


def test_scenario_parsing():
    assert Scenario.parse("E2M") == Scenario(Family.ERLANG2, Family.EXPONENTIAL)
    assert Scenario.parse("MH2") == Scenario(Family.EXPONENTIAL, Family.HYPER2)
    assert Scenario.parse("H2/E2/c/0").label == "H2/E2"
    assert [s.label for s in STANDARD_SCENARIOS][:3] == ["M/M", "M/H2", "H2/M"]
    with pytest.raises(ValueError):
        Scenario.parse("XY")


def test_apply_scenario_keeps_means(units):
    unit = apply_scenario(units["UCLH"], Scenario.parse("H2/E2"), 3.0)
    for old, new in zip(units["UCLH"].streams, unit.streams):
        assert new.arrival.mean == old.arrival.mean and new.arrival.scv == 3.0
        assert new.los.mean == old.los.mean and new.los.scv == 0.5


def test_empty_report():
    assert build_report([]) == []
    assert render_report([], "delimited") == "unit,cots,care_level,system,observed,estimated,ape\n"


def test_report_rows_and_rendering(units):
    observed = {"Whittington": (0.0216, 0.0138), "Chase Farm": (0.1078,)}
    rows = build_report([units["Whittington"], units["Chase Farm"]], [Scenario.parse("MM")],
                        observe=lambda u: observed[u.name])
    assert [r.care_level for r in rows] == ["NICU-HDU", "SCBU-TC", "SCBU"]
    assert rows[0].ape == rows[1].ape == "*"
    assert rows[2].ape == ape(0.1078, rows[2].estimated)
    text = render_report(rows)
    assert "Whittington (12 NICU, 16 SCBU and 8 TC cots)" not in text
    assert "Whittington (12 NICU, 16 SCBU and 5 TC cots)" in text
    assert "*APEs are not reported when both probabilities are below 0.05" in text
    parsed = list(csv.DictReader(io.StringIO(render_report(rows, "delimited"))))
    assert parsed[2]["estimated"] == "0.1060"
    assert parsed[2]["observed"] == "0.1078"
    assert parsed[0]["ape"] == "*"


def test_report_without_observations(units):
    rows = build_report([units["Chase Farm"]], STANDARD_SCENARIOS)
    assert len(rows) == 9
    assert all(r.observed is None and r.ape is None for r in rows)
