"""Cot-count search against a rejection target, APE, and comparison reports."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from . import network
from .loss_core import rejection_single
from .distributions import DEFAULT_H2_SCV, Family, from_mean_scv
from .errors import TargetUnreachable, UndefinedApe
from .network import Level, Stream, UnitModel

__all__ = [
    "APE_THRESHOLD",
    "SEARCH_MARGIN",
    "ComparisonRow",
    "CapacityPlan",
    "ape",
    "reported_ape",
    "min_cots",
    "cot_header",
    "Scenario",
    "STANDARD_SCENARIOS",
    "apply_scenario",
    "build_report",
    "render_report",
]

APE_THRESHOLD = 0.05
SEARCH_MARGIN = 30
SUPPRESSED = "*"


def ape(observed: float, estimated: float) -> float:
    """Absolute percentage error ``100 |observed - estimated| / observed``, to 2 decimals.

    Not symmetric: the observed value is the reference.
    """
    if observed == 0:
        raise UndefinedApe("APE is undefined for an observed probability of 0")
    return round(100.0 * abs(observed - estimated) / observed, 2)


def reported_ape(observed: float | None, estimated: float, threshold: float = APE_THRESHOLD):
    """APE as it appears in a report.

    Returns ``None`` without an observed value and the suppression marker
    when both values are below ``threshold``.
    """
    if observed is None:
        return None
    if max(observed, estimated) < threshold:
        return SUPPRESSED
    return ape(observed, estimated)


@dataclass(frozen=True)
class ComparisonRow:
    unit: str
    header: str
    care_level: str
    system: str
    observed: float | None
    estimated: float
    ape: float | str | None


@dataclass(frozen=True)
class CapacityPlan:
    unit: str
    level: Level
    target: float
    current: tuple[int, int, int]
    cots: tuple[int, int, int]
    achieved: tuple[float, ...]
    strategy: str
    evaluations: int


def _rejections(unit: UnitModel, cots) -> tuple[float, ...]:
    return network.evaluate(unit.with_cots(cots)).rejection


def _default_bounds(unit: UnitModel):
    used = {Level.L1: 1, Level.L1_ITU: 2, Level.L32: 3}[unit.level]
    return tuple(c + SEARCH_MARGIN if i < used else 0 for i, c in enumerate(unit.cots))


def min_cots(unit: UnitModel, target: float = APE_THRESHOLD, bounds: Sequence[int] | None = None) -> CapacityPlan:
    """Smallest cot counts, no fewer than the current ones, meeting ``target``.

    Every care level must have rejection probability ``<= target``. Cots are
    only ever added, so the search starts from ``unit.cots``; ``bounds`` are
    per-pool upper limits (default: current + 30 per used pool).

    Level 1 units scan ``c1`` upward. A level 1 unit with ITU has independent
    chains, so each count is scanned separately. A level 3/2 unit is searched
    by increasing total cots; within a total, candidates are taken with the
    smallest ``c1``, then ``c2``, then ``c3``, and the first feasible one wins.

    Raises
    ------
    TargetUnreachable
        If no candidate within ``bounds`` meets the target.
    """
    if not 0 < target <= 1:
        raise ValueError(f"target must lie in (0, 1], got {target}")
    current = unit.cots
    bounds = tuple(_default_bounds(unit) if bounds is None else bounds)
    if len(bounds) != 3 or any(b < c for b, c in zip(bounds, current)):
        raise ValueError(f"bounds {bounds} must be at least the current cots {current}")
    evaluations = 0

    def meets(cots):
        nonlocal evaluations
        evaluations += 1
        r = _rejections(unit, cots)
        return all(x <= target for x in r), r

    def fail():
        return TargetUnreachable(f"{unit.name}: no cot counts within {bounds} reach rejection <= {target}")

    if unit.level is Level.L1_ITU:
        chosen, achieved = [], []
        for stream, lo, hi in zip(unit.streams, current[:2], bounds[:2]):
            for c in range(lo, hi + 1):
                evaluations += 1
                r = rejection_single(stream.arrival, stream.los, c)
                if r <= target:
                    chosen.append(c)
                    achieved.append(r)
                    break
            else:
                raise fail()
        cots = (chosen[0], chosen[1], 0)
        strategy = "independent upward scan per chain"
        return CapacityPlan(unit.name, unit.level, target, current, cots, tuple(achieved), strategy, evaluations)

    if unit.level is Level.L1:
        for c in range(current[0], bounds[0] + 1):
            ok, r = meets((c, 0, 0))
            if ok:
                return CapacityPlan(unit.name, unit.level, target, current, (c, 0, 0), r,
                                    "upward scan of c1", evaluations)
        raise fail()

    lo, hi = current, bounds
    for total in range(sum(lo), sum(hi) + 1):
        for c1 in range(lo[0], hi[0] + 1):
            for c2 in range(lo[1], hi[1] + 1):
                c3 = total - c1 - c2
                if c3 < lo[2]:
                    break
                if c3 > hi[2]:
                    continue
                ok, r = meets((c1, c2, c3))
                if ok:
                    return CapacityPlan(unit.name, unit.level, target, current, (c1, c2, c3), r,
                                        "minimum total cots, ties to smallest c1 then c2 then c3", evaluations)
    raise fail()


def cot_header(unit: UnitModel) -> str:
    """Cot-count line in the style ``17 NICU, 12 SCBU and 8 TC cots``."""
    c1, c2, c3 = unit.cots
    if unit.level is Level.L1:
        return f"{c1} SCBU"
    if unit.level is Level.L1_ITU:
        return f"{c1} ITU and {c2} SCBU"
    return f"{c1} NICU, {c2} SCBU and {c3} TC cots"


@dataclass(frozen=True)
class Scenario:
    """An (arrival family, LOS family) pair applied to every stream of a unit."""

    arrival: Family
    los: Family

    @property
    def label(self) -> str:
        return f"{self.arrival.value}/{self.los.value}"

    @classmethod
    def parse(cls, text: str) -> "Scenario":
        """Accepts ``"E2/M"``, ``"E2M"``, ``"MH2"`` and similar."""
        t = text.strip().upper().replace("/C/0", "")
        if "/" in t:
            a, _, b = t.partition("/")
            return cls(Family.parse(a), Family.parse(b))
        for cut in (1, 2):
            try:
                return cls(Family.parse(t[:cut]), Family.parse(t[cut:]))
            except ValueError:
                continue
        raise ValueError(f"cannot parse scenario {text!r}")


STANDARD_SCENARIOS = tuple(
    Scenario.parse(x) for x in ("M/M", "M/H2", "H2/M", "M/E2", "E2/M", "H2/H2", "H2/E2", "E2/H2", "E2/E2")
)


def _refit(d, family: Family, h2_scv: float):
    scv = {Family.EXPONENTIAL: 1.0, Family.ERLANG2: 0.5, Family.HYPER2: h2_scv}[family]
    return from_mean_scv(d.mean, scv, family)


def apply_scenario(unit: UnitModel, scenario: Scenario, h2_scv: float = DEFAULT_H2_SCV) -> UnitModel:
    """Same means as ``unit``, families replaced by ``scenario``."""
    streams = [
        Stream(_refit(s.arrival, scenario.arrival, h2_scv), _refit(s.los, scenario.los, h2_scv))
        for s in unit.streams
    ]
    return UnitModel(unit.name, unit.level, unit.cots, streams)


Observer = Callable[[UnitModel], Sequence[float]]


def build_report(units: Iterable[UnitModel], scenarios: Sequence[Scenario] = STANDARD_SCENARIOS,
                 observe: Observer | None = None, h2_scv: float = DEFAULT_H2_SCV,
                 threshold: float = APE_THRESHOLD) -> list[ComparisonRow]:
    """Comparison rows grouped by unit, then scenario, then care level.

    ``observe`` maps a scenario-adjusted unit to per-care-level observed
    rejection probabilities (typically a simulation); without it the observed
    and APE cells stay empty.
    """
    rows = []
    for base in units:
        for scenario in scenarios:
            unit = apply_scenario(base, scenario, h2_scv)
            estimated = network.evaluate(unit).rejection
            observed = observe(unit) if observe is not None else [None] * len(estimated)
            for label, obs, est in zip(unit.level.care_labels, observed, estimated):
                obs = None if obs is None else float(obs)
                rows.append(ComparisonRow(
                    unit=unit.name,
                    header=cot_header(unit),
                    care_level=label,
                    system=scenario.label,
                    observed=obs,
                    estimated=float(est),
                    ape=reported_ape(obs, float(est), threshold),
                ))
    return rows


_COLUMNS = ("unit", "cots", "care_level", "system", "observed", "estimated", "ape")


def _cells(row: ComparisonRow) -> list[str]:
    obs = "" if row.observed is None else f"{row.observed:.4f}"
    if row.ape is None:
        ape_cell = ""
    elif isinstance(row.ape, str):
        ape_cell = row.ape
    else:
        ape_cell = f"{row.ape:.2f}"
    return [row.unit, row.header, row.care_level, row.system, obs, f"{row.estimated:.4f}", ape_cell]


def render_report(rows: Sequence[ComparisonRow], fmt: str = "text", threshold: float = APE_THRESHOLD) -> str:
    """Render rows as an aligned text table or as CSV (``fmt="delimited"``)."""
    if fmt == "delimited":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_COLUMNS)
        writer.writerows(_cells(r) for r in rows)
        return buf.getvalue()
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")

    head = ["", "System notation", "'Observed' rej. prob.", "Est. rej. prob.", "Abs. per. err."]
    body = []
    for (name, header), group in itertools.groupby(rows, key=lambda r: (r.unit, r.header)):
        body.append((f"{name} ({header})", "", "", "", ""))
        previous = None
        for r in group:
            cells = _cells(r)
            system = r.system if r.system != previous else ""
            previous = r.system
            body.append(("  " + r.care_level, system, cells[4], cells[5], cells[6]))
    widths = [max(len(x[i]) for x in [head, *body]) for i in range(len(head))]

    def line(cols):
        left = cols[0].ljust(widths[0])
        rest = [c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(cols[1:], widths[1:]))]
        return "  ".join([left, *rest]).rstrip()

    out = [line(head), "-" * len(line(head))]
    out.extend(line(b) for b in body)
    if any(r.ape == SUPPRESSED for r in rows):
        out.append(f"{SUPPRESSED}APEs are not reported when both probabilities are below {threshold:g}")
    return "\n".join(out) + "\n"
