"""Whole-unit evaluation: level 1, level 1 with ITU, level 3 / level 2.

A level 3/2 unit has three cot pools, NICU-HDU (``c1``), SCBU (``c2``) and
TC (``c3``), and two patient streams. Its state is
``(n1, o12, n2, o21, o23)``: ``n_i`` counts stream ``i`` in its home pool and
``o_ij`` counts stream ``i`` overflowed into pool ``j``. Chain 1 totals
``N1 = n1 + o21`` and chain 2 totals ``N2 = n2 + o12 + o23``; the approximate
weight of a state is the product of the two single-chain weights at those
totals.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from . import loss_core
from .distributions import RenewalDistribution, moments
from .errors import NotMarkovian, StateSpaceTooLarge

__all__ = [
    "Level",
    "Stream",
    "UnitModel",
    "OverflowState",
    "UnitEvaluation",
    "state_count",
    "state_array",
    "enumerate_states",
    "evaluate",
    "evaluate_level1",
    "evaluate_level1_itu",
    "evaluate_level32",
    "markovian_closed_form",
    "level32_state_weights",
    "DEFAULT_STATE_CAP",
]

DEFAULT_STATE_CAP = 10**8


class Level(str, enum.Enum):
    L1 = "L1"
    L1_ITU = "L1_ITU"
    L32 = "L32"

    @property
    def n_streams(self) -> int:
        return 1 if self is Level.L1 else 2

    @property
    def care_labels(self) -> tuple[str, ...]:
        return {
            Level.L1: ("SCBU",),
            Level.L1_ITU: ("ITU", "SCBU"),
            Level.L32: ("NICU-HDU", "SCBU-TC"),
        }[self]


class Stream(NamedTuple):
    arrival: RenewalDistribution
    los: RenewalDistribution


@dataclass(frozen=True)
class UnitModel:
    """One neonatal unit.

    ``cots`` is always ``(c1, c2, c3)``. A level 1 unit uses ``c1`` only, a
    level 1 unit with ITU uses ``c1`` (ITU) and ``c2`` (SCBU), and a level 3/2
    unit uses all three with ``c3`` the TC pool. Stream 1 is NICU-HDU / ITU
    for two-stream units and SCBU for a level 1 unit.
    """

    name: str
    level: Level
    cots: tuple[int, int, int]
    streams: tuple[Stream, ...]

    def __post_init__(self):
        level = Level(self.level)
        object.__setattr__(self, "level", level)
        cots = tuple(int(c) for c in self.cots)
        if len(cots) != 3 or any(c < 0 for c in cots):
            raise ValueError(f"{self.name}: cots must be three non-negative integers, got {self.cots}")
        object.__setattr__(self, "cots", cots)
        object.__setattr__(self, "streams", tuple(Stream(*s) for s in self.streams))
        if len(self.streams) != level.n_streams:
            raise ValueError(f"{self.name}: level {level.value} needs {level.n_streams} stream(s)")
        c1, c2, c3 = cots
        if c1 < 1:
            raise ValueError(f"{self.name}: c1 must be at least 1")
        if level is Level.L1 and (c2 or c3):
            raise ValueError(f"{self.name}: level 1 unit uses c1 only")
        if level is Level.L1_ITU and (c2 < 1 or c3):
            raise ValueError(f"{self.name}: level 1 unit with ITU needs c2 >= 1 and c3 = 0")
        if level is Level.L32 and c2 < 1:
            raise ValueError(f"{self.name}: level 3/2 unit needs c2 >= 1")

    def with_cots(self, cots) -> "UnitModel":
        return UnitModel(self.name, self.level, tuple(cots), self.streams)

    @property
    def is_markovian(self) -> bool:
        return all(s.arrival.is_exponential and s.los.is_exponential for s in self.streams)

    @property
    def offered_loads(self) -> tuple[float, ...]:
        return tuple(moments(s.los).mean / moments(s.arrival).mean for s in self.streams)


class OverflowState(NamedTuple):
    n1: int
    o12: int
    n2: int
    o21: int
    o23: int


@dataclass(frozen=True)
class UnitEvaluation:
    """Per-care-level probabilities for one unit.

    ``overflow`` and ``state_count`` are only set for level 3/2 units.
    """

    name: str
    level: Level
    rejection: tuple[float, ...]
    overflow: tuple[float, ...] | None = None
    state_count: int | None = None
    extra: dict = field(default_factory=dict, compare=False)


def _triangle(c: int) -> int:
    return (c + 1) * (c + 2) // 2


def state_count(c1: int, c2: int, c3: int) -> int:
    """``|S|``: pairs summing to at most ``c`` number ``(c+1)(c+2)/2``."""
    return _triangle(c1) * _triangle(c2) * (c3 + 1)


def _pairs(c: int) -> np.ndarray:
    """All ``(a, b)`` with ``a + b <= c`` in lexicographic order."""
    a, b = np.meshgrid(np.arange(c + 1), np.arange(c + 1), indexing="ij")
    keep = (a + b) <= c
    return np.column_stack((a[keep], b[keep]))


def _state_slices(c1: int, c2: int, c3: int):
    """Yield S one ``n1`` value at a time, each slice in lexicographic order."""
    o12_n2 = _pairs(c2)
    for a in range(c1 + 1):
        # meshgrid "ij" makes o23 vary fastest, then o21, then (o12, n2)
        g_pair, g_o21, g_o23 = (
            g.ravel()
            for g in np.meshgrid(np.arange(len(o12_n2)), np.arange(c1 - a + 1), np.arange(c3 + 1), indexing="ij")
        )
        yield np.column_stack((np.full(g_pair.size, a), o12_n2[g_pair, 0], o12_n2[g_pair, 1], g_o21, g_o23))


def state_array(c1: int, c2: int, c3: int) -> np.ndarray:
    """The state space S as an ``(|S|, 5)`` integer array.

    Columns are ``n1, o12, n2, o21, o23``; rows are in lexicographic order.
    """
    if min(c1, c2, c3) < 0:
        raise ValueError("cot counts must be non-negative")
    return np.concatenate(list(_state_slices(c1, c2, c3))).astype(np.int64)


def enumerate_states(c1: int, c2: int, c3: int) -> list[OverflowState]:
    return [OverflowState(*map(int, row)) for row in state_array(c1, c2, c3)]


def _set_masks(states: np.ndarray, c1: int, c2: int, c3: int) -> dict[str, np.ndarray]:
    n1, o12, n2, o21, o23 = states.T
    nicu = n1 + o21
    scbu = o12 + n2
    t1 = (nicu == c1) & (scbu == c2)
    t2 = t1 & (o23 == c3)
    t1_star = (n1 == c1) & (scbu < c2)
    t2_star = ((scbu == c2) & (nicu < c1)) | ((scbu == c2) & (nicu == c1) & (o23 < c3))
    return {
        "T1": t1,
        "T2": t2,
        "O1": t1_star & ~t1,
        "O2": t2_star & ~t2,
    }


def _joint_sums(c1, c2, c3, log_w1, log_w2, cap):
    """Sum a chain-product weight over S and its rejection/overflow subsets.

    ``log_w1[N1]`` and ``log_w2[N2]`` are the per-chain log weights. The state
    space is visited one ``n1`` slice at a time and each subset total is
    accumulated with ``math.fsum`` so the result does not depend on slicing.
    """
    count = state_count(c1, c2, c3)
    if count > cap:
        raise StateSpaceTooLarge(f"|S| = {count} exceeds cap {cap} for cots ({c1}, {c2}, {c3})")
    w1 = np.exp(log_w1 - log_w1.max())
    w2 = np.exp(log_w2 - log_w2.max())
    parts = {"S": [], "T1": [], "T2": [], "O1": [], "O2": []}
    for states in _state_slices(c1, c2, c3):
        big_n1 = states[:, 0] + states[:, 3]
        big_n2 = states[:, 1] + states[:, 2] + states[:, 4]
        w = w1[big_n1] * w2[big_n2]
        parts["S"].append(w)
        for key, mask in _set_masks(states, c1, c2, c3).items():
            parts[key].append(w[mask])
    return {k: math.fsum(np.concatenate(v)) for k, v in parts.items()}, count


def _level32_result(unit, sums, count, method):
    z = sums["S"]
    return UnitEvaluation(
        unit.name,
        unit.level,
        rejection=(sums["T1"] / z, sums["T2"] / z),
        overflow=(sums["O1"] / z, sums["O2"] / z),
        state_count=count,
        extra={"method": method},
    )


def _chain_log_weights(stream: Stream, c: int) -> np.ndarray:
    """Per-chain log of ``prod lambda_i/mu_{i+1} * phi_n`` for ``n = 0..c``."""
    coeffs = loss_core.build_coefficients(moments(stream.arrival), moments(stream.los), c)
    return loss_core.log_product_weights(coeffs) + np.log(coeffs.phi_tilde)


def _require(unit: UnitModel, level: Level):
    if unit.level is not level:
        raise ValueError(f"{unit.name}: expected a {level.value} unit, got {unit.level.value}")


def evaluate_level1(unit: UnitModel) -> UnitEvaluation:
    _require(unit, Level.L1)
    s = unit.streams[0]
    r = loss_core.rejection_single(s.arrival, s.los, unit.cots[0])
    return UnitEvaluation(unit.name, unit.level, rejection=(r,))


def evaluate_level1_itu(unit: UnitModel) -> UnitEvaluation:
    """Two independent chains, ITU and SCBU, with no overflow between them.

    Rejection is summed over the joint ``(n1, n2)`` grid; because the weight
    factorises, it must equal each chain's own rejection probability.
    """
    _require(unit, Level.L1_ITU)
    c1, c2, _ = unit.cots
    w1 = np.exp(_chain_log_weights(unit.streams[0], c1))
    w2 = np.exp(_chain_log_weights(unit.streams[1], c2))
    w1 /= w1.max()
    w2 /= w2.max()
    joint = np.outer(w1, w2)
    z = math.fsum(joint.ravel())
    r1 = math.fsum(joint[c1, :]) / z
    r2 = math.fsum(joint[:, c2]) / z
    marginal = tuple(loss_core.rejection_single(s.arrival, s.los, c) for s, c in zip(unit.streams, (c1, c2)))
    if not np.allclose((r1, r2), marginal, rtol=0, atol=1e-12):
        raise AssertionError(f"{unit.name}: joint rejection {(r1, r2)} != marginal {marginal}")
    return UnitEvaluation(unit.name, unit.level, rejection=(r1, r2))


def evaluate_level32(unit: UnitModel, cap: int = DEFAULT_STATE_CAP) -> UnitEvaluation:
    """Two-moment rejection and overflow probabilities of a level 3/2 unit.

    Chain 1 coefficients are built for ``c1`` cots and chain 2 coefficients
    for ``c2 + c3`` cots, the largest value ``N2`` can take.
    """
    _require(unit, Level.L32)
    c1, c2, c3 = unit.cots
    log_w1 = _chain_log_weights(unit.streams[0], c1)
    log_w2 = _chain_log_weights(unit.streams[1], c2 + c3)
    sums, count = _joint_sums(c1, c2, c3, log_w1, log_w2, cap)
    return _level32_result(unit, sums, count, "two-moment")


def level32_state_weights(unit: UnitModel, cap: int = DEFAULT_STATE_CAP) -> tuple[np.ndarray, np.ndarray]:
    """States of S and their normalised two-moment weights, for inspection."""
    _require(unit, Level.L32)
    c1, c2, c3 = unit.cots
    if state_count(c1, c2, c3) > cap:
        raise StateSpaceTooLarge(f"|S| = {state_count(c1, c2, c3)} exceeds cap {cap}")
    log_w1 = _chain_log_weights(unit.streams[0], c1)
    log_w2 = _chain_log_weights(unit.streams[1], c2 + c3)
    states = state_array(c1, c2, c3)
    w = np.exp(log_w1[states[:, 0] + states[:, 3]] - log_w1.max()) * np.exp(
        log_w2[states[:, 1] + states[:, 2] + states[:, 4]] - log_w2.max()
    )
    return states, w / math.fsum(w)


def markovian_closed_form(unit: UnitModel, cap: int = DEFAULT_STATE_CAP) -> UnitEvaluation:
    """Exponential-only level 3/2 evaluation with weights ``a1^N1 a2^N2 / (N1! N2!)``."""
    _require(unit, Level.L32)
    if not unit.is_markovian:
        raise NotMarkovian(f"{unit.name}: closed form needs exponential arrivals and LOS in every stream")
    c1, c2, c3 = unit.cots
    a1, a2 = unit.offered_loads

    def log_poisson(a, c):
        n = np.arange(c + 1)
        if a == 0.0:
            return np.where(n == 0, 0.0, -np.inf)
        return n * math.log(a) - gammaln(n + 1)

    sums, count = _joint_sums(c1, c2, c3, log_poisson(a1, c1), log_poisson(a2, c2 + c3), cap)
    return _level32_result(unit, sums, count, "markovian")


def evaluate(unit: UnitModel, cap: int = DEFAULT_STATE_CAP) -> UnitEvaluation:
    """Dispatch on ``unit.level``."""
    if unit.level is Level.L1:
        return evaluate_level1(unit)
    if unit.level is Level.L1_ITU:
        return evaluate_level1_itu(unit)
    return evaluate_level32(unit, cap)
