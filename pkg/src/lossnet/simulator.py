"""Discrete-event simulation of a single unit with overflow routing.

Each stream has renewal arrivals and i.i.d. lengths of stay. An arriving
neonate takes the first pool in its stream's preference list that has a free
cot, otherwise it is rejected. It keeps that cot for its whole stay. The
occupancy vector is the analytic state ``(n1, o12, n2, o21, o23)``.

Replication ``r`` of a run with master seed ``s`` draws stream ``k``'s
inter-arrival times from ``SeedSequence(s, spawn_key=(r, k, 0))`` and its
lengths of stay from ``SeedSequence(s, spawn_key=(r, k, 1))``; one LOS is
drawn per arrival whether or not it is admitted. Results are therefore a pure
function of ``(unit, policy, horizon, warmup, reps, seed)``.
"""

from __future__ import annotations

import enum
import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .distributions import RenewalDistribution, moments, sample
from .errors import InvalidHorizon, SimulationInvariantError
from .network import Level, UnitModel

__all__ = [
    "Pool",
    "RoutingPolicy",
    "SimulationResult",
    "default_policy",
    "place",
    "pool_occupancy",
    "simulate_unit",
]

DEFAULT_HORIZON = 1e5
DEFAULT_WARMUP = 1e3
DEFAULT_REPS = 30


class Pool(enum.IntEnum):
    """Cot pools by cot-count slot.

    Pool 1 holds ``c1`` cots (NICU-HDU, or the ITU of a level 1 unit with ITU,
    or the only SCBU of a plain level 1 unit), pool 2 holds ``c2`` (SCBU) and
    pool 3 holds ``c3`` (TC).
    """

    NICU = 1
    SCBU = 2
    TC = 3


# (stream, pool) -> index into the occupancy vector (n1, o12, n2, o21, o23)
_COORD = {
    (1, Pool.NICU): 0,
    (1, Pool.SCBU): 1,
    (2, Pool.SCBU): 2,
    (2, Pool.NICU): 3,
    (2, Pool.TC): 4,
}
_HOME = {1: Pool.NICU, 2: Pool.SCBU}
_COORD_POOL = {k: p for (_, p), k in _COORD.items()}


@dataclass(frozen=True)
class RoutingPolicy:
    """Ordered pool preferences per stream; running off the end means reject.

    The first pool of each list must be the stream's home pool. Stream 1 can
    never use TC because the state space has no coordinate for it.
    """

    level: Level
    preferences: tuple[tuple[Pool, ...], ...]

    def __post_init__(self):
        level = Level(self.level)
        object.__setattr__(self, "level", level)
        prefs = tuple(tuple(Pool(p) for p in lst) for lst in self.preferences)
        object.__setattr__(self, "preferences", prefs)
        if len(prefs) != level.n_streams:
            raise ValueError(f"{level.value} policy needs {level.n_streams} preference list(s)")
        allowed = {
            Level.L1: ({Pool.NICU},),
            Level.L1_ITU: ({Pool.NICU}, {Pool.SCBU}),
            Level.L32: ({Pool.NICU, Pool.SCBU}, {Pool.NICU, Pool.SCBU, Pool.TC}),
        }[level]
        for stream, (lst, ok) in enumerate(zip(prefs, allowed), start=1):
            if not lst or lst[0] is not _HOME[stream]:
                raise ValueError(f"stream {stream} must start with its home pool {_HOME[stream].name}")
            if len(set(lst)) != len(lst) or not set(lst) <= ok:
                raise ValueError(f"stream {stream} preferences {[p.name for p in lst]} not allowed for {level.value}")

    @classmethod
    def from_names(cls, level, preferences) -> "RoutingPolicy":
        return cls(level, tuple(tuple(Pool[name.upper()] for name in lst) for lst in preferences))

    def describe(self) -> str:
        return "; ".join(
            f"stream {k}: " + " -> ".join([p.name for p in lst] + ["reject"])
            for k, lst in enumerate(self.preferences, start=1)
        )


def default_policy(level: Level) -> RoutingPolicy:
    level = Level(level)
    if level is Level.L1:
        return RoutingPolicy(level, ((Pool.NICU,),))
    if level is Level.L1_ITU:
        return RoutingPolicy(level, ((Pool.NICU,), (Pool.SCBU,)))
    return RoutingPolicy(level, ((Pool.NICU, Pool.SCBU), (Pool.SCBU, Pool.NICU, Pool.TC)))


def pool_occupancy(occ) -> tuple[int, int, int]:
    """Busy cots per pool from the occupancy vector."""
    return occ[0] + occ[3], occ[1] + occ[2], occ[4]


def place(stream: int, occ: list[int], policy: RoutingPolicy, cots) -> int | None:
    """Admit an arrival of ``stream`` (1 or 2) into the first free pool.

    On success ``occ`` is updated in place and the occupancy coordinate that
    was incremented is returned; on rejection ``None`` is returned and ``occ``
    is untouched.
    """
    busy = pool_occupancy(occ)
    for pool in policy.preferences[stream - 1]:
        if busy[pool - 1] < cots[pool - 1]:
            k = _COORD[(stream, pool)]
            occ[k] += 1
            return k
    return None


@dataclass(frozen=True)
class SimulationResult:
    """Aggregated replications for one unit.

    Count arrays have one entry per stream and are summed over replications,
    counting only arrivals at or after ``warmup``. ``admitted`` means placed
    in the home pool, ``overflowed`` placed elsewhere. The half widths are
    95% Student-t intervals across replications (infinite for one rep).
    """

    unit: str
    level: Level
    policy: str
    reps: int
    seed: int
    horizon: float
    warmup: float
    arrivals: np.ndarray
    admitted: np.ndarray
    overflowed: np.ndarray
    rejected: np.ndarray
    rejection: np.ndarray
    overflow: np.ndarray
    rejection_half_width: np.ndarray
    overflow_half_width: np.ndarray
    rep_rejection: np.ndarray
    rep_overflow: np.ndarray
    zero_arrivals: np.ndarray
    extra: dict = field(default_factory=dict, compare=False)

    def __eq__(self, other):
        if not isinstance(other, SimulationResult):
            return NotImplemented
        for name in self.__dataclass_fields__:
            if name == "extra":
                continue
            a, b = getattr(self, name), getattr(other, name)
            if isinstance(a, np.ndarray):
                if a.shape != b.shape or a.tobytes() != b.tobytes():
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None


def _arrival_times(d: RenewalDistribution, rng: np.random.Generator, horizon: float) -> np.ndarray:
    mean = moments(d).mean
    expected = horizon / mean
    if expected > 1e9:
        raise InvalidHorizon(f"horizon {horizon} would generate about {expected:.3g} arrivals")
    chunk = int(expected + 6.0 * math.sqrt(expected + 1.0)) + 16
    pieces, last = [], 0.0
    while True:
        t = last + np.cumsum(sample(d, rng, chunk))
        pieces.append(t)
        last = float(t[-1])
        if last > horizon:
            break
        chunk = max(chunk // 4, 16)
    times = np.concatenate(pieces)
    return times[times <= horizon]


def _run_replication(unit, policy, horizon, warmup, seed, rep, debug, log):
    n_streams = len(unit.streams)
    times, sids, stays = [], [], []
    for k, stream in enumerate(unit.streams, start=1):
        arr_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep, k, 0)))
        los_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep, k, 1)))
        t = _arrival_times(stream.arrival, arr_rng, horizon)
        times.append(t)
        sids.append(np.full(t.size, k, dtype=np.int64))
        stays.append(sample(stream.los, los_rng, t.size))
    times = np.concatenate(times)
    order = np.argsort(times, kind="stable")
    times = times[order].tolist()
    sids = np.concatenate(sids)[order].tolist()
    stays = np.concatenate(stays)[order].tolist()

    cots = unit.cots
    occ = [0, 0, 0, 0, 0]
    prefs = [[(_COORD[(k, p)], p - 1) for p in lst] for k, lst in enumerate(policy.preferences, start=1)]
    counts = np.zeros((n_streams, 4), dtype=np.int64)  # arrivals, admitted, overflowed, rejected
    departures = []
    n_departed = 0
    n_placed = 0
    busy = [0, 0, 0]
    pool_of = (0, 1, 1, 0, 2)
    heappush, heappop = heapq.heappush, heapq.heappop

    for t, s, stay in zip(times, sids, stays):
        # departures at or before t go first so a freed cot serves a simultaneous arrival
        while departures and departures[0][0] <= t:
            t_dep, k = heappop(departures)
            occ[k] -= 1
            busy[pool_of[k]] -= 1
            n_departed += 1
            if log is not None:
                log.write(_log_line(rep, t_dep, 1 if k in (0, 1) else 2, "departure", k, occ))
        placed = None
        for k, pool in prefs[s - 1]:
            if busy[pool] < cots[pool]:
                occ[k] += 1
                busy[pool] += 1
                placed = k
                break
        if placed is not None:
            heappush(departures, (t + stay, placed))
            n_placed += 1
        if t >= warmup:
            row = counts[s - 1]
            row[0] += 1
            if placed is None:
                row[3] += 1
            elif placed == _COORD[(s, _HOME[s])]:
                row[1] += 1
            else:
                row[2] += 1
        if log is not None:
            log.write(_log_line(rep, t, s, "arrival", placed, occ))
        if debug:
            _check_state(occ, busy, cots, t)
    if debug:
        if n_placed != n_departed + len(departures):
            raise SimulationInvariantError(
                f"rep {rep}: {n_placed} placements but {n_departed} departures + {len(departures)} in system"
            )
        for a, adm, ovf, rej in counts:
            if a != adm + ovf + rej:
                raise SimulationInvariantError(f"rep {rep}: counts do not reconcile")
    return counts


def _check_state(occ, busy, cots, t):
    if any(x < 0 for x in occ) or tuple(busy) != pool_occupancy(occ):
        raise SimulationInvariantError(f"t={t}: inconsistent occupancy {occ}")
    if any(b > c for b, c in zip(busy, cots)):
        raise SimulationInvariantError(f"t={t}: occupancy {occ} exceeds cots {cots}")


def _log_line(rep, t, stream, kind, coord, occ):
    placement = "reject" if coord is None else _COORD_POOL[coord].name
    return json.dumps(
        {"rep": rep, "time": t, "stream": stream, "event": kind, "placement": placement, "occupancy": list(occ)}
    ) + "\n"


def _half_width(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    if n < 2:
        return np.full(x.shape[1], math.inf)
    return stats.t.ppf(0.975, n - 1) * x.std(axis=0, ddof=1) / math.sqrt(n)


def simulate_unit(unit: UnitModel, policy: RoutingPolicy | None = None, horizon: float = DEFAULT_HORIZON,
                  warmup: float = DEFAULT_WARMUP, reps: int = DEFAULT_REPS, seed: int = 0, *,
                  debug: bool = False, event_log=None) -> SimulationResult:
    """Simulate ``reps`` independent replications of ``unit``.

    Parameters
    ----------
    unit : UnitModel
    policy : RoutingPolicy, optional
        Defaults to :func:`default_policy` for the unit's level.
    horizon, warmup : float
        Run length and discarded initial interval, in days.
    reps : int
        Number of replications.
    seed : int
        Master seed.
    debug : bool
        Check capacity and conservation at every event; violations raise
        :class:`SimulationInvariantError`.
    event_log : file-like, optional
        Receives one JSON object per line for every arrival and departure.

    Returns
    -------
    SimulationResult
    """
    if not (math.isfinite(horizon) and horizon > warmup >= 0):
        raise InvalidHorizon(f"need horizon > warmup >= 0, got horizon={horizon}, warmup={warmup}")
    if reps < 1:
        raise ValueError(f"reps must be at least 1, got {reps}")
    policy = default_policy(unit.level) if policy is None else policy
    if policy.level is not unit.level:
        raise ValueError(f"policy for {policy.level.value} given to a {unit.level.value} unit")

    per_rep = np.stack([
        _run_replication(unit, policy, float(horizon), float(warmup), int(seed), r, debug, event_log)
        for r in range(reps)
    ])
    arrivals = per_rep[:, :, 0]
    zero = arrivals == 0
    safe = np.where(zero, 1, arrivals)
    rep_rej = np.where(zero, 0.0, per_rep[:, :, 3] / safe)
    rep_ovf = np.where(zero, 0.0, per_rep[:, :, 2] / safe)
    totals = per_rep.sum(axis=0)
    return SimulationResult(
        unit=unit.name,
        level=unit.level,
        policy=policy.describe(),
        reps=int(reps),
        seed=int(seed),
        horizon=float(horizon),
        warmup=float(warmup),
        arrivals=totals[:, 0],
        admitted=totals[:, 1],
        overflowed=totals[:, 2],
        rejected=totals[:, 3],
        rejection=rep_rej.mean(axis=0),
        overflow=rep_ovf.mean(axis=0),
        rejection_half_width=_half_width(rep_rej),
        overflow_half_width=_half_width(rep_ovf),
        rep_rejection=rep_rej,
        rep_overflow=rep_ovf,
        zero_arrivals=zero.any(axis=0),
    )
