"""Renewal inter-event laws: exponential, two-phase Erlang, two-phase
hyper-exponential.

All durations are in days. A distribution is identified by its family, mean
and squared coefficient of variation (scv); phase rates are derived from
those by moment matching.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import IncompatibleScv, NonpositiveMean

__all__ = [
    "Family",
    "RenewalDistribution",
    "MomentSummary",
    "from_mean_scv",
    "moments",
    "phase_moments",
    "sample",
    "exponential",
    "erlang2",
    "hyper2",
    "DEFAULT_H2_SCV",
]

DEFAULT_H2_SCV = 2.0


class Family(str, enum.Enum):
    EXPONENTIAL = "M"
    ERLANG2 = "E2"
    HYPER2 = "H2"

    @classmethod
    def parse(cls, text: str) -> "Family":
        key = text.strip().upper()
        aliases = {
            "M": cls.EXPONENTIAL,
            "EXP": cls.EXPONENTIAL,
            "EXPONENTIAL": cls.EXPONENTIAL,
            "E2": cls.ERLANG2,
            "ERLANG2": cls.ERLANG2,
            "H2": cls.HYPER2,
            "HYPER2": cls.HYPER2,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown distribution family {text!r}") from None


@dataclass(frozen=True)
class MomentSummary:
    """First two moments of a renewal law plus its stationary-excess mean.

    ``q = (1 + scv) * mean / 2`` is the mean residual life seen at an
    arbitrary time, ``E[X^2] / (2 E[X])``.
    """

    mean: float
    scv: float

    @property
    def q(self) -> float:
        return (1.0 + self.scv) * self.mean / 2.0

    @property
    def rate(self) -> float:
        return 1.0 / self.mean


@dataclass(frozen=True)
class RenewalDistribution:
    """Immutable renewal law identified by family, mean and scv.

    Phase parameters are derived: ``rates`` holds one rate for the
    exponential, the common phase rate for the Erlang-2, and the two branch
    rates for the balanced-means hyper-exponential, whose first branch is
    taken with probability ``branch_prob``. Build instances with
    :func:`from_mean_scv` or the family helpers.
    """

    family: Family
    mean: float
    scv: float

    def __post_init__(self):
        family = Family.parse(self.family) if isinstance(self.family, str) else Family(self.family)
        object.__setattr__(self, "family", family)
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise NonpositiveMean(f"mean must be positive and finite, got {self.mean}")
        if family is Family.EXPONENTIAL and self.scv != 1.0:
            raise IncompatibleScv(f"exponential requires scv = 1, got {self.scv}")
        if family is Family.ERLANG2 and self.scv != 0.5:
            raise IncompatibleScv(f"two-phase Erlang requires scv = 0.5, got {self.scv}")
        if family is Family.HYPER2 and not (self.scv > 1.0 and math.isfinite(self.scv)):
            raise IncompatibleScv(f"hyper-exponential requires scv > 1, got {self.scv}")

    @property
    def branch_prob(self) -> float | None:
        if self.family is not Family.HYPER2:
            return None
        return 0.5 * (1.0 + math.sqrt((self.scv - 1.0) / (self.scv + 1.0)))

    @property
    def rates(self) -> tuple[float, ...]:
        if self.family is Family.EXPONENTIAL:
            return (1.0 / self.mean,)
        if self.family is Family.ERLANG2:
            return (2.0 / self.mean,)
        p = self.branch_prob
        return (2.0 * p / self.mean, 2.0 * (1.0 - p) / self.mean)

    @property
    def is_exponential(self) -> bool:
        return self.family is Family.EXPONENTIAL

    def label(self) -> str:
        return self.family.value


def exponential(mean: float) -> RenewalDistribution:
    return from_mean_scv(mean, 1.0, Family.EXPONENTIAL)


def erlang2(mean: float) -> RenewalDistribution:
    return from_mean_scv(mean, 0.5, Family.ERLANG2)


def hyper2(mean: float, scv: float = DEFAULT_H2_SCV) -> RenewalDistribution:
    return from_mean_scv(mean, scv, Family.HYPER2)


def from_mean_scv(mean: float, scv: float, family: Family | str) -> RenewalDistribution:
    """Distribution of ``family`` with the given mean and scv.

    Exponential needs ``scv == 1`` and Erlang-2 needs ``scv == 0.5``. The
    hyper-exponential uses balanced means (``p/r1 == (1-p)/r2``), which makes
    the pair (mean, scv) determine it uniquely; it needs ``scv > 1``.

    Raises
    ------
    NonpositiveMean
        If ``mean`` is not a positive finite number.
    IncompatibleScv
        If ``scv`` cannot be realised by ``family``.
    """
    return RenewalDistribution(family, float(mean), float(scv))


def moments(d: RenewalDistribution) -> MomentSummary:
    """Mean, scv and stationary-excess mean of ``d``; no sampling."""
    return MomentSummary(d.mean, d.scv)


def phase_moments(d: RenewalDistribution) -> MomentSummary:
    """Mean and scv recomputed from the phase parameters alone."""
    if d.family is Family.EXPONENTIAL:
        return MomentSummary(1.0 / d.rates[0], 1.0)
    if d.family is Family.ERLANG2:
        (r,) = d.rates
        m1 = 2.0 / r
        return MomentSummary(m1, (6.0 / r**2) / m1**2 - 1.0)
    p = d.branch_prob
    r1, r2 = d.rates
    m1 = p / r1 + (1.0 - p) / r2
    m2 = 2.0 * p / r1**2 + 2.0 * (1.0 - p) / r2**2
    return MomentSummary(m1, m2 / m1**2 - 1.0)


def sample(d: RenewalDistribution, rng: np.random.Generator, size=None):
    """Draw from ``d`` using ``rng``.

    Returns a float when ``size`` is None, otherwise an array of that shape.
    The number of underlying generator calls depends only on the family and
    ``size``, so equal seeds give equal sequences.
    """
    if d.family is Family.EXPONENTIAL:
        return rng.exponential(d.mean, size)
    if d.family is Family.ERLANG2:
        return rng.gamma(2.0, d.mean / 2.0, size)
    p = d.branch_prob
    r1, r2 = d.rates
    branch = rng.random(size) < p
    expo = rng.exponential(1.0, size)
    return np.where(branch, expo / r1, expo / r2) if size is not None else float(expo / (r1 if branch else r2))
