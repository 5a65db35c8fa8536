"""Two-moment approximation of a single GI/G/c/0 loss chain.

The exact steady state of a GI/G/c/0 system has a birth-death product form
whose rates depend on conditional residual means at arrival and discharge
epochs. Replacing those by the time-average residuals ``q_A`` and ``q_L``
gives effective rates

    1/mu_i     = m_L - i (m_A - q_A)                 1 <= i <= c
    1/lambda_i = (i+1) q_A                           0 <= i <= c-2
    1/lambda_i = c m_A                               i  = c-1
    phi_0      = lambda q_A
    phi_i      = lambda [q_A + (m_A - q_A) mu_i / lambda_{i-1}]   1 <= i <= c-1
    phi_c      = lambda [m_A + (m_A - q_A) mu_c / lambda_{c-1}]

The arrival-epoch (= discharge-epoch) distribution is the normalised product
of ``lambda_i / mu_{i+1}``; the time-average weights are that times ``phi_n``.
The ``q_L`` terms cancel, so the estimate never depends on the LOS scv.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import MomentSummary, RenewalDistribution, moments
from .errors import NonpositiveServiceRate

__all__ = [
    "BirthDeathCoefficients",
    "SteadyState",
    "build_coefficients",
    "log_product_weights",
    "steady_state",
    "rejection_single",
    "erlang_b",
]


@dataclass(frozen=True)
class BirthDeathCoefficients:
    """Effective rates of one care-level chain.

    ``lambda_tilde[i]`` is the birth rate out of state ``i`` (``0..c-1``),
    ``mu_tilde[i-1]`` the death rate out of state ``i`` (``1..c``), and
    ``phi_tilde[n]`` the time/arrival weight ratio of state ``n`` (``0..c``).
    """

    c: int
    arrival_rate: float
    lambda_tilde: np.ndarray
    mu_tilde: np.ndarray
    phi_tilde: np.ndarray
    arrival: MomentSummary
    los: MomentSummary

    def mu(self, i: int) -> float:
        """Death rate out of state ``i`` using the 1-based index."""
        return float(self.mu_tilde[i - 1])


@dataclass(frozen=True)
class SteadyState:
    """Two-moment steady state of one chain.

    ``pi_arrival`` sums to one. ``pi_time`` is ``pi_arrival * phi_tilde`` and
    is deliberately left unnormalised; rejection is computed as a ratio of its
    entries. ``normalizer`` is the product-sum constant ``K``; for very large
    ``c`` it can overflow, while ``log_normalizer`` stays finite.
    """

    pi_arrival: np.ndarray
    pi_time: np.ndarray
    log_normalizer: float

    @property
    def pi_departure(self) -> np.ndarray:
        # Rate conservation: the discharge-epoch law is the arrival-epoch law.
        return self.pi_arrival

    @property
    def normalizer(self) -> float:
        try:
            return math.exp(self.log_normalizer)
        except OverflowError:
            return math.inf


def build_coefficients(arrival: MomentSummary, los: MomentSummary, c: int) -> BirthDeathCoefficients:
    """Effective birth, death and phi sequences for a chain with ``c`` cots.

    Only the arrival scv enters through ``q_A``; ``los`` contributes its mean.

    Raises
    ------
    NonpositiveServiceRate
        If some ``m_L - i (m_A - q_A)`` with ``1 <= i <= c`` is not positive.
    """
    c = int(c)
    if c < 1:
        raise ValueError(f"cot count must be at least 1, got {c}")
    if not (arrival.mean > 0 and los.mean > 0):
        raise ValueError("arrival and LOS means must be positive")
    m_a, q_a, m_l = arrival.mean, arrival.q, los.mean
    lam = 1.0 / m_a
    drift = m_a - q_a

    idx = np.arange(1, c + 1, dtype=float)
    service_times = m_l - idx * drift
    bad = np.flatnonzero(service_times <= 0.0)
    if bad.size:
        i = int(bad[0]) + 1
        raise NonpositiveServiceRate(
            f"effective service time m_L - i*(m_A - q_A) = {service_times[bad[0]]:.6g} <= 0 "
            f"at i = {i} (m_L = {m_l}, m_A = {m_a}, q_A = {q_a}, c = {c})",
            index=i,
        )
    mu_tilde = 1.0 / service_times

    birth_times = np.arange(1, c + 1, dtype=float) * q_a
    birth_times[c - 1] = c * m_a
    lambda_tilde = 1.0 / birth_times

    phi = np.empty(c + 1)
    phi[0] = lam * q_a
    if c > 1:
        phi[1:c] = lam * (q_a + drift * mu_tilde[: c - 1] / lambda_tilde[: c - 1])
    phi[c] = lam * (m_a + drift * mu_tilde[c - 1] / lambda_tilde[c - 1])
    if np.any(phi <= 0.0):
        raise NonpositiveServiceRate(f"non-positive phi weight for c = {c}")
    return BirthDeathCoefficients(c, lam, lambda_tilde, mu_tilde, phi, arrival, los)


def log_product_weights(coeffs: BirthDeathCoefficients) -> np.ndarray:
    """``log prod_{i<n} lambda_i / mu_{i+1}`` for ``n = 0..c``."""
    steps = np.log(coeffs.lambda_tilde) - np.log(coeffs.mu_tilde)
    return np.concatenate(([0.0], np.cumsum(steps)))


def steady_state(coeffs: BirthDeathCoefficients) -> SteadyState:
    logw = log_product_weights(coeffs)
    top = logw.max()
    w = np.exp(logw - top)
    total = math.fsum(w)
    pi_a = w / total
    return SteadyState(pi_a, pi_a * coeffs.phi_tilde, top + math.log(total))


def _summary(d) -> MomentSummary:
    return d if isinstance(d, MomentSummary) else moments(d)


def rejection_single(arrival: RenewalDistribution | MomentSummary,
                     los: RenewalDistribution | MomentSummary, c: int) -> float:
    """Rejection probability ``pi(c) / sum_n pi(n)`` of a GI/G/c/0 unit."""
    ss = steady_state(build_coefficients(_summary(arrival), _summary(los), c))
    return float(ss.pi_time[-1] / math.fsum(ss.pi_time))


def erlang_b(c: int, offered_load: float) -> float:
    """Erlang loss formula by the stable recursion ``B(n) = a B(n-1) / (n + a B(n-1))``."""
    if c < 0 or offered_load < 0:
        raise ValueError("c and offered_load must be non-negative")
    b = 1.0
    for n in range(1, int(c) + 1):
        b = offered_load * b / (n + offered_load * b)
    return b
