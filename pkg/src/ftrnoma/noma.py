"""Link budget, SINR definitions, power allocation and scheme comparisons.

Two downlink users share one transmission: the near user p (stronger
deterministic gain) applies successive interference cancellation, the far
user q decodes directly.  The fixed scheme gives p the fraction `a` of the
transmit power; the optimal scheme picks, per channel state, the fraction
that maximizes the two-user sum rate while keeping both users above their
time-division rates.

All functions accept scalars or numpy arrays for the channel gains.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ftr import FtrParams, sample

__all__ = [
    "LinkBudget",
    "GpaConfig",
    "FractionRange",
    "sinr_gpa",
    "sinr_opa",
    "optimal_fraction",
    "fraction_range",
    "sum_rate",
    "sum_rate_derivative",
    "sic_power_ratio",
    "crossover_gamma_bar",
    "crossover_gamma_th",
    "prob_channel_order",
    "db_to_linear",
    "linear_to_db",
]

LN2 = math.log(2.0)


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class LinkBudget:
    """Deterministic link gains and the average transmit SNR (linear)."""

    q_p: float
    q_q: float
    gamma_bar: float

    def __post_init__(self):
        if not self.q_p > 0 or not self.q_q > 0:
            raise ValueError("link gains must be positive")
        if not self.q_p > self.q_q:
            raise ValueError(
                f"near user must have the stronger link: q_p={self.q_p} <= q_q={self.q_q}"
            )
        if not self.gamma_bar > 0:
            raise ValueError("gamma_bar must be positive")

    def with_gamma_bar_db(self, gamma_bar_db: float) -> "LinkBudget":
        return LinkBudget(self.q_p, self.q_q, float(db_to_linear(gamma_bar_db)))


@dataclass(frozen=True)
class GpaConfig:
    """Fixed power split: the near user receives the fraction a < 0.5."""

    a: float

    def __post_init__(self):
        if not 0.0 < self.a < 0.5:
            raise ValueError(f"power fraction must satisfy 0 < a < 0.5, got {self.a}")

    def a_th(self, gamma_th: float) -> float:
        """1 - a - a*gamma_th; the far user's outage is certain when <= 0."""
        return 1.0 - self.a - self.a * gamma_th


@dataclass(frozen=True)
class FractionRange:
    """Admissible power fractions keeping both users above their TDMA rates."""

    lower: np.ndarray
    upper: np.ndarray

    @property
    def is_empty(self) -> np.ndarray:
        return self.lower > self.upper


def sinr_gpa(a: float, budget: LinkBudget, h_p, h_q):
    """Received SINRs (near, far) under the fixed power split."""
    if not 0.0 < a < 0.5:
        raise ValueError(f"power fraction must satisfy 0 < a < 0.5, got {a}")
    g = budget.gamma_bar
    x = g * budget.q_q * np.asarray(h_q, dtype=float)
    gamma_p = a * g * budget.q_p * np.asarray(h_p, dtype=float)
    gamma_q = (1.0 - a) * x / (a * x + 1.0)
    return gamma_p, gamma_q


def optimal_fraction(budget: LinkBudget, h_q):
    """Sum-rate maximizing power fraction 1 / (sqrt(1 + gbar Qq hq) + 1)."""
    x = budget.gamma_bar * budget.q_q * np.asarray(h_q, dtype=float)
    return 1.0 / (np.sqrt(1.0 + x) + 1.0)


def fraction_range(budget: LinkBudget, h_p, h_q) -> FractionRange:
    """Fraction interval where both users beat their TDMA rates.

    Empty (lower > upper) exactly when Qp hp < Qq hq; that is a legal
    low-probability channel state, not an error.
    """
    g = budget.gamma_bar
    lo = 1.0 / (np.sqrt(1.0 + g * budget.q_p * np.asarray(h_p, dtype=float)) + 1.0)
    hi = 1.0 / (np.sqrt(1.0 + g * budget.q_q * np.asarray(h_q, dtype=float)) + 1.0)
    return FractionRange(lo, hi)


def sinr_opa(budget: LinkBudget, h_p, h_q):
    """Received SINRs with the optimal fraction substituted in.

    Applied unconditionally, also in the rare states with an empty
    admissible range, so stochastic estimates stay aligned with the
    closed forms.
    """
    g = budget.gamma_bar
    root = np.sqrt(1.0 + g * budget.q_q * np.asarray(h_q, dtype=float))
    gamma_p = g * budget.q_p * np.asarray(h_p, dtype=float) / (root + 1.0)
    gamma_q = root - 1.0
    return gamma_p, gamma_q


def sum_rate(scheme: str, budget: LinkBudget, h_p, h_q, a: float | None = None):
    """Two-user sum rate in bits/s/Hz under 'gpa', 'opa' or 'tdma'."""
    if scheme == "gpa":
        if a is None:
            raise ValueError("gpa sum rate needs the power fraction a")
        gamma_p, gamma_q = sinr_gpa(a, budget, h_p, h_q)
        return np.log2(1.0 + gamma_p) + np.log2(1.0 + gamma_q)
    if scheme == "opa":
        gamma_p, gamma_q = sinr_opa(budget, h_p, h_q)
        return np.log2(1.0 + gamma_p) + np.log2(1.0 + gamma_q)
    if scheme == "tdma":
        g = budget.gamma_bar
        return 0.5 * np.log2(1.0 + g * budget.q_p * np.asarray(h_p, dtype=float)) + 0.5 * np.log2(
            1.0 + g * budget.q_q * np.asarray(h_q, dtype=float)
        )
    raise ValueError(f"unknown scheme {scheme!r}")


def sum_rate_derivative(a: float, budget: LinkBudget, h_p, h_q):
    """d(sum rate)/da; positive exactly when Qp hp > Qq hq."""
    if not 0.0 < a < 1.0:
        raise ValueError(f"a must be in (0, 1), got {a}")
    g = budget.gamma_bar
    u = budget.q_p * np.asarray(h_p, dtype=float)
    v = budget.q_q * np.asarray(h_q, dtype=float)
    return g * (u - v) / ((a * g * u + 1.0) * (a * g * v + 1.0)) / LN2


def sic_power_ratio(budget: LinkBudget, h_q):
    """(1 - a_opt)/a_opt = sqrt(1 + gbar Qq hq); at least 1."""
    x = budget.gamma_bar * budget.q_q * np.asarray(h_q, dtype=float)
    out = np.sqrt(1.0 + x)
    return out if out.ndim else float(out)


def crossover_gamma_bar(a: float, budget: LinkBudget, h_q: float) -> float:
    """Average SNR where the near user's outage ranking between schemes flips.

    Below the returned value the fixed split has the higher outage for a
    given far-user gain h_q; above it the ranking reverses.
    """
    if not 0.0 < a < 0.5:
        raise ValueError(f"power fraction must satisfy 0 < a < 0.5, got {a}")
    if h_q <= 0:
        raise ValueError("h_q must be positive")
    return (1.0 / a - 2.0) / (a * budget.q_q * h_q)


def crossover_gamma_th(a: float) -> float:
    """SINR threshold where the far user's outage ranking between schemes flips."""
    if not 0.0 < a < 0.5:
        raise ValueError(f"power fraction must satisfy 0 < a < 0.5, got {a}")
    return 1.0 / a - 2.0


def _wilson_interval(successes: int, n: int, z: float = 1.959963984540054):
    p_hat = successes / n
    denom = 1.0 + z * z / n
    center = (p_hat + z * z / (2 * n)) / denom
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / n + z * z / (4.0 * n * n)) / denom
    return center, half


def prob_channel_order(
    ratio: float,
    params_p: FtrParams,
    params_q: FtrParams,
    n: int = 1_000_000,
    seed: int = 0,
):
    """Monte-Carlo Pr{Qp hp > Qq hq} at Qp/Qq = ratio, with 95% half-width."""
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    if n < 10_000:
        raise ValueError("need at least 1e4 samples")
    h_p = sample(params_p, n, seed, stream=0)
    h_q = sample(params_q, n, seed, stream=1)
    hits = int(np.count_nonzero(ratio * h_p > h_q))
    return _wilson_interval(hits, n)
