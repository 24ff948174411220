"""Closed-form outage and ergodic capacity under the fixed power split.

Both users' outage probabilities are the fading cdf evaluated at a scheme-
specific threshold, so the mixture machinery carries all the weight; the
ergodic capacity is assembled from one log-moment kernel evaluated at
three different rate factors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ftr
from .ftr import FtrSeries
from .noma import GpaConfig, LinkBudget
from .specfun import log1p_gamma_moment

__all__ = [
    "GpaScenario",
    "outage_p",
    "outage_q",
    "outage_p_asymptotic",
    "outage_q_asymptotic",
    "capacity_integral",
    "ergodic_capacity",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class GpaScenario:
    """Both users' series, the link budget, and the fixed power split."""

    user_p: FtrSeries
    user_q: FtrSeries
    budget: LinkBudget
    config: GpaConfig

    @property
    def rate_p(self) -> float:
        """Reciprocal mean of the near user's received-power kernel."""
        return 1.0 / (self.user_p.params.diffuse_power * self.budget.gamma_bar * self.budget.q_p)

    @property
    def rate_q(self) -> float:
        return 1.0 / (self.user_q.params.diffuse_power * self.budget.gamma_bar * self.budget.q_q)


def outage_p(gamma_th: float, scen: GpaScenario) -> float:
    """Pr{near-user SINR <= gamma_th}; the cdf at gamma_th/(a gbar Qp)."""
    if gamma_th <= 0:
        raise ValueError("gamma_th must be positive")
    b = scen.budget
    return float(ftr.cdf(gamma_th / (scen.config.a * b.gamma_bar * b.q_p), scen.user_p))


def outage_q(gamma_th: float, scen: GpaScenario) -> float:
    """Pr{far-user SINR <= gamma_th}.

    Certain outage (probability one) whenever 1 - a - a*gamma_th <= 0: the
    far user's interference-limited SINR can never reach the threshold.
    """
    if gamma_th <= 0:
        raise ValueError("gamma_th must be positive")
    a_th = scen.config.a_th(gamma_th)
    if a_th <= 0:
        return 1.0
    b = scen.budget
    return float(ftr.cdf(gamma_th / (a_th * b.gamma_bar * b.q_q), scen.user_q))


def outage_p_asymptotic(gamma_th: float, scen: GpaScenario) -> float:
    """Leading high-SNR outage term of the near user (slope one per decade)."""
    if gamma_th <= 0:
        raise ValueError("gamma_th must be positive")
    b = scen.budget
    return float(
        ftr.cdf_asymptotic(gamma_th / (scen.config.a * b.gamma_bar * b.q_p), scen.user_p.params)
    )


def outage_q_asymptotic(gamma_th: float, scen: GpaScenario) -> float:
    """High-SNR outage of the far user: slope one per decade, or the constant 1."""
    if gamma_th <= 0:
        raise ValueError("gamma_th must be positive")
    a_th = scen.config.a_th(gamma_th)
    if a_th <= 0:
        return 1.0
    b = scen.budget
    return float(
        ftr.cdf_asymptotic(gamma_th / (a_th * b.gamma_bar * b.q_q), scen.user_q.params)
    )


def capacity_integral(b: float, series: FtrSeries) -> float:
    """E[log2(1 + b h)] for the mixture channel.

    Equals (1/ln 2) sum_j w_j E[ln(1 + 2 b sigma^2 U_j)] with U_j an order
    j+1 Gamma variate; each expectation goes through the shared log-moment
    kernel.
    """
    if b < 0:
        raise ValueError("rate factor must be >= 0")
    if b == 0.0:
        return 0.0
    y = b * series.params.diffuse_power
    terms = [
        w * log1p_gamma_moment(j, y) if w != 0.0 else 0.0
        for j, w in enumerate(series.weights)
    ]
    return float(np.sum(terms) / LN2)


def ergodic_capacity(scen: GpaScenario) -> float:
    """Two-user ergodic sum capacity under the fixed split.

    The far user's log-ratio rate splits into a difference of two
    log-moment terms; the result is clipped at zero against rounding in
    the tiny-SNR limit.
    """
    b = scen.budget
    a = scen.config.a
    total = (
        capacity_integral(a * b.gamma_bar * b.q_p, scen.user_p)
        + capacity_integral(b.gamma_bar * b.q_q, scen.user_q)
        - capacity_integral(a * b.gamma_bar * b.q_q, scen.user_q)
    )
    return max(total, 0.0)
