"""Stochastic ground truth for every closed form in the package.

Channel states are generated in fixed-size chunks, one counter-based
substream per (user, antenna branch, chunk), so results are bit-identical
for a given (scenario, seed) regardless of how many workers execute the
chunks.  Scheme comparisons and SNR sweeps reuse the same draws (common
random numbers), which makes ordering checks sharp.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import ftr
from .ftr import FtrParams
from .noma import LinkBudget, sinr_gpa, sinr_opa, sum_rate

__all__ = [
    "Scenario",
    "SweepResult",
    "draw_effective_gain",
    "simulate_op",
    "simulate_ec",
    "simulate_sum_rate",
    "worker_count",
]

WORKER_ENV = "FTRNOMA_WORKERS"
DEFAULT_SAMPLES = 10_000_000
CHUNK = 1 << 20
Z95 = 1.959963984540054

SCHEMES = ("gpa", "opa", "tdma")


def worker_count() -> int:
    """Worker override from the environment; defaults to the CPU count."""
    raw = os.environ.get(WORKER_ENV, "")
    if raw.strip():
        n = int(raw)
        if n < 1:
            raise ValueError(f"{WORKER_ENV} must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class Scenario:
    """Complete description of one simulation experiment."""

    user_p: FtrParams
    user_q: FtrParams
    budget: LinkBudget
    scheme: str = "gpa"
    a: float | None = None
    antennas: tuple[int, int] = (1, 1)
    n_samples: int = DEFAULT_SAMPLES
    seed: int = 0
    gamma_th_list: tuple[float, ...] = ()
    gamma_bar_grid_db: tuple[float, ...] = ()

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "gpa" and self.a is None:
            raise ValueError("gpa scenarios need the power fraction a")
        if self.n_samples < 10_000:
            raise ValueError("need at least 1e4 samples")
        if self.antennas[0] < 1 or self.antennas[1] < 1:
            raise ValueError("antenna counts must be >= 1")
        if not self.gamma_bar_grid_db:
            raise ValueError("the average-SNR grid must not be empty")
        if any(g <= 0 for g in self.gamma_th_list):
            raise ValueError("SINR thresholds must be positive")

    @property
    def branches(self) -> int:
        return self.antennas[0] * self.antennas[1]

    def fingerprint(self) -> dict[str, str]:
        fields = {
            "user_p": f"{self.user_p.m},{self.user_p.k},{self.user_p.delta},{self.user_p.sigma}",
            "user_q": f"{self.user_q.m},{self.user_q.k},{self.user_q.delta},{self.user_q.sigma}",
            "q_p": repr(self.budget.q_p),
            "q_q": repr(self.budget.q_q),
            "scheme": self.scheme,
            "antennas": f"{self.antennas[0]}x{self.antennas[1]}",
            "n_samples": str(self.n_samples),
            "seed": str(self.seed),
        }
        if self.a is not None:
            fields["a"] = repr(self.a)
        return fields


@dataclass(frozen=True)
class SweepResult:
    """One metric series over the average-SNR grid with 95% half-widths."""

    axis: tuple[float, ...]
    metric: str
    estimate: tuple[float, ...]
    ci_half_width: tuple[float, ...]
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.estimate) != len(self.axis) or len(self.ci_half_width) != len(self.axis):
            raise ValueError("estimate/ci length must match the axis")


def _chunks(total: int, size: int = CHUNK):
    out = []
    pos = 0
    idx = 0
    while pos < total:
        out.append((idx, min(size, total - pos)))
        pos += size
        idx += 1
    return out


def _chunk_gain(params: FtrParams, n: int, seed: int, user: int, branches: int, chunk: int):
    """Best of `branches` independent draws, one substream per branch."""
    best = ftr.draw_chunk(params, n, seed, user, chunk)
    for b in range(1, branches):
        np.maximum(best, ftr.draw_chunk(params, n, seed, user + 2 * b, chunk), out=best)
    return best


def draw_effective_gain(params: FtrParams, antennas: tuple[int, int], n: int, seed: int):
    """Selection-combining effective gain: max over t*r independent links.

    With a single antenna pair this reproduces the plain sampler draws
    bit for bit.
    """
    branches = antennas[0] * antennas[1]
    if branches < 1:
        raise ValueError("need at least one antenna branch")
    out = np.empty(n)
    pos = 0
    for chunk, size in _chunks(n):
        out[pos : pos + size] = _chunk_gain(params, size, seed, 0, branches, chunk)
        pos += size
    return out


def _wilson(successes: np.ndarray, n: int):
    """Raw proportion plus the Wilson 95% half-width (sane near 0 and 1)."""
    p_hat = successes / n
    z2 = Z95 * Z95
    denom = 1.0 + z2 / n
    half = Z95 * np.sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)) / denom
    return p_hat, half


def _op_chunk(args):
    scenario, gamma_bars, chunk, size = args
    h_p = _chunk_gain(scenario.user_p, size, scenario.seed, 0, scenario.branches, chunk)
    h_q = _chunk_gain(scenario.user_q, size, scenario.seed, 1, scenario.branches, chunk)
    ths = np.asarray(scenario.gamma_th_list)
    counts = np.zeros((2, len(gamma_bars), len(ths)), dtype=np.int64)
    for i, g in enumerate(gamma_bars):
        budget = replace(scenario.budget, gamma_bar=g)
        if scenario.scheme == "gpa":
            gam_p, gam_q = sinr_gpa(scenario.a, budget, h_p, h_q)
        else:
            gam_p, gam_q = sinr_opa(budget, h_p, h_q)
        counts[0, i] = np.count_nonzero(gam_p[:, None] <= ths[None, :], axis=0)
        counts[1, i] = np.count_nonzero(gam_q[:, None] <= ths[None, :], axis=0)
    return counts


def _ec_chunk(args):
    scenario, gamma_bars, chunk, size = args
    h_p = _chunk_gain(scenario.user_p, size, scenario.seed, 0, scenario.branches, chunk)
    h_q = _chunk_gain(scenario.user_q, size, scenario.seed, 1, scenario.branches, chunk)
    out = np.zeros((len(gamma_bars), 2))
    for i, g in enumerate(gamma_bars):
        budget = replace(scenario.budget, gamma_bar=g)
        rate = sum_rate(scenario.scheme, budget, h_p, h_q, a=scenario.a)
        out[i, 0] = float(np.sum(rate))
        out[i, 1] = float(np.sum(rate * rate))
    return out


def _sum_rate_chunk(args):
    scenario, gamma_bars, chunk, size = args
    h_p = _chunk_gain(scenario.user_p, size, scenario.seed, 0, scenario.branches, chunk)
    h_q = _chunk_gain(scenario.user_q, size, scenario.seed, 1, scenario.branches, chunk)
    out = np.zeros((len(SCHEMES), len(gamma_bars), 2))
    for i, g in enumerate(gamma_bars):
        budget = replace(scenario.budget, gamma_bar=g)
        for s, scheme in enumerate(SCHEMES):
            rate = sum_rate(scheme, budget, h_p, h_q, a=scenario.a)
            out[s, i, 0] = float(np.sum(rate))
            out[s, i, 1] = float(np.sum(rate * rate))
    return out


def _map_chunks(fn, scenario, gamma_bars):
    jobs = [(scenario, gamma_bars, chunk, size) for chunk, size in _chunks(scenario.n_samples)]
    workers = min(worker_count(), len(jobs))
    if workers <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _grid_linear(scenario: Scenario) -> np.ndarray:
    return 10.0 ** (np.asarray(scenario.gamma_bar_grid_db, dtype=float) / 10.0)


def simulate_op(scenario: Scenario) -> dict[tuple[str, float], SweepResult]:
    """Outage estimates for both users, keyed by (user, gamma_th).

    Counts accumulate in chunk order, so nested thresholds stay monotone
    and reruns are bit-identical.
    """
    if scenario.scheme == "tdma":
        raise ValueError("outage simulation is defined for the gpa and opa schemes")
    if not scenario.gamma_th_list:
        raise ValueError("need at least one SINR threshold")
    gamma_bars = _grid_linear(scenario)
    partials = _map_chunks(_op_chunk, scenario, gamma_bars)
    counts = sum(partials)
    n = scenario.n_samples
    results: dict[tuple[str, float], SweepResult] = {}
    for u, user in enumerate(("p", "q")):
        for t, gamma_th in enumerate(scenario.gamma_th_list):
            est, half = _wilson(counts[u, :, t].astype(float), n)
            meta = scenario.fingerprint() | {"gamma_th": repr(gamma_th), "user": user}
            results[(user, gamma_th)] = SweepResult(
                tuple(scenario.gamma_bar_grid_db),
                f"op_{user}",
                tuple(float(x) for x in est),
                tuple(float(x) for x in half),
                meta,
            )
    return results


def _mean_result(scenario, metric, sums, meta_extra=None) -> SweepResult:
    n = scenario.n_samples
    mean = sums[:, 0] / n
    var = np.maximum(sums[:, 1] / n - mean * mean, 0.0)
    half = Z95 * np.sqrt(var / n)
    meta = scenario.fingerprint() | (meta_extra or {})
    return SweepResult(
        tuple(scenario.gamma_bar_grid_db),
        metric,
        tuple(float(x) for x in mean),
        tuple(float(x) for x in half),
        meta,
    )


def simulate_ec(scenario: Scenario) -> SweepResult:
    """Mean two-user rate over the SNR grid with normal 95% intervals."""
    gamma_bars = _grid_linear(scenario)
    sums = sum(_map_chunks(_ec_chunk, scenario, gamma_bars))
    return _mean_result(scenario, "ec", sums)


def simulate_sum_rate(scenario: Scenario) -> dict[str, SweepResult]:
    """Mean sum rate of all three schemes from the same channel draws."""
    if scenario.a is None:
        raise ValueError("sum-rate comparison needs the gpa fraction a")
    gamma_bars = _grid_linear(scenario)
    sums = sum(_map_chunks(_sum_rate_chunk, scenario, gamma_bars))
    return {
        scheme: _mean_result(scenario, "sum_rate", sums[s], {"scheme": scheme})
        for s, scheme in enumerate(SCHEMES)
    }
