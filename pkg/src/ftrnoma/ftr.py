"""Fluctuating two-ray (FTR) power-gain distribution.

The squared envelope of an FTR channel is a countable mixture of Erlang
components: pdf(x) = sum_j w_j * Erlang(j+1, 2 sigma^2)(x).  The mixture
weights w_j follow from averaging the two specular rays (similarity delta,
total specular-to-diffuse ratio K) over their random phases and a common
Gamma-distributed power fluctuation of shape m.  This module computes the
weights, the pdf/cdf/moments of the truncated mixture, the small-argument
linear form of the cdf, and draws exact samples from the generative model
so every closed form downstream can be checked against simulation.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .specfun import ConvergenceError, _legendre_p_log, ln_gamma

__all__ = [
    "FtrParams",
    "FtrSeries",
    "TruncationError",
    "DEFAULT_TERMS",
    "series_coefficient",
    "build_series",
    "pdf",
    "cdf",
    "cdf_asymptotic",
    "moment",
    "sample",
    "draw_chunk",
]

DEFAULT_TERMS = 80
SAMPLE_CHUNK = 1 << 20

# Substream layout for the counter-based generator: the second Philox key
# word packs (stream id, chunk index) so every chunk of every logical
# stream is an independent, reproducible substream.
_CHUNK_BITS = 24


class TruncationError(ValueError):
    """The requested number of series terms cannot represent the distribution."""


@dataclass(frozen=True)
class FtrParams:
    """Four-parameter fading description of one user's channel.

    m      shape of the unit-mean Gamma fluctuation of the specular power
    k      ratio of average specular power to average diffuse power
    delta  similarity of the two specular amplitudes, in [0, 1]
    sigma  standard deviation of each diffuse quadrature component
    """

    m: float
    k: float
    delta: float
    sigma: float

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"m must be > 0, got {self.m}")
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must be in [0, 1], got {self.delta}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")

    @property
    def diffuse_power(self) -> float:
        """2 sigma^2, the mean power of the diffuse component."""
        return 2.0 * self.sigma**2

    @property
    def mean_power(self) -> float:
        """E[h] = 2 sigma^2 (1 + K)."""
        return self.diffuse_power * (1.0 + self.k)

    @property
    def specular_amplitudes(self) -> tuple[float, float]:
        """The (V1, V2) split implied by (K, delta, sigma).

        V1^2 + V2^2 = 2 sigma^2 K and 2 V1 V2 / (V1^2 + V2^2) = delta; at
        delta = 0 all specular power sits in V1.
        """
        root = math.sqrt(max(1.0 - self.delta**2, 0.0))
        v1 = self.sigma * math.sqrt(self.k * (1.0 + root))
        v2 = self.sigma * math.sqrt(self.k * (1.0 - root))
        return v1, v2


@dataclass(frozen=True)
class FtrSeries:
    """Truncated mixture representation of one FTR distribution."""

    params: FtrParams
    n_terms: int
    d: np.ndarray
    weights: np.ndarray
    residual_imag_max: float

    def __post_init__(self):
        self.d.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def weight_sum(self) -> float:
        return float(self.weights.sum())

    @property
    def first_moment_sum(self) -> float:
        """sum_j w_j (j+1); equals 1 + K for an adequate truncation."""
        j = np.arange(self.n_terms)
        return float(np.sum(self.weights * (j + 1)))


def _series_coefficient_parts(j: int, params: FtrParams):
    """(real part, |imaginary residual|, max term magnitude) of coefficient j.

    Each term of the double binomial sum carries i^(2l-k) against a
    first-kind Legendre value of order k-2l on (1, inf).  The phase average
    that produces these coefficients selects the lower-branch Ferrers
    values there, which equal e^{-i pi (k-2l)/2} times the (real)
    hypergeometric-representation values this package computes; the two
    unit factors combine to i^{2(2l-k)} = (-1)^k.  Terms are accumulated as
    complex numbers scaled by the largest log-magnitude so coefficients
    stay finite for large j, and the leftover imaginary magnitude is
    reported for the series-level sanity check.
    """
    m, k_ratio, delta = params.m, params.k, params.delta
    radical = math.sqrt((m + k_ratio) ** 2 - (k_ratio * delta) ** 2)
    argument = (m + k_ratio) / radical
    degree = j + m - 1.0
    base = -(j + m) * math.log(radical)

    log_terms: list[float] = []
    phases: list[complex] = []
    legendre_cache: dict[int, tuple[float, int]] = {}
    i_unit = (1.0, 1.0j, -1.0, -1.0j)  # i**n by n mod 4

    for k in range(j + 1):
        if k > 0 and delta == 0.0:
            break
        ln_binom_jk = ln_gamma(j + 1.0) - ln_gamma(k + 1.0) - ln_gamma(j - k + 1.0)
        ln_delta_pow = k * math.log(delta / 2.0) if k > 0 else 0.0
        for l in range(k + 1):
            order = k - 2 * l
            if order not in legendre_cache:
                legendre_cache[order] = _legendre_p_log(degree, order, argument)
            ln_p, sign_p = legendre_cache[order]
            if sign_p == 0:
                continue
            ln_binom_kl = ln_gamma(k + 1.0) - ln_gamma(l + 1.0) - ln_gamma(k - l + 1.0)
            ln_mag = (
                ln_binom_jk
                + ln_delta_pow
                + ln_binom_kl
                + ln_gamma(j + m + 2 * l - k)
                + ln_p
                + base
            )
            log_terms.append(ln_mag)
            branch = i_unit[(2 * l - k) % 4]  # Ferrers branch phase on (1, inf)
            phases.append(i_unit[(2 * l - k) % 4] * branch * sign_p)

    shift = max(log_terms)
    acc = complex(0.0)
    max_mag = 0.0
    for ln_mag, phase in zip(log_terms, phases):
        mag = math.exp(ln_mag - shift)
        acc += phase * mag
        max_mag = max(max_mag, mag)

    # The alternating (k, l) terms can exceed the coefficient by many orders
    # for large j; once float64 can no longer carry the cancellation, redo
    # the sum in arbitrary precision.
    if acc.real == 0.0 or max_mag > 1e5 * abs(acc.real):
        return _series_coefficient_parts_mp(j, params)
    scale = math.exp(shift)
    return acc.real * scale, abs(acc.imag) * scale, max_mag * scale


def _series_coefficient_parts_mp(j: int, params: FtrParams):
    """Arbitrary-precision coefficient sum with self-selected precision."""
    import mpmath as mp

    from .specfun import legendre_p_mp

    m, k_ratio, delta = params.m, params.k, params.delta
    for dps in (40, 60, 90, 140, 220):
        with mp.workdps(dps):
            mm = mp.mpf(m)
            radical = mp.sqrt((mm + k_ratio) ** 2 - (k_ratio * delta) ** 2)
            argument = (mm + k_ratio) / radical
            degree = j + mm - 1
            base = radical ** (-(j + mm))
            cache: dict[int, mp.mpf] = {}
            acc = mp.mpc(0)
            max_mag = mp.mpf(0)
            i_unit = (mp.mpc(1), mp.mpc(0, 1), mp.mpc(-1), mp.mpc(0, -1))
            for k in range(j + 1):
                if k > 0 and delta == 0.0:
                    break
                front = mp.binomial(j, k) * (mp.mpf(delta) / 2) ** k
                for l in range(k + 1):
                    order = k - 2 * l
                    if order not in cache:
                        cache[order] = legendre_p_mp(degree, order, argument)
                    term = (
                        front
                        * mp.binomial(k, l)
                        * mp.gamma(j + mm + 2 * l - k)
                        * cache[order]
                        * base
                    )
                    phase = i_unit[(2 * l - k) % 4]
                    acc += phase * phase * term
                    max_mag = max(max_mag, abs(term))
            value = acc.real
            if value != 0 and max_mag * mp.mpf(10) ** (-dps) < 1e-13 * abs(value):
                return float(value), float(abs(acc.imag)), float(max_mag)
    raise ConvergenceError(f"coefficient {j} cancellation exceeded available precision")


def series_coefficient(j: int, params: FtrParams) -> float:
    """Real mixture coefficient of order j (imaginary residual discarded).

    Raises ConvergenceError when the discarded imaginary part is not
    negligible next to the accumulated term magnitudes, which would signal
    a numerical fault rather than a bad input.
    """
    if j < 0:
        raise ValueError("j must be >= 0")
    value, imag_res, max_mag = _series_coefficient_parts(j, params)
    if imag_res > 1e-6 * max_mag:
        raise ConvergenceError(
            f"imaginary residual {imag_res:.3e} too large for coefficient {j}"
        )
    return value


@functools.lru_cache(maxsize=64)
def build_series(
    params: FtrParams, n_terms: int = DEFAULT_TERMS, tolerance: float = 1e-4
) -> FtrSeries:
    """Compute mixture coefficients and weights for the first n_terms orders.

    Weights are formed in log space as
    w_j = exp(m ln m - ln Gamma(m) + j ln K + ln d_j - ln Gamma(j+1));
    a normalization drift beyond `tolerance` (default 1e-4) raises
    TruncationError because it means the truncation cannot carry the
    requested K.  Pass tolerance=inf to measure the drift of an inadequate
    truncation instead of failing.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    m, k_ratio = params.m, params.k

    d = np.empty(n_terms)
    weights = np.zeros(n_terms)
    residual_max = 0.0
    d_scale = 0.0
    ln_front = m * math.log(m) - ln_gamma(m)
    for j in range(n_terms):
        value, imag_res, _ = _series_coefficient_parts(j, params)
        d[j] = value
        residual_max = max(residual_max, imag_res)
        d_scale = max(d_scale, abs(value))
        if k_ratio == 0.0:
            weights[j] = 1.0 if j == 0 else 0.0
            continue
        if value == 0.0:
            weights[j] = 0.0
            continue
        ln_w = ln_front + j * math.log(k_ratio) + math.log(abs(value)) - ln_gamma(j + 1.0)
        weights[j] = math.copysign(math.exp(ln_w), value)

    if residual_max > 1e-9 * d_scale:
        raise ConvergenceError(
            f"imaginary residual {residual_max:.3e} exceeds 1e-9 of the coefficient scale"
        )

    total = float(weights.sum())
    if abs(total - 1.0) > tolerance:
        raise TruncationError(
            f"weight sum {total:.8f} deviates from 1 beyond {tolerance:g}: "
            f"{n_terms} terms are too few for K={k_ratio}"
        )
    return FtrSeries(params, n_terms, d, weights, residual_max)


def adequate_terms(params: FtrParams, start: int = DEFAULT_TERMS) -> int:
    """Smallest truncation from (start, 100, 120, 160, 240) that builds cleanly."""
    last_err: TruncationError | None = None
    for n in sorted({start, 100, 120, 160, 240}):
        if n < start:
            continue
        try:
            build_series(params, n)
            return n
        except TruncationError as err:
            last_err = err
    raise last_err if last_err else TruncationError("no adequate truncation found")


def _poisson_cdf(j_plus_1: np.ndarray, lam: np.ndarray) -> np.ndarray:
    # regularized upper incomplete gamma Q(j+1, lam) = exp(-lam) sum_{n<=j} lam^n/n!
    return special.gammaincc(j_plus_1, lam)


def pdf(x, series: FtrSeries):
    """Mixture density at x >= 0 (vectorized, per-term log evaluation)."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise ValueError("x must be >= 0")
    lam = x_arr / series.params.diffuse_power
    j = np.arange(series.n_terms)
    log_pois = (
        special.xlogy(j, lam[..., None])
        - lam[..., None]
        - special.gammaln(j + 1.0)
    )
    out = np.sum(series.weights * np.exp(log_pois), axis=-1) / series.params.diffuse_power
    out = np.maximum(out, 0.0)
    return out if out.ndim else float(out)


def cdf(x, series: FtrSeries):
    """Mixture distribution function, clamped to [0, 1].

    Evaluated as sum_j w_j P(j+1, x / 2 sigma^2) with the regularized lower
    incomplete gamma so the value is exactly 0 at x = 0 and increases
    montonically; the truncation deficit only shows up in the far tail.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise ValueError("x must be >= 0")
    lam = x_arr / series.params.diffuse_power
    j1 = np.arange(1, series.n_terms + 1, dtype=float)
    out = np.sum(series.weights * special.gammainc(j1, lam[..., None]), axis=-1)
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def survival(x, series: FtrSeries):
    """Complement of cdf in the same truncation semantics (sum_j w_j Q_j)."""
    x_arr = np.asarray(x, dtype=float)
    lam = x_arr / series.params.diffuse_power
    j1 = np.arange(1, series.n_terms + 1, dtype=float)
    out = np.sum(series.weights * _poisson_cdf(j1, lam[..., None]), axis=-1)
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def cdf_asymptotic(x, params: FtrParams):
    """Leading linear term of the cdf as x -> 0: w_0 * x / (2 sigma^2)."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise ValueError("x must be >= 0")
    d0 = series_coefficient(0, params)
    w0 = math.exp(params.m * math.log(params.m) - ln_gamma(params.m) + math.log(d0))
    out = w0 * x_arr / params.diffuse_power
    return out if out.ndim else float(out)


def moment(n: int, series: FtrSeries) -> float:
    """E[h^n] = (2 sigma^2)^n sum_j w_j (j+n)!/j! for integer n >= 1."""
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    j = np.arange(series.n_terms)
    ratio = np.exp(special.gammaln(j + n + 1.0) - special.gammaln(j + 1.0))
    return float(series.params.diffuse_power**n * np.sum(series.weights * ratio))


def _rng_for(seed: int, stream: int, chunk: int) -> np.random.Generator:
    if chunk >= 1 << _CHUNK_BITS:
        raise ValueError("chunk index out of range")
    key = np.array(
        [np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64((stream << _CHUNK_BITS) | chunk)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def draw_chunk(params: FtrParams, count: int, seed: int, stream: int, chunk: int) -> np.ndarray:
    """One substream's worth of i.i.d. power-gain draws.

    h = | sqrt(zeta) (V1 e^{i phi1} + V2 e^{i phi2}) + X + iY |^2 with
    zeta ~ Gamma(m, mean 1), phases uniform on [0, 2 pi), X, Y ~ N(0, sigma^2).
    The Gamma draws use the generator's exact rejection sampler.
    """
    rng = _rng_for(seed, stream, chunk)
    zeta = rng.gamma(shape=params.m, scale=1.0 / params.m, size=count)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=(2, count))
    noise = rng.normal(0.0, params.sigma, size=(2, count))
    v1, v2 = params.specular_amplitudes
    spec = v1 * np.exp(1j * phi[0]) + v2 * np.exp(1j * phi[1])
    field = np.sqrt(zeta) * spec + noise[0] + 1j * noise[1]
    return np.abs(field) ** 2


def sample(
    params: FtrParams,
    count: int,
    seed: int,
    stream: int = 0,
    chunk_size: int = SAMPLE_CHUNK,
) -> np.ndarray:
    """Deterministic i.i.d. draws of the power gain, chunked by substream.

    Output is a function of (seed, stream, count, chunk_size) only, no
    matter how the chunks are scheduled.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    out = np.empty(count)
    pos = 0
    chunk = 0
    while pos < count:
        n = min(chunk_size, count - pos)
        out[pos : pos + n] = draw_chunk(params, n, seed, stream, chunk)
        pos += n
        chunk += 1
    return out
