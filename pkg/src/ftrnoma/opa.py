"""Closed-form outage and capacity under the sum-rate-optimal power split.

The far user's outage stays a single cdf evaluation, but the near user's
outage couples both fading series through a survival integral.  Expanding
that integral termwise produces, per pair of series orders, a polynomial
in the substituted variable whose moments split into a full-axis piece
(parabolic-cylinder identity) minus a [0, 1] piece (first-kind
Chebyshev-Gauss rule).  The expansion alternates in sign, so the whole
assembly runs in log magnitude with explicit signs, carries a rounding-
noise channel, and re-runs itself in arbitrary precision when float64
cannot support the cancellation at low average SNR.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import ftr
from .ftr import FtrSeries
from .noma import LinkBudget
from .specfun import (
    LN_EPS,
    ConvergenceError,
    chebyshev_gauss_rule,
    digamma,
    double_factorial_log,
    gaussian_power_moment_log_table,
    kummer_u_log,
    ln_gamma,
    log1p_gamma_moment,
)

__all__ = [
    "OpaScenario",
    "outage_p",
    "outage_p_quadrature",
    "outage_q",
    "outage_p_asymptotic",
    "outage_q_asymptotic",
    "capacity_approx",
    "capacity_lower",
    "capacity_upper",
]

LN2 = math.log(2.0)
E0 = 1.0 / LN2  # log2(e)
NODE_CAP = 1024
NODE_TOL = 1e-6
# survival below this is reported as outage 1.0 without touching the series
NEGLIGIBLE_SURVIVAL = 1e-10


@dataclass(frozen=True)
class OpaScenario:
    """Both users' series, the link budget, and quadrature node counts."""

    user_p: FtrSeries
    user_q: FtrSeries
    budget: LinkBudget
    quad_op_nodes: int = 64
    quad_ec_nodes: int = 64

    def __post_init__(self):
        if self.quad_op_nodes < 8 or self.quad_ec_nodes < 8:
            raise ValueError("quadrature node counts must be >= 8")

    @property
    def rate_p(self) -> float:
        return 1.0 / (self.user_p.params.diffuse_power * self.budget.gamma_bar * self.budget.q_p)

    @property
    def rate_q(self) -> float:
        return 1.0 / (self.user_q.params.diffuse_power * self.budget.gamma_bar * self.budget.q_q)


# ---------------------------------------------------------------------------
# far user: outage is one cdf evaluation
# ---------------------------------------------------------------------------


def outage_q(gamma_th: float, scen: OpaScenario) -> float:
    """Pr{far-user SINR <= gamma_th} = cdf((gamma_th^2 + 2 gamma_th)/(gbar Qq))."""
    if gamma_th <= 0:
        raise ValueError("gamma_th must be positive")
    b = scen.budget
    return float(ftr.cdf((gamma_th**2 + 2.0 * gamma_th) / (b.gamma_bar * b.q_q), scen.user_q))


def outage_q_asymptotic(gamma_th: float, scen: OpaScenario) -> float:
    """High-SNR far-user outage; slope one per decade."""
    if gamma_th <= 0:
        raise ValueError("gamma_th must be positive")
    b = scen.budget
    return float(
        ftr.cdf_asymptotic((gamma_th**2 + 2.0 * gamma_th) / (b.gamma_bar * b.q_q), scen.user_q.params)
    )


def outage_p_asymptotic(gamma_th: float, scen: OpaScenario) -> float:
    """High-SNR near-user outage; slope one half per decade.

    The far user's gain enters through E[sqrt(h_q)], whose series terms
    (2j+1)!!/(2^{j+1} j!) are formed in log space.
    """
    if gamma_th <= 0:
        raise ValueError("gamma_th must be positive")
    pp, pq = scen.user_p.params, scen.user_q.params
    b = scen.budget
    w0 = math.exp(pp.m * math.log(pp.m) - ln_gamma(pp.m) + math.log(ftr.series_coefficient(0, pp)))
    j = np.arange(scen.user_q.n_terms)
    ln_terms = np.array(
        [double_factorial_log(2 * jj + 1) - (jj + 1) * LN2 - ln_gamma(jj + 1.0) for jj in j]
    )
    tail_sum = float(np.sum(scen.user_q.weights * np.exp(ln_terms)))
    sigma_p2 = pp.sigma**2
    sigma_q2 = pq.sigma**2
    coeff = (
        w0
        * gamma_th
        * math.sqrt(sigma_q2 * b.q_q * math.pi)
        / (sigma_p2 * b.q_p * math.sqrt(2.0))
    )
    return coeff * tail_sum / math.sqrt(b.gamma_bar)


# ---------------------------------------------------------------------------
# near user: the expanded survival series
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=4)
def _pair_tables(n_q: int, n_p: int):
    """Log-magnitude and sign of the (z-1)^jq (z+1)^(jq+np) coefficients.

    Shaped (n_q, n_p, width) and padded with -inf; row (jq, np) holds the
    polynomial of degree 2 jq + np.  Exact up to float64 rounding.
    """
    width = 2 * (n_q - 1) + (n_p - 1) + 1
    ln_c = np.full((n_q, n_p, width), -np.inf)
    sgn = np.zeros((n_q, n_p, width), dtype=np.int8)
    one_one = np.ones(2)
    for jq in range(n_q):
        minus = np.array([math.comb(jq, n) * (-1.0) ** (jq - n) for n in range(jq + 1)])
        plus = np.array([float(math.comb(jq, mm)) for mm in range(jq + 1)])
        cur = np.convolve(minus, plus)
        for np_ in range(n_p):
            if np_ > 0:
                cur = np.convolve(cur, one_one)
            nz = cur != 0
            ln_c[jq, np_, : cur.size][nz] = np.log(np.abs(cur[nz]))
            sgn[jq, np_, : cur.size] = np.sign(cur).astype(np.int8)
    return ln_c, sgn


@functools.lru_cache(maxsize=4)
def _pair_coeff_ints(n_q: int, n_p: int):
    """Exact integer twin of _pair_tables for the high-precision path."""
    rows: dict[tuple[int, int], list[int]] = {}
    for jq in range(n_q):
        minus = [math.comb(jq, n) * (-1) ** (jq - n) for n in range(jq + 1)]
        plus = [math.comb(jq, mm) for mm in range(jq + 1)]
        cur = [0] * (2 * jq + 1)
        for i, a in enumerate(minus):
            for kk, bb in enumerate(plus):
                cur[i + kk] += a * bb
        for np_ in range(n_p):
            if np_ > 0:
                cur = [cur[0]] + [cur[i] + cur[i - 1] for i in range(1, len(cur))] + [cur[-1]]
            rows[(jq, np_)] = cur
    return rows


def _lower_piece_log_table(nu_max: int, q: float, beta: float, nodes: int) -> np.ndarray:
    """log of Int_0^1 z^nu exp(-q z - beta z^2) dz for nu = 0..nu_max.

    First-kind Chebyshev-Gauss rule after mapping [0, 1] to [-1, 1]; each
    node contribution is assembled in log space so large nu cannot
    overflow.
    """
    rule = chebyshev_gauss_rule(nodes)
    phi = rule.nodes
    x = (1.0 + phi) / 2.0  # in (0, 1)
    base = (
        math.log(math.pi / (2.0 * nodes))
        + 0.5 * np.log1p(-phi * phi)
        - q * x
        - beta * x * x
    )
    nu = np.arange(nu_max + 1)
    terms = base[None, :] + nu[:, None] * np.log(x)[None, :]
    return special.logsumexp(terms, axis=1)


def _signed_logsumexp(ln_mag: np.ndarray, sign: np.ndarray, axis: int):
    """(log|sum|, sign(sum), log(sum|terms|)) along an axis."""
    shift = np.max(ln_mag, axis=axis, keepdims=True)
    shift_safe = np.where(np.isfinite(shift), shift, 0.0)
    ex = np.exp(ln_mag - shift_safe)
    signed = np.sum(ex * sign, axis=axis)
    total = np.sum(ex, axis=axis)
    shift_flat = np.squeeze(shift_safe, axis=axis)
    with np.errstate(divide="ignore"):
        ln_abs = shift_flat + np.log(np.abs(signed))
        ln_tot = shift_flat + np.log(total)
    out_sign = np.sign(signed)
    return ln_abs, out_sign, ln_tot


@functools.lru_cache(maxsize=8)
def _ln_binom_matrix(width: int) -> np.ndarray:
    """Lower-triangular log binomial coefficients ln C(nu, r), -inf above."""
    nu = np.arange(width + 1, dtype=float)
    out = (
        special.gammaln(nu[:, None] + 1.0)
        - special.gammaln(nu[None, :] + 1.0)
        - special.gammaln(nu[:, None] - nu[None, :] + 1.0)
    )
    out[np.arange(width + 1)[:, None] < np.arange(width + 1)[None, :]] = -np.inf
    return out


def _tail_moment_log_tables(width: int, q: float, beta: float, nodes: int):
    """log of Int_1^inf z^nu exp(-qz - beta z^2) dz for nu = 0..width.

    Primary route: full-axis moment (parabolic-cylinder identity) minus the
    [0, 1] piece from the Chebyshev-Gauss rule.  Where the two pieces agree
    to better than half (the rule converges only algebraically, so an
    exponentially small difference is unrecoverable at any precision), the
    integral is recomputed by shifting the origin to 1, which makes every
    contribution positive:

        Int_1^inf = e^{-q-beta} sum_r C(nu, r) Int_0^inf w^r e^{-(q+2b)w-bw^2} dw

    Returns (ln_i5, ln_err5) where ln_err5 bounds the absolute error.
    """
    ln_g = gaussian_power_moment_log_table(width, q, beta)
    ln_i7 = _lower_piece_log_table(width, q, beta, nodes)
    diff = np.minimum(ln_i7 - ln_g, 0.0)
    with np.errstate(divide="ignore"):
        ln_sub = ln_g + np.log1p(-np.exp(diff))
    ln_sub[~np.isfinite(ln_sub)] = -np.inf

    ln_shift = gaussian_power_moment_log_table(width, q + 2.0 * beta, beta)
    ln_direct = -(q + beta) + special.logsumexp(
        _ln_binom_matrix(width) + ln_shift[None, :], axis=1
    )

    use_sub = diff < -LN2
    ln_i5 = np.where(use_sub, ln_sub, ln_direct)
    # subtraction inherits the full-axis scale times the ~1e-11 seed
    # accuracy; the positive route is relatively accurate
    ln_err5 = np.where(use_sub, ln_g + math.log(1e-10), ln_direct + math.log(1e-11))
    return ln_i5, ln_err5


def _survival_f64(scen: OpaScenario, gamma_th: float, nodes: int):
    """(survival, absolute noise bound, log of the term-magnitude mass)."""
    sp, sq = scen.user_p, scen.user_q
    q = gamma_th * scen.rate_p
    beta = scen.rate_q
    n_p, n_q = sp.n_terms, sq.n_terms
    ln_c, sgn = _pair_tables(n_q, n_p)
    width = ln_c.shape[2]
    ln_i5, ln_err5 = _tail_moment_log_tables(width, q, beta, nodes)

    # polynomial power r pairs with the moment of order r+1 (the extra z)
    t = ln_c + ln_i5[1 : width + 1][None, None, :]
    ln_pair, sign_pair, ln_pair_mass = _signed_logsumexp(t, sgn, axis=2)
    with np.errstate(divide="ignore"):
        ln_pair_err = special.logsumexp(ln_c + ln_err5[1 : width + 1][None, None, :], axis=2)

    with np.errstate(divide="ignore"):
        ln_wq = np.where(
            sq.weights > 0,
            np.log(np.abs(sq.weights, where=sq.weights != 0, out=np.ones_like(sq.weights)))
            + (np.arange(n_q) + 1) * math.log(beta)
            - special.gammaln(np.arange(n_q) + 1.0),
            -np.inf,
        )
    t2 = ln_wq[:, None] + ln_pair
    ln_t, sign_t, ln_t_mass_signed = _signed_logsumexp(t2, sign_pair, axis=0)
    ln_t_mass = special.logsumexp(ln_wq[:, None] + ln_pair_mass, axis=0)
    ln_t_err = special.logsumexp(ln_wq[:, None] + ln_pair_err, axis=0)

    htail = np.cumsum(sp.weights[::-1])[::-1]
    with np.errstate(divide="ignore"):
        ln_head = (
            np.arange(n_p) * (math.log(q) if q > 0 else -math.inf)
            - special.gammaln(np.arange(n_p) + 1.0)
            + np.where(htail > 0, np.log(np.maximum(htail, 1e-300)), -np.inf)
        )
    ln_sigma, sign_sigma, _ = _signed_logsumexp(ln_head + ln_t, sign_t, axis=0)
    ln_mass = special.logsumexp(ln_head + ln_t_mass)
    ln_err = special.logsumexp(ln_head + ln_t_err)

    pref = beta - q + LN2
    survival = sign_sigma * math.exp(min(pref + ln_sigma, 700.0)) if np.isfinite(ln_sigma) else 0.0
    noise = math.exp(min(pref + ln_mass + LN_EPS + math.log(64.0), 700.0)) + math.exp(
        min(pref + ln_err, 700.0)
    )
    return float(survival), float(noise), float(pref + ln_mass)


def _survival_upper_bound(scen: OpaScenario, gamma_th: float) -> float:
    """Cheap tail bound: the near user must at least exceed 2 gamma_th/(gbar Qp)."""
    lam = 2.0 * gamma_th * scen.rate_p
    j1 = np.arange(1, scen.user_p.n_terms + 1, dtype=float)
    return float(np.sum(scen.user_p.weights * special.gammaincc(j1, lam)))


def _survival_mp(scen: OpaScenario, gamma_th: float, dps: int) -> float:
    """Arbitrary-precision re-run of the expanded survival series.

    The tail moments use the positive shifted-origin form (the rule-based
    lower-piece subtraction is unrecoverable exactly where this path is
    needed); moment seeds come from mp quadrature, everything below them
    from the positive downward recurrence, and the polynomial coefficients
    are exact integers.
    """
    import mpmath as mp

    sp, sq = scen.user_p, scen.user_q
    n_p, n_q = sp.n_terms, sq.n_terms
    rows = _pair_coeff_ints(n_q, n_p)
    width = 2 * (n_q - 1) + (n_p - 1) + 1

    with mp.workdps(dps):
        q = mp.mpf(gamma_th) * mp.mpf(scen.rate_p)
        beta = mp.mpf(scen.rate_q)
        qs = q + 2 * beta  # shifted linear coefficient

        def seed_moment(nu):
            # integrate the peak-rescaled integrand; the raw spike height
            # spans hundreds of decades and defeats tanh-sinh otherwise
            peak = (-qs + mp.sqrt(qs * qs + 8 * beta * nu)) / (4 * beta)
            l_peak = nu * mp.log(peak) - qs * peak - beta * peak * peak
            sig = 1 / mp.sqrt(nu / (peak * peak) + 2 * beta)

            def f(w):
                if w <= 0:
                    return mp.mpf(0)
                return mp.exp(nu * mp.log(w) - qs * w - beta * w * w - l_peak)

            pts = [
                0,
                max(peak - 8 * sig, peak / 1000),
                peak,
                peak + 8 * sig,
                peak + 40 * sig,
                mp.inf,
            ]
            val, err = mp.quad(f, pts, maxdegree=12, error=True)
            if err > mp.mpf(10) ** (-(dps - 8)) * val:
                raise ConvergenceError("high-precision moment seed did not converge")
            return mp.exp(l_peak) * val

        g = [mp.mpf(0)] * (width + 1)
        g[width] = seed_moment(width)
        g[width - 1] = seed_moment(width - 1)
        for nu in range(width - 1, 0, -1):
            g[nu - 1] = (qs * g[nu] + 2 * beta * g[nu + 1]) / nu
        x0 = qs / (2 * mp.sqrt(beta))
        g0_exact = mp.sqrt(mp.pi / (4 * beta)) * mp.erfc(x0) * mp.exp(x0 * x0)
        if abs(g[0] / g0_exact - 1) > mp.mpf(10) ** (-(dps // 2)):
            raise ConvergenceError("high-precision moment recurrence failed its closed-form check")

        # Int_1^inf z^nu e^{-qz-bz^2} dz = e^{-q-b} sum_r C(nu, r) g[r]
        shift = mp.exp(-(q + beta))
        i5 = [mp.mpf(0)] * (width + 1)
        row = [mp.mpf(1)]
        i5[0] = shift * g[0]
        for nu in range(1, width + 1):
            row = [mp.mpf(1)] + [row[i] + row[i - 1] for i in range(1, len(row))] + [mp.mpf(1)]
            i5[nu] = shift * mp.fsum(c * gv for c, gv in zip(row, g[: nu + 1]))

        wq = []
        for jq in range(n_q):
            w = sq.weights[jq]
            wq.append(mp.mpf(w) * beta ** (jq + 1) / mp.factorial(jq) if w > 0 else mp.mpf(0))
        htail = mp.mpf(0)
        htails = [mp.mpf(0)] * n_p
        for jp in range(n_p - 1, -1, -1):
            htail += mp.mpf(sp.weights[jp])
            if jp < n_p:
                htails[jp] = htail

        total = mp.mpf(0)
        for np_ in range(n_p):
            if htails[np_] <= 0:
                continue
            t_np = mp.mpf(0)
            for jq in range(n_q):
                if wq[jq] == 0:
                    continue
                coeffs = rows[(jq, np_)]
                s_pair = mp.fsum(
                    mp.mpf(c) * i5[r + 1] for r, c in enumerate(coeffs) if c != 0
                )
                t_np += wq[jq] * s_pair
            total += q**np_ / mp.factorial(np_) * htails[np_] * t_np
        survival = 2 * mp.exp(beta - q) * total
        return float(survival)


def _outage_p_nodes(scen: OpaScenario, gamma_th: float, nodes: int):
    """(outage value, whether the value depends on the rule node count)."""
    survival, noise, ln_mass = _survival_f64(scen, gamma_th, nodes)
    # the noise scale must be judged against a physical survival (<= 1);
    # a wild float64 value is itself proof of cancellation
    if 0.0 <= survival <= 1.0 + 1e-9 and noise <= max(1e-9, 1e-7 * min(survival, 1.0)):
        return float(np.clip(1.0 - survival, 0.0, 1.0)), True

    upper = _survival_upper_bound(scen, gamma_th)
    if upper < NEGLIGIBLE_SURVIVAL:
        return 1.0, False

    # precision: carry the alternating-term mass down to 1e-12 absolute
    dps = 25 + max(0, int(math.ceil((ln_mass + math.log(1e12)) / math.log(10.0))))
    dps = min(dps, 400)
    survival = _survival_mp(scen, gamma_th, dps)
    return float(np.clip(1.0 - survival, 0.0, 1.0)), False


def outage_p(gamma_th: float, scen: OpaScenario) -> float:
    """Pr{near-user SINR <= gamma_th} from the expanded survival series.

    The [0, 1] moment piece uses the scenario's Chebyshev-Gauss rule; the
    node count doubles until two consecutive evaluations agree to 1e-6,
    and a ConvergenceError reports failure to stabilize below the cap.
    Evaluations that bypass the rule (escalated precision or a negligible
    survival bound) are node-independent by construction.
    """
    if gamma_th <= 0:
        raise ValueError("gamma_th must be positive")
    nodes = scen.quad_op_nodes
    value, rule_dependent = _outage_p_nodes(scen, gamma_th, nodes)
    if not rule_dependent:
        return value
    while True:
        doubled, _ = _outage_p_nodes(scen, gamma_th, 2 * nodes)
        if abs(doubled - value) <= NODE_TOL:
            return doubled
        nodes *= 2
        value = doubled
        if nodes > NODE_CAP:
            raise ConvergenceError(
                f"outage quadrature did not stabilize below {NODE_CAP} nodes"
            )


def outage_p_quadrature(gamma_th: float, scen: OpaScenario) -> float:
    """Independent one-dimensional check of the near user's outage.

    Integrates the near user's survival series against the far user's
    density directly, before any termwise expansion, with adaptive
    quadrature.  Shares nothing with outage_p beyond the series weights.
    """
    if gamma_th <= 0:
        raise ValueError("gamma_th must be positive")
    b = scen.budget
    g = b.gamma_bar

    def integrand(y):
        thr = gamma_th * (math.sqrt(1.0 + g * b.q_q * y) + 1.0) / (g * b.q_p)
        return float(ftr.survival(thr, scen.user_p) * ftr.pdf(y, scen.user_q))

    mean_q = scen.user_q.params.mean_power
    hi = 60.0 * mean_q
    pts = [mean_q / 4.0, mean_q, 4.0 * mean_q, 12.0 * mean_q]
    value, err = integrate.quad(
        integrand, 0.0, hi, points=pts, epsabs=1e-13, epsrel=1e-10, limit=400
    )
    tail, terr = integrate.quad(integrand, hi, np.inf, epsabs=1e-13, epsrel=1e-10, limit=200)
    survival = value + tail
    if err + terr > 1e-6 * max(survival, 1e-9):
        raise ConvergenceError("outage quadrature oracle did not converge")
    return float(np.clip(1.0 - survival, 0.0, 1.0))


# ---------------------------------------------------------------------------
# ergodic capacity: second-order expansion plus convexity bounds
# ---------------------------------------------------------------------------


def _mean_sqrt_term(series: FtrSeries, rate: float) -> float:
    """E[sqrt(1 + gbar Qq h_q)] = sum_j w_j rate^{j+1} U(j+1, j+2.5; rate)."""
    total = 0.0
    for j, w in enumerate(series.weights):
        if w <= 0:
            continue
        ln_t = math.log(w) + (j + 1) * math.log(rate) + kummer_u_log(j + 1.0, j + 2.5, rate)
        total += math.exp(ln_t)
    return total


def _moment_sums(series: FtrSeries):
    j = np.arange(series.n_terms)
    s1 = float(np.sum(series.weights * (j + 1)))
    s2 = float(np.sum(series.weights * (j + 1) * (j + 2)))
    return s1, s2


def _i9_nodes(series_q: FtrSeries, beta: float, nodes: int) -> float:
    """Penalty term E[log2(1 + 1/sqrt(1 + gbar Qq h_q))] via the mapped rule."""
    rule = chebyshev_gauss_rule(nodes)
    phi = rule.nodes
    with np.errstate(divide="ignore"):
        ln_node = (
            math.log(math.pi / nodes)
            + 0.5 * np.log1p(-phi * phi)
            + np.log(np.log((phi + 3.0) / 2.0))
            - 4.0 * beta / (phi + 1.0) ** 2
        )
    j = np.arange(series_q.n_terms)
    ln_geom = j[:, None] * np.log((phi + 3.0) * (1.0 - phi))[None, :] - (
        2 * j[:, None] + 3
    ) * np.log(phi + 1.0)[None, :]
    per_j = special.logsumexp(ln_node[None, :] + ln_geom, axis=1)
    with np.errstate(divide="ignore"):
        ln_w = np.where(
            series_q.weights > 0,
            np.log(np.maximum(series_q.weights, 1e-300))
            + (j + 1) * math.log(beta)
            - special.gammaln(j + 1.0),
            -np.inf,
        )
    return float(8.0 * E0 * math.exp(beta + special.logsumexp(ln_w + per_j)))


def _i9(series_q: FtrSeries, beta: float, nodes: int) -> float:
    value = _i9_nodes(series_q, beta, nodes)
    while True:
        doubled = _i9_nodes(series_q, beta, 2 * nodes)
        if abs(doubled - value) <= NODE_TOL:
            return doubled
        nodes *= 2
        value = doubled
        if nodes > NODE_CAP:
            raise ConvergenceError(
                f"capacity penalty quadrature did not stabilize below {NODE_CAP} nodes"
            )


def capacity_approx(scen: OpaScenario) -> float:
    """Second-order ergodic-capacity approximation.

    The leading term expands log2(1 + X) around E[X] for
    X = sqrt(1 + gbar Qq h_q) + gbar Qp h_p, keeping the variance
    correction; the penalty term is subtracted exactly.
    """
    w = _mean_sqrt_term(scen.user_q, scen.rate_q)
    s1_p, s2_p = _moment_sums(scen.user_p)
    s1_q, _ = _moment_sums(scen.user_q)
    l_p = s1_p / scen.rate_p
    m2_p = s2_p / scen.rate_p**2
    l_q = s1_q / scen.rate_q
    mean = 1.0 + w + l_p
    var = m2_p - l_p**2 + 1.0 + l_q - w * w
    i8 = math.log2(mean) - E0 * var / (2.0 * mean * mean)
    return max(i8 - _i9(scen.user_q, scen.rate_q, scen.quad_ec_nodes), 0.0)


def capacity_upper(scen: OpaScenario) -> float:
    """Concavity bound: log2(1 + E[X]) minus the exact penalty term."""
    w = _mean_sqrt_term(scen.user_q, scen.rate_q)
    s1_p, _ = _moment_sums(scen.user_p)
    mean = 1.0 + w + s1_p / scen.rate_p
    return math.log2(mean) - _i9(scen.user_q, scen.rate_q, scen.quad_ec_nodes)


def capacity_lower(scen: OpaScenario) -> float:
    """Convexity bound through the exponentials of the two log means."""
    half_log = 0.0
    for j, w in enumerate(scen.user_q.weights):
        if w > 0:
            half_log += w * log1p_gamma_moment(j, 1.0 / scen.rate_q)
    half_log *= 0.5
    log_mean_p = -math.log(scen.rate_p) + float(
        np.sum(
            scen.user_p.weights
            * np.array([digamma(j + 1.0) for j in range(scen.user_p.n_terms)])
        )
    )
    i8_lower = math.log2(1.0 + math.exp(half_log) + math.exp(log_mean_p))
    return max(i8_lower - _i9(scen.user_q, scen.rate_q, scen.quad_ec_nodes), 0.0)
