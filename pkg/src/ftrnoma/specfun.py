"""Special-function and quadrature kernels shared by the analysis modules.

Everything in this module is a pure function of its arguments and safe to
call concurrently.  Values that can span hundreds of orders of magnitude
(high-order moments, factorial-like products) are exposed both in linear
and in log form; the analysis modules assemble their series in log space
and only exponentiate at the end.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

__all__ = [
    "ConvergenceError",
    "QuadratureRule",
    "chebyshev_gauss_rule",
    "gauss_laguerre_rule",
    "ln_gamma",
    "digamma",
    "double_factorial",
    "double_factorial_log",
    "legendre_p",
    "kummer_u",
    "kummer_u_log",
    "parabolic_cylinder_d",
    "gaussian_power_moment_log",
    "gaussian_power_moment_log_table",
    "meijer_g_log",
    "log1p_gamma_moment",
    "integrate_adaptive",
]

LN_EPS = math.log(2.0 ** -52)

# Tolerances for the hypergeometric series behind the Legendre function.
SERIES_TOL = 1e-14
SERIES_MAX_TERMS = 10_000

# Adaptive quadrature contract used by every oracle-style integral here.
QUAD_ABS_TOL = 1e-10
QUAD_REL_TOL = 1e-9
QUAD_LIMIT = 400


class ConvergenceError(RuntimeError):
    """A series or quadrature failed to reach its target tolerance."""


# ---------------------------------------------------------------------------
# quadrature rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    """Fixed quadrature rule (nodes and weights are read-only arrays)."""

    kind: str
    node_count: int
    nodes: np.ndarray
    weights: np.ndarray

    _KINDS = ("chebyshev-gauss-first-kind", "gauss-laguerre", "adaptive")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if self.node_count < 1:
            raise ValueError("node_count must be positive")
        if len(self.nodes) != self.node_count or len(self.weights) != self.node_count:
            raise ValueError("nodes/weights length must equal node_count")
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def apply(self, f) -> float:
        return float(np.sum(self.weights * f(self.nodes)))


def chebyshev_gauss_rule(count: int) -> QuadratureRule:
    """First-kind Chebyshev-Gauss rule on (-1, 1).

    Nodes are cos((2k-1)pi/(2*count)), k = 1..count (strictly decreasing),
    with the uniform weight pi/count.  Approximates the weighted integral
    of f(x)/sqrt(1-x^2) over (-1, 1).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    k = np.arange(1, count + 1)
    nodes = np.cos((2 * k - 1) * np.pi / (2 * count))
    weights = np.full(count, np.pi / count)
    return QuadratureRule("chebyshev-gauss-first-kind", count, nodes, weights)


def gauss_laguerre_rule(count: int, alpha: float = 0.0) -> QuadratureRule:
    """Generalized Gauss-Laguerre rule for weight x^alpha e^{-x} on [0, inf)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    nodes, weights = special.roots_genlaguerre(count, alpha)
    return QuadratureRule("gauss-laguerre", count, nodes, weights)


def _quad(f, a, b, **kw):
    # QUADPACK's "bad integrand" warning fires on the rescaled spikes we feed
    # it deliberately; the error-estimate checks below are the actual gate.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, a, b, **kw)


def integrate_adaptive(f, a: float, b: float, points=None) -> float:
    """Adaptive quadrature with the module-wide tolerance contract.

    Raises ConvergenceError when the QUADPACK error estimate is not within
    the absolute/relative targets.
    """
    kwargs = dict(epsabs=QUAD_ABS_TOL, epsrel=QUAD_REL_TOL, limit=QUAD_LIMIT)
    if points is not None and math.isfinite(a) and math.isfinite(b):
        pts = sorted(p for p in points if a < p < b)
        if pts:
            kwargs["points"] = pts
    value, err = _quad(f, a, b, **kwargs)
    if err > 100 * (QUAD_ABS_TOL + QUAD_REL_TOL * abs(value)):
        raise ConvergenceError(
            f"adaptive quadrature error estimate {err:.3e} too large for value {value:.6e}"
        )
    return value


# ---------------------------------------------------------------------------
# gamma-family helpers
# ---------------------------------------------------------------------------


def ln_gamma(x: float) -> float:
    """Natural log of the Gamma function for x > 0."""
    if x <= 0:
        raise ValueError(f"ln_gamma requires x > 0, got {x}")
    return float(special.gammaln(x))


def digamma(x: float) -> float:
    """Digamma (psi) function for x > 0."""
    if x <= 0:
        raise ValueError(f"digamma requires x > 0, got {x}")
    return float(special.digamma(x))


def double_factorial_log(n: int) -> float:
    """log(n!!) for odd n >= 1, with (-1)!! == 1 by convention."""
    if n == -1:
        return 0.0
    if n < 0 or n % 2 == 0:
        raise ValueError(f"double factorial needs odd n >= -1, got {n}")
    j = (n - 1) // 2  # n = 2j + 1
    return float(special.gammaln(2 * j + 2) - j * math.log(2.0) - special.gammaln(j + 2))


def double_factorial(n: int) -> float:
    """Product of the odd integers up to n (computed in log space)."""
    return math.exp(double_factorial_log(n))


# ---------------------------------------------------------------------------
# Legendre function of the first kind on [1, inf), integer order
# ---------------------------------------------------------------------------


def _hyp2f1_series(a: float, b: float, c: float, w: float):
    """Gauss series sum_k (a)_k (b)_k / ((c)_k k!) w^k for c > 0, 0 <= w < 1.

    Returns (sum, max_abs_term).  Terminates exactly when a or b is a
    non-positive integer.
    """
    term = 1.0
    total = 1.0
    comp = 0.0  # Kahan carry
    max_abs = 1.0
    for k in range(SERIES_MAX_TERMS):
        term *= (a + k) * (b + k) * w / ((c + k) * (k + 1))
        if term == 0.0:
            return total + comp, max_abs
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        max_abs = max(max_abs, abs(term))
        ratio = abs((a + k + 1) * (b + k + 1) * w / ((c + k + 1) * (k + 2)))
        if abs(term) <= SERIES_TOL * max(abs(total), 1e-300) and ratio < 1.0:
            return total, max_abs
    raise ConvergenceError("hypergeometric series did not converge within the iteration cap")


def _hyp2f1_mp(a: float, b: float, c: float, w: float) -> float:
    import mpmath as mp

    with mp.workdps(50):
        return float(mp.hyp2f1(a, b, c, w))


def _poch_log(a: float, n: int):
    """(log |(a)_n|, sign) of the Pochhammer symbol for integer n >= 0."""
    lnabs = 0.0
    sign = 1
    for k in range(n):
        v = a + k
        if v == 0.0:
            return -math.inf, 0
        lnabs += math.log(abs(v))
        if v < 0:
            sign = -sign
    return lnabs, sign


def _legendre_p_log(degree: float, order: int, arg: float):
    """(log |P|, sign) of the first-kind Legendre function on [1, inf).

    Uses the hypergeometric representation with the series argument mapped
    to (z-1)/(z+1) in [0, 1) so it converges for any z >= 1; integer
    non-positive values of 1-order are handled through the limiting form
    of the regularized series.
    """
    if order != int(order):
        raise ValueError("order must be an integer")
    order = int(order)
    z = float(arg)
    if z < 1.0:
        if z > 1.0 - 1e-12:
            z = 1.0
        else:
            raise ValueError(f"argument must be >= 1, got {arg}")
    if z == 1.0:
        return (0.0, 1) if order == 0 else (-math.inf, 0)

    nu = float(degree)
    mu = order
    w = (z - 1.0) / (z + 1.0)
    half_log_ratio = 0.5 * (math.log(z + 1.0) - math.log(z - 1.0))
    ln_scale = nu * math.log((z + 1.0) / 2.0)
    a = -nu
    b = -mu - nu

    if mu <= 0:
        c = 1.0 - mu
        ln_pref = mu * half_log_ratio + ln_scale - ln_gamma(c)
        sign_pref = 1
        sa, sb, sc = a, b, c
    else:
        # 1-mu is a non-positive integer: leading series terms cancel the
        # Gamma pole, leaving a shifted ordinary Gauss series.
        ln_poch, sign_pref = _poch_log(a, mu)
        if sign_pref == 0:
            return -math.inf, 0
        ln_poch2, s2 = _poch_log(b, mu)
        if s2 == 0:
            return -math.inf, 0
        sign_pref *= s2
        ln_pref = -mu * half_log_ratio + ln_scale + ln_poch + ln_poch2 - ln_gamma(mu + 1.0)
        sa, sb, sc = a + mu, b + mu, float(mu + 1)

    try:
        s, max_abs = _hyp2f1_series(sa, sb, sc, w)
        if max_abs > 1e10 * max(abs(s), 1e-300):
            s = _hyp2f1_mp(sa, sb, sc, w)
    except ConvergenceError:
        s = _hyp2f1_mp(sa, sb, sc, w)
    if s == 0.0:
        return -math.inf, 0
    sign = sign_pref * (1 if s > 0 else -1)
    return ln_pref + math.log(abs(s)), sign


def legendre_p_mp(degree, order: int, arg, mp=None):
    """Arbitrary-precision twin of the Legendre evaluation (same algorithm).

    Operates at the caller's current mpmath working precision; used by the
    series assembly when float64 cancellation monitoring trips.
    """
    import mpmath

    mp = mp or mpmath.mp
    z = mpmath.mpf(arg)
    mu = int(order)
    nu = mpmath.mpf(degree)
    if z == 1:
        return mpmath.mpf(1) if mu == 0 else mpmath.mpf(0)
    w = (z - 1) / (z + 1)
    a = -nu
    b = -mu - nu

    def gauss_series(sa, sb, sc):
        term = mpmath.mpf(1)
        total = mpmath.mpf(1)
        tol = mpmath.mpf(10) ** (-(mp.dps + 5))
        for k in range(SERIES_MAX_TERMS):
            term *= (sa + k) * (sb + k) * w / ((sc + k) * (k + 1))
            total += term
            if term == 0 or abs(term) <= tol * abs(total):
                return total
        raise ConvergenceError("mp hypergeometric series did not converge")

    if mu <= 0:
        pref = (z + 1) ** (mpmath.mpf(mu) / 2) / (z - 1) ** (mpmath.mpf(mu) / 2)
        pref *= ((z + 1) / 2) ** nu / mpmath.gamma(1 - mu)
        return pref * gauss_series(a, b, mpmath.mpf(1 - mu))
    poch = mpmath.mpf(1)
    for k in range(mu):
        poch *= (a + k) * (b + k)
    if poch == 0:
        return mpmath.mpf(0)
    pref = (z - 1) ** (mpmath.mpf(mu) / 2) / (z + 1) ** (mpmath.mpf(mu) / 2)
    pref *= ((z + 1) / 2) ** nu * poch / mpmath.gamma(mu + 1)
    return pref * gauss_series(a + mu, b + mu, mpmath.mpf(mu + 1))


def legendre_p(degree: float, order: int, arg: float) -> complex:
    """First-kind Legendre function P_degree^order(arg) for arg >= 1.

    Returned as complex so callers combining it with imaginary-unit powers
    can keep one arithmetic path; the value itself is real on this domain.
    """
    lnabs, sign = _legendre_p_log(degree, order, arg)
    if sign == 0:
        return complex(0.0)
    return complex(sign * math.exp(lnabs))


# ---------------------------------------------------------------------------
# Tricomi confluent hypergeometric function via its integral representation
# ---------------------------------------------------------------------------


def _kummer_integrand_log(w: float, a: float, b: float, z: float) -> float:
    if w <= 1.0:
        return -math.inf
    return (a - 1.0) * math.log(w * w - 1.0) + (2 * b - 2 * a - 1.0) * math.log(w) - z * w * w


def kummer_u_log(a: float, b: float, z: float) -> float:
    """log of the Tricomi function U(a, b; z) for a > 0, z > 0.

    The defining Laplace integral is evaluated after the substitution
    1 + t = w^2, which removes the algebraic kink that makes the raw
    integrand slow to integrate when z is small:

        U(a,b;z) Gamma(a) = 2 e^z Int_1^inf (w^2-1)^(a-1) w^(2b-2a-1) e^{-z w^2} dw
    """
    if a <= 0:
        raise ValueError(f"kummer_u requires a > 0, got a={a}")
    if z <= 0:
        raise ValueError(f"kummer_u requires z > 0, got z={z}")
    if a < 1.0:
        return _kummer_u_log_small_a(a, b, z)

    # Locate the integrand peak on a coarse grid to rescale before quadrature.
    w_hi = max(3.0 * math.sqrt((a + abs(b) + 10.0) / z), 1.0 + 50.0 / max(z, 1.0), 10.0)
    grid = 1.0 + np.geomspace(1e-14, w_hi - 1.0, 400)
    vals = np.array([_kummer_integrand_log(w, a, b, z) for w in grid])
    k = int(np.argmax(vals))
    l_peak = float(vals[k])
    w_peak = float(grid[k])

    # Curvature at the peak sets the spike width; integrating segment by
    # segment at that scale avoids false convergence when z is large and the
    # whole mass sits within ~1/z of the endpoint.
    wp2 = w_peak * w_peak
    curv = abs(
        -2.0 * (a - 1.0) * (wp2 + 1.0) / max(wp2 - 1.0, 1e-290) ** 2
        - (2 * b - 2 * a - 1.0) / wp2
        - 2.0 * z
    )
    scale = 1.0 / math.sqrt(max(curv, 1e-290))

    def f(w):
        g = _kummer_integrand_log(w, a, b, z) - l_peak
        return math.exp(g) if g > -745.0 else 0.0

    breaks = sorted(
        {1.0}
        | {
            max(1.0, w_peak + k * scale)
            for k in (-30.0, -5.0, 0.0, 5.0, 30.0, 150.0, 1000.0)
        }
        | {max(w_hi, w_peak * 3.0)}
    )
    total = 0.0
    err = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        v, e = _quad(f, lo, hi, epsabs=1e-14, epsrel=1e-11, limit=QUAD_LIMIT)
        total += v
        err += e
    v, e = _quad(f, breaks[-1], np.inf, epsabs=1e-14, epsrel=1e-11, limit=QUAD_LIMIT)
    total += v
    err += e
    if total <= 0:
        raise ConvergenceError("kummer_u integral collapsed to zero")
    if err > 1e-9 * total:
        raise ConvergenceError("kummer_u quadrature did not reach its tolerance")
    return math.log(2.0) + z + l_peak + math.log(total) - ln_gamma(a)


def _kummer_u_log_small_a(a: float, b: float, z: float) -> float:
    """Laplace-integral route for 0 < a < 1.

    The t^(a-1) endpoint singularity is delegated to the algebraic-weight
    QUADPACK routine on a leading interval; the remainder is smooth.
    """
    power = b - a - 1.0

    def log_smooth(t: float) -> float:
        return power * math.log1p(t) - z * t

    t_peak = max(power / z - 1.0, 0.0) if power > 0 else 0.0
    l_peak = log_smooth(t_peak)
    t_hi = t_peak + (abs(power) + 50.0) / z + 10.0 / z

    def smooth(t):
        g = log_smooth(t) - l_peak
        return math.exp(g) if g > -745.0 else 0.0

    cut = min(1.0, t_hi / 2.0)
    lead, err1 = _quad(
        smooth, 0.0, cut, weight="alg", wvar=(a - 1.0, 0.0),
        epsabs=1e-14, epsrel=1e-11, limit=QUAD_LIMIT,
    )

    def full(t):
        g = (a - 1.0) * math.log(t) + log_smooth(t) - l_peak
        return math.exp(g) if g > -745.0 else 0.0

    rest, err2 = _quad(
        full, cut, t_hi, points=[p for p in (t_peak,) if cut < p < t_hi],
        epsabs=1e-14, epsrel=1e-11, limit=QUAD_LIMIT,
    )
    tail, err3 = _quad(full, t_hi, np.inf, epsabs=1e-14, epsrel=1e-11, limit=QUAD_LIMIT)
    total = lead + rest + tail
    if total <= 0:
        raise ConvergenceError("kummer_u integral collapsed to zero")
    if err1 + err2 + err3 > 1e-9 * total:
        raise ConvergenceError("kummer_u quadrature did not reach its tolerance")
    return l_peak + math.log(total) - ln_gamma(a)


def kummer_u(a: float, b: float, z: float) -> float:
    """Tricomi confluent hypergeometric function U(a, b; z)."""
    return math.exp(kummer_u_log(a, b, z))


# ---------------------------------------------------------------------------
# moments of exp(-q z - beta z^2) on [0, inf) and the parabolic-cylinder D
# ---------------------------------------------------------------------------


def gaussian_power_moment_log(nu: float, q: float, beta: float) -> float:
    """log of Int_0^inf z^nu exp(-q z - beta z^2) dz  (nu >= 0, beta > 0, q >= 0)."""
    if nu < 0 or beta <= 0 or q < 0:
        raise ValueError("need nu >= 0, q >= 0, beta > 0")

    def logf(zv: float) -> float:
        if zv <= 0.0:
            return -math.inf if nu > 0 else -q * zv - beta * zv * zv
        return nu * math.log(zv) - q * zv - beta * zv * zv

    if nu == 0:
        z_peak, l_peak = 0.0, 0.0
    else:
        z_peak = (-q + math.sqrt(q * q + 8.0 * beta * nu)) / (4.0 * beta)
        l_peak = logf(z_peak)
    width = 1.0 / math.sqrt(nu / max(z_peak, 1e-300) ** 2 + 2.0 * beta) if nu > 0 else 1.0 / math.sqrt(
        2.0 * beta + q * q / 4.0 + 1e-300
    )
    z_hi = z_peak + 60.0 * width + 10.0 / max(q + beta, 1e-3)

    def f(zv):
        g = logf(zv) - l_peak
        return math.exp(g) if g > -745.0 else 0.0

    pts = [p for p in (z_peak - 5 * width, z_peak, z_peak + 5 * width) if 0.0 < p < z_hi]
    value, err = _quad(f, 0.0, z_hi, points=pts or None, epsabs=1e-14, epsrel=1e-11,
                                limit=QUAD_LIMIT)
    if value <= 0:
        raise ConvergenceError("gaussian power moment collapsed to zero")
    if err > 1e-9 * value:
        raise ConvergenceError("gaussian power moment quadrature did not converge")
    return l_peak + math.log(value)


def gaussian_power_moment_log_table(nu_max: int, q: float, beta: float) -> np.ndarray:
    """log of the moment integral for every integer order 0..nu_max.

    Two quadrature seeds at the top orders feed the downward recurrence
    nu G(nu-1) = q G(nu) + 2 beta G(nu+1), which only ever adds positive
    quantities and is self-checked against the closed form of G(0):

        G(0) = sqrt(pi/(4 beta)) * erfcx(q / (2 sqrt(beta))) * exp(-q^2/(4 beta) + q^2/(4 beta))
    """
    if nu_max < 1:
        return np.array([gaussian_power_moment_log(n, q, beta) for n in range(nu_max + 1)])
    out = np.empty(nu_max + 2)
    out[nu_max + 1] = gaussian_power_moment_log(nu_max + 1, q, beta)
    out[nu_max] = gaussian_power_moment_log(nu_max, q, beta)
    ln_q = math.log(q) if q > 0 else -math.inf
    ln_2b = math.log(2.0 * beta)
    for nu in range(nu_max, 0, -1):
        out[nu - 1] = np.logaddexp(ln_q + out[nu], ln_2b + out[nu + 1]) - math.log(nu)
    x = q / (2.0 * math.sqrt(beta))
    ln_g0_exact = 0.5 * math.log(math.pi / (4.0 * beta)) + math.log(special.erfcx(x))
    if abs(out[0] - ln_g0_exact) > 1e-8:
        raise ConvergenceError(
            f"moment recurrence check failed: ln G(0) = {out[0]:.12f} vs exact {ln_g0_exact:.12f}"
        )
    return out[: nu_max + 1]


def parabolic_cylinder_d(order: int, arg: float) -> float:
    """Parabolic-cylinder function D_order(arg) for order = -nu-1, nu = 0, 1, ...

    Computed by inverting the Laplace-integral identity
    Int_0^inf z^nu exp(-x z - z^2/2) dz = nu! e^{x^2/4} D_{-nu-1}(x).
    """
    if arg < 0:
        raise ValueError(f"arg must be >= 0, got {arg}")
    if order != int(order) or order > -1:
        raise ValueError(f"order must be a negative integer -nu-1, got {order}")
    nu = -int(order) - 1
    ln_d = -arg * arg / 4.0 + gaussian_power_moment_log(nu, arg, 0.5) - ln_gamma(nu + 1.0)
    return math.exp(ln_d)


# ---------------------------------------------------------------------------
# the log-integral behind the Meijer-G instances used by the capacity sums
# ---------------------------------------------------------------------------


def log1p_gamma_moment(j: int, y: float) -> float:
    """E[ln(1 + y U)] with U ~ Gamma(j+1, 1); the normalized log integral.

    The unnormalized version (meijer_g_log) multiplies by j!.
    """
    if j < 0 or int(j) != j:
        raise ValueError("j must be a non-negative integer")
    if y < 0:
        raise ValueError("y must be >= 0")
    if y == 0.0:
        return 0.0
    j = int(j)
    ln_norm = ln_gamma(j + 1.0)

    def f(u):
        if u <= 0.0:
            return 0.0
        g = j * math.log(u) - u - ln_norm
        return math.exp(g) * math.log1p(y * u) if g > -700.0 else 0.0

    spread = 8.0 * math.sqrt(j + 1.0)
    pts = sorted({1.0 / y, 10.0 / y, max(j, 1e-3), j + spread, max(j - spread, 1e-6)})
    hi = j + spread + 40.0 * math.log1p(y) + 50.0
    value, err = _quad(f, 0.0, hi, points=[p for p in pts if p < hi],
                                epsabs=1e-13, epsrel=1e-11, limit=QUAD_LIMIT)
    if err > 1e-9 * max(value, 1e-12):
        raise ConvergenceError("log-moment quadrature did not converge")
    return value


def meijer_g_log(j: int, y: float) -> float:
    """The Meijer-G instance equal to Int_0^inf u^j e^{-u} ln(1 + y u) du."""
    return math.exp(ln_gamma(j + 1.0)) * log1p_gamma_moment(j, y)
