"""Self-contained statistical routines used across the pipeline.

Implements exactly what the pipeline needs, with no dependency on scipy:
two-sample t test (Welch by default, pooled Student as an option), the
Shapiro-Wilk and Lilliefors-corrected Kolmogorov-Smirnov normality tests,
the paired Wilcoxon signed-rank test, and descriptive summaries.  The only
distribution functions implemented are the standard normal CDF/inverse CDF
and the central t CDF (via the regularized incomplete beta function); all
tests reduce to these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "normal_cdf",
    "normal_ppf",
    "t_cdf",
    "TTestResult",
    "welch_t",
    "ShapiroResult",
    "shapiro_wilk",
    "KsResult",
    "ks_normality",
    "WilcoxonResult",
    "wilcoxon_signed_rank",
    "Describe",
    "describe",
]


# ======================================================================
# distribution functions
# ======================================================================

_SQRT2 = math.sqrt(2.0)


def normal_cdf(x):
    """Standard normal CDF; accepts scalars or arrays."""
    if np.isscalar(x):
        return 0.5 * math.erfc(-float(x) / _SQRT2)
    arr = np.asarray(x, dtype=float)
    out = np.empty_like(arr)
    flat_in = arr.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = 0.5 * math.erfc(-flat_in[i] / _SQRT2)
    return out


def _normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


# Rational approximation coefficients (Acklam); one Halley step below brings
# the result to full double precision.
_PPF_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
          1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_PPF_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
          6.680131188771972e+01, -1.328068155288572e+01)
_PPF_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
          -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_PPF_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
          3.754408661907416e+00)


def _normal_ppf_scalar(p: float) -> float:
    if not 0.0 < p < 1.0:
        if p == 0.0:
            return -math.inf
        if p == 1.0:
            return math.inf
        raise ValueError(f"probability must lie in [0, 1], got {p!r}")
    a, b, c, d = _PPF_A, _PPF_B, _PPF_C, _PPF_D
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    # Halley refinement against the exact CDF
    e = 0.5 * math.erfc(-x / _SQRT2) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    return x


def normal_ppf(p):
    """Standard normal inverse CDF; accepts scalars or arrays."""
    if np.isscalar(p):
        return _normal_ppf_scalar(float(p))
    arr = np.asarray(p, dtype=float)
    out = np.empty_like(arr)
    flat_in = arr.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = _normal_ppf_scalar(flat_in[i])
    return out


def _betacf(a: float, b: float, x: float) -> float:
    # continued-fraction evaluation of the incomplete beta (Lentz)
    max_iter = 300
    eps = 3.0e-16
    fpmin = 1.0e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h


def _betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
             + a * math.log(x) + b * math.log1p(-x))
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def t_cdf(x: float, df: float) -> float:
    """CDF of the central t distribution with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df!r}")
    x = float(x)
    if x == 0.0:
        return 0.5
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    tail = 0.5 * _betainc(0.5 * df, 0.5, df / (df + x * x))
    return 1.0 - tail if x > 0 else tail


# ======================================================================
# two-sample t test
# ======================================================================

@dataclass(frozen=True)
class TTestResult:
    statistic: float
    df: float
    p_value: float
    method: str  # "welch" | "pooled"


def welch_t(a, b, *, pooled: bool = False) -> TTestResult:
    """Two-sided two-sample t test of mean(a) - mean(b).

    Welch's unequal-variance form by default; ``pooled=True`` switches to the
    classical pooled-variance Student test.  Both samples need n >= 2.  If
    both sample variances are zero the statistic is undefined for equal means
    (raises); for unequal means the test is degenerate and returns
    ``t = +-inf, p = 0``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    n1, n2 = a.size, b.size
    if n1 < 2 or n2 < 2:
        raise ValueError(f"both samples need at least 2 values, got {n1} and {n2}")
    m1, m2 = float(a.mean()), float(b.mean())
    v1, v2 = float(a.var(ddof=1)), float(b.var(ddof=1))
    diff = m1 - m2
    method = "pooled" if pooled else "welch"
    if v1 == 0.0 and v2 == 0.0:
        if diff == 0.0:
            raise ValueError("t statistic undefined: both variances zero and means equal")
        return TTestResult(math.copysign(math.inf, diff), math.inf, 0.0, method)
    if pooled:
        sp2 = ((n1 - 1) * v1 + (n2 - 1) * v2) / (n1 + n2 - 2)
        se = math.sqrt(sp2 * (1.0 / n1 + 1.0 / n2))
        df = float(n1 + n2 - 2)
    else:
        q1, q2 = v1 / n1, v2 / n2
        se = math.sqrt(q1 + q2)
        df = (q1 + q2) ** 2 / (q1 * q1 / (n1 - 1) + q2 * q2 / (n2 - 1))
    t = diff / se
    p = 2.0 * (1.0 - t_cdf(abs(t), df))
    return TTestResult(t, df, min(1.0, max(0.0, p)), method)


# ======================================================================
# Shapiro-Wilk (Royston's approximation)
# ======================================================================

@dataclass(frozen=True)
class ShapiroResult:
    statistic: float
    p_value: float
    n: int


def _poly(coeffs: tuple[float, ...], x: float) -> float:
    # coeffs in increasing-power order
    out = 0.0
    for c in reversed(coeffs):
        out = out * x + c
    return out


def shapiro_wilk(x) -> ShapiroResult:
    """Shapiro-Wilk normality test for 3 <= n <= 5000.

    Royston's polynomial approximation to the weights and to the null
    distribution of W.  Raises for n outside the supported range or a
    zero-range sample.
    """
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    if n < 3 or n > 5000:
        raise ValueError(f"shapiro_wilk supports 3 <= n <= 5000, got {n}")
    if x[-1] == x[0]:
        raise ValueError("shapiro_wilk undefined for a zero-range sample")

    m = normal_ppf((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    msum = float(np.dot(m, m))
    rsn = 1.0 / math.sqrt(n)
    if n == 3:
        a = np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    else:
        a_n = _poly((0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056), rsn) \
            + m[-1] / math.sqrt(msum)
        if n > 5:
            a_n1 = _poly((0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633), rsn) \
                + m[-2] / math.sqrt(msum)
            phi = (msum - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / \
                  (1.0 - 2.0 * a_n ** 2 - 2.0 * a_n1 ** 2)
            a = m / math.sqrt(phi)
            a[-1], a[-2] = a_n, a_n1
            a[0], a[1] = -a_n, -a_n1
        else:
            phi = (msum - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n ** 2)
            a = m / math.sqrt(phi)
            a[-1] = a_n
            a[0] = -a_n
    num = float(np.dot(a, x)) ** 2
    den = float(np.sum((x - x.mean()) ** 2))
    w = num / den
    w = min(w, 1.0)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        p = min(1.0, max(0.0, p))
    elif n <= 11:
        g = -2.273 + 0.459 * n
        mu = _poly((0.5440, -0.39978, 0.025054, -6.714e-4), float(n))
        sigma = math.exp(_poly((1.3822, -0.77857, 0.062767, -0.0020322), float(n)))
        if g - math.log(1.0 - w) <= 0.0:
            p = 0.0
        else:
            z = (-math.log(g - math.log(1.0 - w)) - mu) / sigma
            p = 1.0 - normal_cdf(z)
    else:
        ln_n = math.log(n)
        mu = _poly((-1.5861, -0.31082, -0.083751, 0.0038915), ln_n)
        sigma = math.exp(_poly((-0.4803, -0.082676, 0.0030302), ln_n))
        z = (math.log(1.0 - w) - mu) / sigma
        p = 1.0 - normal_cdf(z)
    return ShapiroResult(w, p, n)


# ======================================================================
# Kolmogorov-Smirnov normality test (estimated parameters)
# ======================================================================

@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    n: int


def ks_normality(x) -> KsResult:
    """One-sample KS test against a normal with estimated mean/SD.

    Because the parameters are estimated from the data, the plain KS null
    distribution does not apply; the p-value uses the Dallal-Wilkinson
    approximation for the Lilliefors statistic.  That approximation is
    accurate for p below roughly 0.1; larger values are clamped to [0, 1]
    and should be read only as "not rejected".  Requires n >= 5 and a
    nonzero sample SD.
    """
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    if n < 5:
        raise ValueError(f"ks_normality needs n >= 5, got {n}")
    mu = float(x.mean())
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        raise ValueError("ks_normality undefined for a zero-range sample")
    f = normal_cdf((x - mu) / sd)
    i = np.arange(1, n + 1, dtype=float)
    d_plus = float(np.max(i / n - f))
    d_minus = float(np.max(f - (i - 1.0) / n))
    d = max(d_plus, d_minus)
    nc = n + 2.78019
    log_p = (-7.01256 * d * d * nc + 2.99587 * d * math.sqrt(nc)
             - 0.122119 + 0.974598 / math.sqrt(n) + 1.67997 / n)
    p = min(1.0, max(0.0, math.exp(log_p)))
    return KsResult(d, p, n)


# ======================================================================
# Wilcoxon signed-rank test
# ======================================================================

@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # sum of positive ranks
    p_value: float
    n_effective: int  # pairs remaining after zero differences are dropped
    method: str  # "exact" | "normal"


_EXACT_LIMIT = 25


def _wilcoxon_exact_p(w_plus: int, n: int) -> float:
    # distribution of the positive-rank sum over all 2^n sign assignments,
    # built by dynamic programming over ranks 1..n
    total = n * (n + 1) // 2
    dist = np.zeros(total + 1, dtype=np.int64)
    dist[0] = 1
    for r in range(1, n + 1):
        dist[r:] = dist[r:] + dist[:-r]
    lo = int(dist[: w_plus + 1].sum())
    hi = int(dist[w_plus:].sum())
    return min(1.0, 2.0 * min(lo, hi) / float(2 ** n))


def wilcoxon_signed_rank(a, b) -> WilcoxonResult:
    """Two-sided paired Wilcoxon signed-rank test.

    Zero differences are dropped; tied absolute differences get midranks.
    The null distribution is enumerated exactly when the effective n is at
    most 25 and there are no ties; otherwise a normal approximation with
    tie and continuity corrections is used.  Identical inputs give p = 1.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be one-dimensional and equal length")
    d = a - b
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, "exact")
    absd = np.abs(d)
    order = np.argsort(absd, kind="stable")
    sorted_abs = absd[order]
    ranks = np.empty(n, dtype=float)
    # midranks over runs of equal absolute difference
    i = 0
    tie_sizes = []
    while i < n:
        j = i
        while j < n and sorted_abs[j] == sorted_abs[i]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + 1 + j)
        tie_sizes.append(j - i)
        i = j
    w_plus = float(ranks[d > 0].sum())
    has_ties = any(t > 1 for t in tie_sizes)

    if n <= _EXACT_LIMIT and not has_ties:
        p = _wilcoxon_exact_p(int(round(w_plus)), n)
        return WilcoxonResult(w_plus, p, n, "exact")

    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    var -= sum(t ** 3 - t for t in tie_sizes) / 48.0
    if var <= 0.0:
        return WilcoxonResult(w_plus, 1.0, n, "normal")
    num = w_plus - mean
    # continuity correction toward the mean
    num -= math.copysign(0.5, num) if num != 0.0 else 0.0
    z = num / math.sqrt(var)
    p = min(1.0, 2.0 * (1.0 - normal_cdf(abs(z))))
    return WilcoxonResult(w_plus, p, n, "normal")


# ======================================================================
# descriptive summary
# ======================================================================

@dataclass(frozen=True)
class Describe:
    n: int
    mean: float
    sd: float
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


def describe(x) -> Describe:
    """Mean, sample SD and linear-interpolation quantiles; n=1 gives sd=0."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("describe needs a nonempty one-dimensional sample")
    n = x.size
    sd = 0.0 if n == 1 else float(x.std(ddof=1))
    q1, med, q3 = (float(q) for q in np.quantile(x, (0.25, 0.5, 0.75)))
    return Describe(n, float(x.mean()), sd, float(x.min()), q1, med, q3, float(x.max()))
