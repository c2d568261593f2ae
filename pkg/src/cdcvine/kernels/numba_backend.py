"""Numba-jitted twins of the numpy kernel set.

Self-contained special functions so the hot loops never leave nopython
mode: the normal CDF goes through ``math.erfc``, the normal quantile is
Wichura's PPND16 rational approximation, and the Student-t CDF uses the
regularised incomplete beta via the Lentz continued fraction. Accuracy
versus scipy is ~1e-14 (checked in tests/test_kernels.py).

fastmath stays off: runs must be reproducible bit-for-bit for a fixed
backend, and the numpy twin is the semantic reference.
"""

import math

import numpy as np
from numba import njit

BACKEND_NAME = "numba"

_FPMIN = 1e-300
_CF_EPS = 3e-16
_CF_MAXIT = 300


@njit(cache=True)
def _ndtr1(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@njit(cache=True)
def _ndtri1(p):
    # Wichura (1988) algorithm AS241, PPND16.
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    if q < 0.0:
        val = -val
    return val


@njit(cache=True)
def _betacf(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        de = d * c
        h *= de
        if abs(de - 1.0) < _CF_EPS:
            break
    return h


@njit(cache=True)
def _betai(a, b, x):
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    lbt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
           + a * math.log(x) + b * math.log(1.0 - x))
    bt = math.exp(lbt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


@njit(cache=True)
def _t_cdf1(x, nu):
    if x == 0.0:
        return 0.5
    p = 0.5 * _betai(0.5 * nu, 0.5, nu / (nu + x * x))
    if x > 0.0:
        return 1.0 - p
    return p


@njit(cache=True)
def _t_logpdf1(x, nu):
    return (math.lgamma((nu + 1.0) / 2.0) - math.lgamma(nu / 2.0)
            - 0.5 * math.log(nu * math.pi)
            - 0.5 * (nu + 1.0) * math.log1p(x * x / nu))


@njit(cache=True)
def _t_ppf1(p, nu):
    # Cornish-Fisher (or power-tail) start, then Newton safeguarded by
    # bisection on the monotone CDF. Solves the lower half and mirrors.
    if p == 0.5:
        return 0.0
    neg = p < 0.5
    pp = p if neg else 1.0 - p

    z = _ndtri1(pp)
    if pp < 0.01 and nu < 20.0:
        # Power tail: T(x) ~ A |x|^-nu / nu for x -> -inf.
        la = (math.lgamma((nu + 1.0) / 2.0) - math.lgamma(nu / 2.0)
              - 0.5 * math.log(nu * math.pi) + 0.5 * (nu + 1.0) * math.log(nu))
        x = -math.exp((la - math.log(nu) - math.log(pp)) / nu)
    else:
        z2 = z * z
        g1 = z * (z2 + 1.0) / 4.0
        g2 = z * (5.0 * z2 * z2 + 16.0 * z2 + 3.0) / 96.0
        g3 = z * (3.0 * z2 ** 3 + 19.0 * z2 * z2 + 17.0 * z2 - 15.0) / 384.0
        g4 = z * (79.0 * z2 ** 4 + 776.0 * z2 ** 3 + 1482.0 * z2 * z2
                  - 1920.0 * z2 - 945.0) / 92160.0
        x = z + g1 / nu + g2 / (nu * nu) + g3 / nu ** 3 + g4 / nu ** 4
    if x >= 0.0:
        x = z if z < 0.0 else -1.0

    lo = x
    for _ in range(300):
        if _t_cdf1(lo, nu) <= pp:
            break
        lo = lo * 2.0 - 1.0
    hi = 0.0
    if x <= lo or x >= hi:
        x = 0.5 * (lo + hi)
    for _ in range(100):
        f = _t_cdf1(x, nu) - pp
        if f > 0.0:
            hi = x
        else:
            lo = x
        dens = math.exp(_t_logpdf1(x, nu))
        if dens > 0.0:
            xn = x - f / dens
        else:
            xn = 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-12 * (1.0 + abs(xn)):
            x = xn
            break
        x = xn
    return x if neg else -x


@njit(cache=True)
def t_ppf(p, nu):
    out = np.empty(p.shape[0])
    for i in range(p.shape[0]):
        out[i] = _t_ppf1(p[i], nu)
    return out


@njit(cache=True)
def _t_ppf1_from(p, nu, x0):
    # Newton from an external start (the solution at a nearby nu),
    # bisection-safeguarded; falls back to the cold path on bad brackets.
    if p == 0.5:
        return 0.0
    neg = p < 0.5
    pp = p if neg else 1.0 - p
    x = x0 if neg else -x0
    if x >= 0.0:
        return _t_ppf1(p, nu)
    lo = x
    for _ in range(200):
        if _t_cdf1(lo, nu) <= pp:
            break
        lo = lo * 2.0 - 1.0
    hi = 0.0
    if x <= lo:
        x = 0.5 * (lo + hi)
    for _ in range(100):
        f = _t_cdf1(x, nu) - pp
        if f > 0.0:
            hi = x
        else:
            lo = x
        dens = math.exp(_t_logpdf1(x, nu))
        if dens > 0.0:
            xn = x - f / dens
        else:
            xn = 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-12 * (1.0 + abs(xn)):
            x = xn
            break
        x = xn
    return x if neg else -x


@njit(cache=True)
def t_ppf_warm(p, nu, x0):
    out = np.empty(p.shape[0])
    for i in range(p.shape[0]):
        out[i] = _t_ppf1_from(p[i], nu, x0[i])
    return out


@njit(cache=True)
def t_marginal_nll(x, loc, scale, nu):
    c = (math.lgamma((nu + 1.0) / 2.0) - math.lgamma(nu / 2.0)
         - 0.5 * math.log(nu * math.pi) - math.log(scale))
    total = 0.0
    for i in range(x.shape[0]):
        z = (x[i] - loc) / scale
        total += c - 0.5 * (nu + 1.0) * math.log1p(z * z / nu)
    return -total


@njit(cache=True)
def skewt_marginal_nll(x, loc, scale, nu, gamma):
    c = (math.lgamma((nu + 1.0) / 2.0) - math.lgamma(nu / 2.0)
         - 0.5 * math.log(nu * math.pi) - math.log(scale)
         + math.log(2.0 * gamma / (1.0 + gamma * gamma)))
    total = 0.0
    for i in range(x.shape[0]):
        z = (x[i] - loc) / scale
        zs = z / gamma if z >= 0.0 else z * gamma
        total += c - 0.5 * (nu + 1.0) * math.log1p(zs * zs / nu)
    return -total


@njit(cache=True)
def norm_cdf(x):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = _ndtr1(x[i])
    return out


@njit(cache=True)
def norm_ppf(p):
    out = np.empty(p.shape[0])
    for i in range(p.shape[0]):
        out[i] = _ndtri1(p[i])
    return out


@njit(cache=True)
def t_cdf(x, nu):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = _t_cdf1(x[i], nu)
    return out


@njit(cache=True)
def gauss_logpdf(x, y, rho):
    r2 = 1.0 - rho * rho
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        q = rho * rho * (x[i] * x[i] + y[i] * y[i]) - 2.0 * rho * x[i] * y[i]
        out[i] = -0.5 * math.log(r2) - q / (2.0 * r2)
    return out


@njit(cache=True)
def gauss_h(x, y, rho):
    s = math.sqrt(1.0 - rho * rho)
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = _ndtr1((x[i] - rho * y[i]) / s)
    return out


@njit(cache=True)
def gauss_hinv(zw, y, rho):
    s = math.sqrt(1.0 - rho * rho)
    out = np.empty(zw.shape[0])
    for i in range(zw.shape[0]):
        out[i] = _ndtr1(zw[i] * s + rho * y[i])
    return out


@njit(cache=True)
def t_logpdf(x, y, rho, nu):
    c0 = (math.lgamma((nu + 2.0) / 2.0) + math.lgamma(nu / 2.0)
          - 2.0 * math.lgamma((nu + 1.0) / 2.0))
    r2 = 1.0 - rho * rho
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        q = (x[i] * x[i] - 2.0 * rho * x[i] * y[i] + y[i] * y[i]) / (nu * r2)
        out[i] = (c0 - 0.5 * math.log(r2)
                  - 0.5 * (nu + 2.0) * math.log1p(q)
                  + 0.5 * (nu + 1.0) * (math.log1p(x[i] * x[i] / nu)
                                        + math.log1p(y[i] * y[i] / nu)))
    return out


@njit(cache=True)
def t_h(x, y, rho, nu):
    r2 = 1.0 - rho * rho
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        s = math.sqrt((nu + y[i] * y[i]) * r2 / (nu + 1.0))
        out[i] = _t_cdf1((x[i] - rho * y[i]) / s, nu + 1.0)
    return out


@njit(cache=True)
def t_hinv(q, y, rho, nu):
    r2 = 1.0 - rho * rho
    out = np.empty(q.shape[0])
    for i in range(q.shape[0]):
        s = math.sqrt((nu + y[i] * y[i]) * r2 / (nu + 1.0))
        out[i] = _t_cdf1(q[i] * s + rho * y[i], nu)
    return out


@njit(cache=True)
def clayton_logpdf(u, v, theta):
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        a = u[i] ** (-theta) + v[i] ** (-theta) - 1.0
        out[i] = (math.log1p(theta)
                  - (1.0 + theta) * (math.log(u[i]) + math.log(v[i]))
                  - (2.0 + 1.0 / theta) * math.log(a))
    return out


@njit(cache=True)
def clayton_h(u, v, theta):
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        a = u[i] ** (-theta) + v[i] ** (-theta) - 1.0
        out[i] = math.exp(-(theta + 1.0) * math.log(v[i])
                          - (1.0 + 1.0 / theta) * math.log(a))
    return out


@njit(cache=True)
def clayton_hinv(w, v, theta):
    out = np.empty(w.shape[0])
    for i in range(w.shape[0]):
        b = math.exp(-theta / (theta + 1.0) * math.log(w[i])
                     - theta * math.log(v[i]))
        out[i] = (b - v[i] ** (-theta) + 1.0) ** (-1.0 / theta)
    return out


@njit(cache=True)
def frank_logpdf(u, v, theta):
    c = theta * (1.0 - math.exp(-theta))
    lc = math.log(abs(c))
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        d = (math.exp(-theta * u[i]) + math.exp(-theta * v[i])
             - math.exp(-theta) - math.exp(-theta * (u[i] + v[i])))
        out[i] = lc - theta * (u[i] + v[i]) - 2.0 * math.log(abs(d))
    return out


@njit(cache=True)
def frank_h(u, v, theta):
    et = math.expm1(-theta)
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        eu = math.expm1(-theta * u[i])
        ev = math.expm1(-theta * v[i])
        out[i] = (ev + 1.0) * eu / (et + eu * ev)
    return out


@njit(cache=True)
def frank_hinv(w, v, theta):
    et = math.expm1(-theta)
    out = np.empty(w.shape[0])
    for i in range(w.shape[0]):
        ev = math.expm1(-theta * v[i])
        out[i] = -math.log1p(w[i] * et / (1.0 + (1.0 - w[i]) * ev)) / theta
    return out


@njit(cache=True)
def _merge_count(arr):
    # Strict inversion count (ties are not inversions).
    n = arr.shape[0]
    tmp = np.empty(n)
    count = 0
    width = 1
    while width < n:
        start = 0
        while start < n:
            mid = min(start + width, n)
            end = min(start + 2 * width, n)
            i = start
            j = mid
            k = start
            while i < mid and j < end:
                if arr[j] < arr[i]:
                    tmp[k] = arr[j]
                    j += 1
                    count += mid - i
                else:
                    tmp[k] = arr[i]
                    i += 1
                k += 1
            while i < mid:
                tmp[k] = arr[i]
                i += 1
                k += 1
            while j < end:
                tmp[k] = arr[j]
                j += 1
                k += 1
            for m in range(start, end):
                arr[m] = tmp[m]
            start += 2 * width
        width *= 2
    return count


@njit(cache=True)
def kendall_tau(x, y):
    """Kendall tau-a via Knight's O(n log n) algorithm with tie counts."""
    n = x.shape[0]
    n0 = n * (n - 1) / 2.0
    # Lexicographic (x, y) order: stable sort by y, then stable sort by x.
    oy = np.argsort(y, kind="mergesort")
    x1 = x[oy]
    y1 = y[oy]
    ox = np.argsort(x1, kind="mergesort")
    xs = x1[ox]
    ys = y1[ox]

    xtie = 0.0
    ntie = 0.0
    run_x = 1
    run_xy = 1
    for i in range(1, n):
        if xs[i] == xs[i - 1]:
            run_x += 1
            if ys[i] == ys[i - 1]:
                run_xy += 1
            else:
                ntie += run_xy * (run_xy - 1) / 2.0
                run_xy = 1
        else:
            xtie += run_x * (run_x - 1) / 2.0
            ntie += run_xy * (run_xy - 1) / 2.0
            run_x = 1
            run_xy = 1
    xtie += run_x * (run_x - 1) / 2.0
    ntie += run_xy * (run_xy - 1) / 2.0

    ytie = 0.0
    y_sorted = np.sort(y)
    run_y = 1
    for i in range(1, n):
        if y_sorted[i] == y_sorted[i - 1]:
            run_y += 1
        else:
            ytie += run_y * (run_y - 1) / 2.0
            run_y = 1
    ytie += run_y * (run_y - 1) / 2.0

    if xtie >= n0 or ytie >= n0:
        raise ValueError("kendall_tau undefined for constant input")

    dis = _merge_count(ys.copy())
    con_minus_dis = n0 - xtie - ytie + ntie - 2.0 * dis
    return con_minus_dis / n0
