"""Pure numpy/scipy implementations of the hot numeric kernels.

Reference semantics for the numba backend: every function here has a
jitted twin in ``numba_backend`` with the same signature and the same
clamping rules. Elliptical kernels take distribution *scores* (normal or
Student-t quantiles of the uniforms) so that the expensive inverse-CDF
transforms happen once per fit, not once per objective evaluation.
"""

import numpy as np
from scipy import special, stats

BACKEND_NAME = "numpy"


def norm_cdf(x):
    return special.ndtr(np.asarray(x, dtype=np.float64))


def norm_ppf(p):
    return special.ndtri(np.asarray(p, dtype=np.float64))


def t_cdf(x, nu):
    return special.stdtr(nu, np.asarray(x, dtype=np.float64))


def t_ppf(p, nu):
    return special.stdtrit(nu, np.asarray(p, dtype=np.float64))


def t_ppf_warm(p, nu, x0):
    # The scipy inverse has no warm-start entry point; starts are ignored.
    return special.stdtrit(nu, np.asarray(p, dtype=np.float64))


def t_marginal_nll(x, loc, scale, nu):
    z = (x - loc) / scale
    c = (special.gammaln((nu + 1.0) / 2.0) - special.gammaln(nu / 2.0)
         - 0.5 * np.log(nu * np.pi) - np.log(scale))
    return -float(np.sum(c - 0.5 * (nu + 1.0) * np.log1p(z * z / nu)))


def skewt_marginal_nll(x, loc, scale, nu, gamma):
    z = (x - loc) / scale
    zs = np.where(z >= 0.0, z / gamma, z * gamma)
    c = (special.gammaln((nu + 1.0) / 2.0) - special.gammaln(nu / 2.0)
         - 0.5 * np.log(nu * np.pi) - np.log(scale)
         + np.log(2.0 * gamma / (1.0 + gamma * gamma)))
    return -float(np.sum(c - 0.5 * (nu + 1.0) * np.log1p(zs * zs / nu)))


def gauss_logpdf(x, y, rho):
    """Pointwise Gaussian copula log-density; x, y are normal scores."""
    r2 = 1.0 - rho * rho
    q = rho * rho * (x * x + y * y) - 2.0 * rho * x * y
    return -0.5 * np.log(r2) - q / (2.0 * r2)


def gauss_h(x, y, rho):
    """h(u|v) = dC/dv in u-space; x, y are normal scores of (u, v)."""
    return special.ndtr((x - rho * y) / np.sqrt(1.0 - rho * rho))


def gauss_hinv(zw, y, rho):
    """Inverse h; zw is the normal score of the target quantile w."""
    return special.ndtr(zw * np.sqrt(1.0 - rho * rho) + rho * y)


def t_logpdf(x, y, rho, nu):
    """Pointwise Student-t copula log-density; x, y are t(nu) scores."""
    c0 = (special.gammaln((nu + 2.0) / 2.0) + special.gammaln(nu / 2.0)
          - 2.0 * special.gammaln((nu + 1.0) / 2.0))
    r2 = 1.0 - rho * rho
    q = (x * x - 2.0 * rho * x * y + y * y) / (nu * r2)
    return (c0 - 0.5 * np.log(r2)
            - 0.5 * (nu + 2.0) * np.log1p(q)
            + 0.5 * (nu + 1.0) * (np.log1p(x * x / nu) + np.log1p(y * y / nu)))


def t_h(x, y, rho, nu):
    """h(u|v) for the t copula; x, y are t(nu) scores of (u, v)."""
    s = np.sqrt((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0))
    return special.stdtr(nu + 1.0, (x - rho * y) / s)


def t_hinv(q, y, rho, nu):
    """Inverse h for the t copula; q is the t(nu+1) score of the target w."""
    s = np.sqrt((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0))
    return special.stdtr(nu, q * s + rho * y)


def clayton_logpdf(u, v, theta):
    a = u ** (-theta) + v ** (-theta) - 1.0
    return (np.log1p(theta) - (1.0 + theta) * (np.log(u) + np.log(v))
            - (2.0 + 1.0 / theta) * np.log(a))


def clayton_h(u, v, theta):
    a = u ** (-theta) + v ** (-theta) - 1.0
    return np.exp(-(theta + 1.0) * np.log(v) - (1.0 + 1.0 / theta) * np.log(a))


def clayton_hinv(w, v, theta):
    b = np.exp(-theta / (theta + 1.0) * np.log(w) - theta * np.log(v))
    return (b - v ** (-theta) + 1.0) ** (-1.0 / theta)


def frank_logpdf(u, v, theta):
    # D = e^{-tu} + e^{-tv} - e^{-t} - e^{-t(u+v)} avoids the 1-1 cancellation
    # of the textbook denominator for theta > 0.
    d = (np.exp(-theta * u) + np.exp(-theta * v)
         - np.exp(-theta) - np.exp(-theta * (u + v)))
    c = theta * (1.0 - np.exp(-theta))
    return np.log(np.abs(c)) - theta * (u + v) - 2.0 * np.log(np.abs(d))


def frank_h(u, v, theta):
    eu = np.expm1(-theta * u)
    ev = np.expm1(-theta * v)
    et = np.expm1(-theta)
    return (ev + 1.0) * eu / (et + eu * ev)


def frank_hinv(w, v, theta):
    ev = np.expm1(-theta * v)
    et = np.expm1(-theta)
    return -np.log1p(w * et / (1.0 + (1.0 - w) * ev)) / theta


def kendall_tau(x, y):
    """Kendall tau-a: (concordant - discordant) / (n(n-1)/2).

    Reconstructed from scipy's tau-b and the tie counts; identical to the
    pair-count definition for tie-free data.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    n0 = n * (n - 1) / 2.0
    _, cx = np.unique(x, return_counts=True)
    _, cy = np.unique(y, return_counts=True)
    xtie = float(np.sum(cx * (cx - 1)) / 2.0)
    ytie = float(np.sum(cy * (cy - 1)) / 2.0)
    if xtie >= n0 or ytie >= n0:
        raise ValueError("kendall_tau undefined for constant input")
    tau_b = stats.kendalltau(x, y).statistic
    con_minus_dis = tau_b * np.sqrt((n0 - xtie) * (n0 - ytie))
    return float(con_minus_dis / n0)
