"""Homoscedastic marginal families, AIC selection and PIT transforms.

Three families are fitted per series by maximum likelihood and the AIC
winner kept: Normal (2 params), Student's-t (3) and the two-piece skew
Student's-t (4, skew parameter gamma > 0 with gamma = 1 symmetric).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from . import kernels as K
from .errors import FitError, InputError

NORMAL = "Normal"
STUDENT_T = "StudentT"
SKEW_STUDENT_T = "SkewStudentT"
FAMILIES = (NORMAL, STUDENT_T, SKEW_STUDENT_T)
N_PARAMS = {NORMAL: 2, STUDENT_T: 3, SKEW_STUDENT_T: 4}

MIN_OBS = 30
NU_MIN = 2.01
NU_MAX = 200.0
PIT_EPS = 1e-12


@dataclass(frozen=True)
class MarginalFit:
    family: str
    params: dict
    loglik: float
    aic: float
    n_obs: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown marginal family {self.family!r}")
        if self.params["scale"] <= 0:
            raise InputError("scale must be positive")
        if "nu" in self.params and self.params["nu"] <= 2:
            raise InputError("degrees of freedom must exceed 2")
        if "gamma" in self.params and self.params["gamma"] <= 0:
            raise InputError("skew parameter must be positive")

    def to_dict(self):
        return {
            "family": self.family,
            "params": {k: float(v) for k, v in sorted(self.params.items())},
            "loglik": float(self.loglik),
            "aic": float(self.aic),
            "n_obs": int(self.n_obs),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(family=d["family"], params=dict(d["params"]),
                   loglik=d["loglik"], aic=d["aic"], n_obs=d["n_obs"])


def _t_logpdf_std(z, nu):
    return (special.gammaln((nu + 1.0) / 2.0) - special.gammaln(nu / 2.0)
            - 0.5 * math.log(nu * math.pi)
            - 0.5 * (nu + 1.0) * np.log1p(z * z / nu))


def _skewt_logpdf_std(z, nu, gamma):
    zs = np.where(z >= 0.0, z / gamma, z * gamma)
    return math.log(2.0 * gamma / (1.0 + gamma * gamma)) + _t_logpdf_std(zs, nu)


def marginal_logpdf(fit, x):
    x = np.asarray(x, dtype=np.float64)
    loc, scale = fit.params["loc"], fit.params["scale"]
    z = (x - loc) / scale
    if fit.family == NORMAL:
        lp = -0.5 * z * z - 0.5 * math.log(2.0 * math.pi)
    elif fit.family == STUDENT_T:
        lp = _t_logpdf_std(z, fit.params["nu"])
    else:
        lp = _skewt_logpdf_std(z, fit.params["nu"], fit.params["gamma"])
    return lp - math.log(scale)


def marginal_pdf(fit, x):
    return np.exp(marginal_logpdf(fit, x))


def marginal_cdf(fit, x):
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 0
    loc, scale = fit.params["loc"], fit.params["scale"]
    z = np.atleast_1d((x - loc) / scale)
    if fit.family == NORMAL:
        out = K.norm_cdf(z)
    elif fit.family == STUDENT_T:
        out = K.t_cdf(z, fit.params["nu"])
    else:
        nu, g = fit.params["nu"], fit.params["gamma"]
        g2 = g * g
        lower = 2.0 / (1.0 + g2) * K.t_cdf(g * z, nu)
        upper = (1.0 + g2 * (2.0 * K.t_cdf(z / g, nu) - 1.0)) / (1.0 + g2)
        out = np.where(z < 0.0, lower, upper)
    return float(out[0]) if scalar else out


def marginal_quantile(fit, u):
    u = np.asarray(u, dtype=np.float64)
    scalar = u.ndim == 0
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise InputError("quantile argument must lie strictly inside (0, 1)")
    u = np.atleast_1d(u)
    loc, scale = fit.params["loc"], fit.params["scale"]
    if fit.family == NORMAL:
        z = K.norm_ppf(u)
    elif fit.family == STUDENT_T:
        z = K.t_ppf(u, fit.params["nu"])
    else:
        nu, g = fit.params["nu"], fit.params["gamma"]
        g2 = g * g
        u0 = 1.0 / (1.0 + g2)
        lower = u < u0
        p = np.where(lower,
                     u * (1.0 + g2) / 2.0,
                     (1.0 + (u * (1.0 + g2) - 1.0) / g2) / 2.0)
        z = K.t_ppf(np.clip(p, PIT_EPS, 1.0 - PIT_EPS), nu)
        z = np.where(lower, z / g, z * g)
    out = loc + scale * z
    return float(out[0]) if scalar else out


def _fit_normal(x):
    loc = float(np.mean(x))
    scale = float(np.sqrt(np.mean((x - loc) ** 2)))
    n = x.size
    loglik = float(-0.5 * n * (1.0 + math.log(2.0 * math.pi)) - n * math.log(scale))
    return {"loc": loc, "scale": scale}, loglik


def _mle(x, family, start):
    """MLE on transformed coordinates (log scale, log(nu-2), log gamma)."""

    def unpack(p):
        params = {"loc": p[0], "scale": math.exp(p[1])}
        if family in (STUDENT_T, SKEW_STUDENT_T):
            params["nu"] = 2.0 + math.exp(p[2])
        if family == SKEW_STUDENT_T:
            params["gamma"] = math.exp(p[3])
        return params

    def nll(p):
        params = unpack(p)
        if family == STUDENT_T:
            val = K.t_marginal_nll(x, params["loc"], params["scale"],
                                   params["nu"])
        else:
            val = K.skewt_marginal_nll(x, params["loc"], params["scale"],
                                       params["nu"], params["gamma"])
        return val if np.isfinite(val) else 1e12

    bounds = [(None, None), (None, None),
              (math.log(NU_MIN - 2.0), math.log(NU_MAX - 2.0))]
    if family == SKEW_STUDENT_T:
        bounds.append((math.log(0.1), math.log(10.0)))
    res = optimize.minimize(nll, start, method="L-BFGS-B", bounds=bounds,
                            options={"ftol": 1e-11, "gtol": 1e-7, "maxiter": 300})
    if not res.success:
        res2 = optimize.minimize(nll, res.x, method="Nelder-Mead",
                                 options={"xatol": 1e-6, "fatol": 1e-10,
                                          "maxiter": 4000})
        if res2.fun <= res.fun:
            res = res2
    if not np.isfinite(res.fun):
        raise FitError(f"{family} marginal fit diverged")
    return unpack(res.x), float(-res.fun)


def fit_marginal(series, families=FAMILIES):
    """Fit the candidate families by MLE and return the minimal-AIC one.

    AIC = 2k - 2 loglik; exact ties break toward fewer parameters.
    Raises FitError with per-family diagnostics if no family converges.
    """
    x = np.asarray(series, dtype=np.float64).ravel()
    if x.size < MIN_OBS:
        raise InputError(f"need >= {MIN_OBS} observations, got {x.size}")
    if np.unique(x).size < 2:
        raise InputError("cannot fit a marginal to a constant series")

    loc0 = float(np.mean(x))
    sd0 = float(np.std(x))
    # Kurtosis-matched start: kurt = 3(nu-2)/(nu-4) for nu > 4.
    centred = x - loc0
    kurt = float(np.mean(centred ** 4) / np.mean(centred ** 2) ** 2)
    nu0 = (4.0 * kurt - 6.0) / (kurt - 3.0) if kurt > 3.2 else 30.0
    nu0 = float(np.clip(nu0, 2.5, 100.0))
    log_s0 = math.log(sd0 * math.sqrt((nu0 - 2.0) / nu0))
    starts = {
        STUDENT_T: [loc0, log_s0, math.log(nu0 - 2.0)],
        SKEW_STUDENT_T: [loc0, log_s0, math.log(nu0 - 2.0), 0.0],
    }

    best = None
    diagnostics = {}
    for family in FAMILIES:
        if family not in families:
            continue
        try:
            if family == NORMAL:
                params, loglik = _fit_normal(x)
            else:
                params, loglik = _mle(x, family, starts[family])
            k = N_PARAMS[family]
            fit = MarginalFit(family=family, params=params, loglik=loglik,
                              aic=2.0 * k - 2.0 * loglik, n_obs=x.size)
        except (FitError, FloatingPointError, ValueError) as exc:
            diagnostics[family] = str(exc)
            continue
        if best is None or fit.aic < best.aic:
            best = fit
    if best is None:
        raise FitError("all marginal families failed to converge",
                       diagnostics=diagnostics)
    return best


def pit(returns, fits):
    """Probability integral transform, one fitted marginal per column."""
    r = np.asarray(returns, dtype=np.float64)
    if r.ndim != 2 or len(fits) != r.shape[1]:
        raise InputError(
            f"need one marginal fit per column ({r.shape[1] if r.ndim == 2 else '?'} "
            f"columns, {len(fits)} fits)")
    u = np.empty_like(r)
    for j, fit in enumerate(fits):
        u[:, j] = marginal_cdf(fit, r[:, j])
    return np.clip(u, PIT_EPS, 1.0 - PIT_EPS)
