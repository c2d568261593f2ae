"""Bivariate copulas: density, MLE, AIC selection, h-functions, rank stats.

Four parametric families (Gaussian, Student's-t, Clayton, Frank) plus the
Independence copula. The h-function is the conditional distribution
h(u|v) = dC(u,v)/dv; its closed forms per family are validated against
finite differences in the test suite.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from . import kernels as K
from .errors import FitError, InputError

GAUSSIAN = "Gaussian"
STUDENT_T = "StudentT"
CLAYTON = "Clayton"
FRANK = "Frank"
INDEPENDENCE = "Independence"
PARAMETRIC_FAMILIES = (GAUSSIAN, STUDENT_T, CLAYTON, FRANK)
N_PARAMS = {GAUSSIAN: 1, STUDENT_T: 2, CLAYTON: 1, FRANK: 1, INDEPENDENCE: 0}

EPS_U = 1e-10           # clamp for unit-interval arguments
RHO_BOUND = 0.999
T_NU_MIN, T_NU_MAX = 2.05, 30.0
CLAYTON_MIN, CLAYTON_MAX = 1e-4, 28.0
FRANK_BOUND = 35.0
FRANK_INDEP_EPS = 1e-6   # |theta| below this behaves as Independence
MIN_OBS = 30


@dataclass(frozen=True)
class BivariateCopulaFit:
    family: str
    params: dict
    loglik: float
    aic: float
    n_obs: int

    def __post_init__(self):
        _check_params(self.family, self.params)

    def h(self, u, v):
        return h(self.family, self.params, u, v)

    def h_inv(self, w, v):
        return h_inv(self.family, self.params, w, v)

    def density(self, u, v):
        return copula_density(self.family, self.params, u, v)

    def logpdf(self, u, v):
        return copula_logpdf(self.family, self.params, u, v)

    def to_dict(self):
        return {
            "family": self.family,
            "params": {k: float(v) for k, v in sorted(self.params.items())},
            "loglik": float(self.loglik),
            "aic": float(self.aic),
        }

    @classmethod
    def from_dict(cls, d, n_obs=0):
        return cls(family=d["family"], params=dict(d["params"]),
                   loglik=d["loglik"], aic=d["aic"], n_obs=n_obs)


def independence_fit(n_obs=0):
    return BivariateCopulaFit(family=INDEPENDENCE, params={}, loglik=0.0,
                              aic=0.0, n_obs=n_obs)


def _check_params(family, params):
    if family == GAUSSIAN:
        if not -1.0 < params["rho"] < 1.0:
            raise InputError(f"Gaussian rho must lie in (-1, 1), got {params['rho']}")
    elif family == STUDENT_T:
        if not -1.0 < params["rho"] < 1.0:
            raise InputError(f"StudentT rho must lie in (-1, 1), got {params['rho']}")
        if params["nu"] <= 2.0:
            raise InputError(f"StudentT nu must exceed 2, got {params['nu']}")
    elif family == CLAYTON:
        if params["theta"] <= 0.0:
            raise InputError(f"Clayton theta must be positive, got {params['theta']}")
    elif family == FRANK:
        if params["theta"] == 0.0:
            raise InputError("Frank theta must be non-zero")
    elif family == INDEPENDENCE:
        if params:
            raise InputError("Independence copula has no parameters")
    else:
        raise InputError(f"unknown copula family {family!r}")


def _clamp(u):
    a = np.asarray(u, dtype=np.float64)
    if np.any(a < 0.0) or np.any(a > 1.0):
        raise InputError("copula arguments must lie in [0, 1]")
    return np.clip(a, EPS_U, 1.0 - EPS_U)


def _as_output(arr, *inputs):
    if all(np.isscalar(x) or np.ndim(x) == 0 for x in inputs):
        return float(np.asarray(arr).ravel()[0])
    return np.asarray(arr)


def copula_logpdf(family, params, u, v):
    uc, vc = _clamp(u), _clamp(v)
    if family == INDEPENDENCE:
        out = np.zeros(np.broadcast(uc, vc).shape)
    elif family == GAUSSIAN:
        out = K.gauss_logpdf(K.norm_ppf(uc), K.norm_ppf(vc), params["rho"])
    elif family == STUDENT_T:
        nu = params["nu"]
        out = K.t_logpdf(K.t_ppf(uc, nu), K.t_ppf(vc, nu), params["rho"], nu)
    elif family == CLAYTON:
        out = K.clayton_logpdf(uc, vc, params["theta"])
    elif family == FRANK:
        if abs(params["theta"]) < FRANK_INDEP_EPS:
            out = np.zeros(np.broadcast(uc, vc).shape)
        else:
            out = K.frank_logpdf(uc, vc, params["theta"])
    else:
        raise InputError(f"unknown copula family {family!r}")
    return _as_output(out, u, v)


def copula_density(family, params, u, v):
    return _as_output(np.exp(np.atleast_1d(copula_logpdf(family, params, u, v))),
                      u, v)


def h(family, params, u, v):
    """Conditional distribution h(u|v) = dC(u,v)/dv, mapped back to (0,1)."""
    uc, vc = _clamp(u), _clamp(v)
    if family == INDEPENDENCE:
        out = np.broadcast_arrays(uc, vc)[0].copy()
    elif family == GAUSSIAN:
        rho = params["rho"]
        if rho == 0.0:
            out = np.broadcast_arrays(uc, vc)[0].copy()
        else:
            out = K.gauss_h(K.norm_ppf(uc), K.norm_ppf(vc), rho)
    elif family == STUDENT_T:
        nu = params["nu"]
        out = K.t_h(K.t_ppf(uc, nu), K.t_ppf(vc, nu), params["rho"], nu)
    elif family == CLAYTON:
        out = K.clayton_h(uc, vc, params["theta"])
    elif family == FRANK:
        theta = params["theta"]
        if abs(theta) < FRANK_INDEP_EPS:
            out = np.broadcast_arrays(uc, vc)[0].copy()
        else:
            out = K.frank_h(uc, vc, theta)
    else:
        raise InputError(f"unknown copula family {family!r}")
    return _as_output(np.clip(out, EPS_U, 1.0 - EPS_U), u, v)


def h_inv(family, params, w, v):
    """Inverse of h in its first argument: h(family, params, h_inv(w, v), v) = w."""
    wc, vc = _clamp(w), _clamp(v)
    if family == INDEPENDENCE:
        out = np.broadcast_arrays(wc, vc)[0].copy()
    elif family == GAUSSIAN:
        rho = params["rho"]
        if rho == 0.0:
            out = np.broadcast_arrays(wc, vc)[0].copy()
        else:
            out = K.gauss_hinv(K.norm_ppf(wc), K.norm_ppf(vc), rho)
    elif family == STUDENT_T:
        nu = params["nu"]
        out = K.t_hinv(K.t_ppf(wc, nu + 1.0), K.t_ppf(vc, nu), params["rho"], nu)
    elif family == CLAYTON:
        out = K.clayton_hinv(wc, vc, params["theta"])
    elif family == FRANK:
        theta = params["theta"]
        if abs(theta) < FRANK_INDEP_EPS:
            out = np.broadcast_arrays(wc, vc)[0].copy()
        else:
            out = K.frank_hinv(wc, vc, theta)
    else:
        raise InputError(f"unknown copula family {family!r}")
    return _as_output(np.clip(out, EPS_U, 1.0 - EPS_U), w, v)


def kendall_tau(x, y):
    """Kendall tau-a: concordant minus discordant pairs over n(n-1)/2."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size or x.size < 2:
        raise InputError("kendall_tau needs two equal-length series (n >= 2)")
    if np.unique(x).size < 2 or np.unique(y).size < 2:
        raise InputError("kendall_tau undefined for constant input")
    return K.kendall_tau(x, y)


def spearman_rho(x, y):
    """Spearman rho: Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size or x.size < 2:
        raise InputError("spearman_rho needs two equal-length series (n >= 2)")
    if np.unique(x).size < 2 or np.unique(y).size < 2:
        raise InputError("spearman_rho undefined for constant input")
    rx = stats.rankdata(x)
    ry = stats.rankdata(y)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float(np.dot(rx, ry) / math.sqrt(np.dot(rx, rx) * np.dot(ry, ry)))


def _prepare_pair(u, v):
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.size != v.size:
        raise InputError("u and v must have equal lengths")
    if u.size < MIN_OBS:
        raise InputError(f"need >= {MIN_OBS} observations, got {u.size}")
    if np.any(u <= 0.0) or np.any(u >= 1.0) or np.any(v <= 0.0) or np.any(v >= 1.0):
        raise InputError("copula data must lie strictly inside (0, 1)")
    return np.clip(u, EPS_U, 1.0 - EPS_U), np.clip(v, EPS_U, 1.0 - EPS_U)


def _fit_gaussian(u, v):
    x, y = K.norm_ppf(u), K.norm_ppf(v)

    def nll(rho):
        return -float(np.sum(K.gauss_logpdf(x, y, rho)))

    res = optimize.minimize_scalar(nll, bounds=(-RHO_BOUND, RHO_BOUND),
                                   method="bounded", options={"xatol": 1e-6})
    return {"rho": float(res.x)}, -float(res.fun)


def _fit_student_t(u, v, tau):
    """Joint (rho, nu) MLE via the nu profile likelihood.

    The inner rho problem is solved to convergence for each trial nu, so
    maximising the profile over nu recovers the joint optimum. The inner
    search brackets around the Kendall-tau inversion sin(pi tau / 2),
    falling back to the full (-1, 1) range when the optimum pins there.
    """
    rho0 = float(np.clip(math.sin(0.5 * math.pi * tau), -0.99, 0.99))
    r_lo = max(rho0 - 0.4, -RHO_BOUND)
    r_hi = min(rho0 + 0.4, RHO_BOUND)

    def profile(log_nu_m2, xatol):
        nu = 2.0 + math.exp(log_nu_m2)
        x, y = K.t_ppf(u, nu), K.t_ppf(v, nu)

        def nll(rho):
            val = -float(np.sum(K.t_logpdf(x, y, rho, nu)))
            return val if np.isfinite(val) else 1e12

        res = optimize.minimize_scalar(nll, bounds=(r_lo, r_hi),
                                       method="bounded",
                                       options={"xatol": xatol})
        if (res.x - r_lo < 2e-3 and r_lo > -RHO_BOUND) or (
                r_hi - res.x < 2e-3 and r_hi < RHO_BOUND):
            res = optimize.minimize_scalar(nll, bounds=(-RHO_BOUND, RHO_BOUND),
                                           method="bounded",
                                           options={"xatol": xatol})
        return float(res.fun), float(res.x), nu

    lo, hi = math.log(T_NU_MIN - 2.0), math.log(T_NU_MAX - 2.0)
    grid = np.linspace(lo, hi, 5)
    coarse = [profile(g, 1e-3) for g in grid]
    i_best = int(np.argmin([c[0] for c in coarse]))
    left = grid[max(i_best - 1, 0)]
    right = grid[min(i_best + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda g: profile(g, 1e-3)[0],
                                   bounds=(left, right), method="bounded",
                                   options={"xatol": 1e-2})
    best = min([coarse[i_best], profile(float(res.x), 1e-6)],
               key=lambda c: c[0])
    fun, rho, nu = best
    if not np.isfinite(fun):
        raise FitError("StudentT copula fit diverged")
    return {"rho": rho, "nu": nu}, -fun


def _fit_clayton(u, v, tau):
    if tau <= 0.0:
        raise FitError("Clayton requires positive dependence (empirical tau <= 0)")

    def nll(theta):
        return -float(np.sum(K.clayton_logpdf(u, v, theta)))

    res = optimize.minimize_scalar(nll, bounds=(CLAYTON_MIN, CLAYTON_MAX),
                                   method="bounded", options={"xatol": 1e-6})
    return {"theta": float(res.x)}, -float(res.fun)


def _fit_frank(u, v):
    def nll(theta):
        if abs(theta) < FRANK_INDEP_EPS:
            return 0.0
        return -float(np.sum(K.frank_logpdf(u, v, theta)))

    res = optimize.minimize_scalar(nll, bounds=(-FRANK_BOUND, FRANK_BOUND),
                                   method="bounded", options={"xatol": 1e-6})
    theta = float(res.x)
    if abs(theta) < FRANK_INDEP_EPS:
        theta = math.copysign(FRANK_INDEP_EPS, theta if theta != 0.0 else 1.0)
    return {"theta": theta}, -float(res.fun)


def fit_bicop(u, v, family, tau=None):
    """MLE of one copula family on (0,1) data (the copula term only)."""
    u, v = _prepare_pair(u, v)
    if family == INDEPENDENCE:
        return independence_fit(u.size)
    if family not in PARAMETRIC_FAMILIES:
        raise InputError(f"unknown copula family {family!r}")
    if tau is None and family in (STUDENT_T, CLAYTON):
        tau = kendall_tau(u, v)
    if family == GAUSSIAN:
        params, loglik = _fit_gaussian(u, v)
    elif family == STUDENT_T:
        params, loglik = _fit_student_t(u, v, tau)
    elif family == CLAYTON:
        params, loglik = _fit_clayton(u, v, tau)
    else:
        params, loglik = _fit_frank(u, v)
    if not np.isfinite(loglik):
        raise FitError(f"{family} copula fit produced a non-finite likelihood")
    k = N_PARAMS[family]
    return BivariateCopulaFit(family=family, params=params, loglik=loglik,
                              aic=2.0 * k - 2.0 * loglik, n_obs=u.size)


def select_bicop(u, v, families=PARAMETRIC_FAMILIES):
    """Fit the admissible families and return the minimal-AIC copula.

    Clayton is excluded when the empirical tau is non-positive. Ties break
    in the fixed order Gaussian < StudentT < Clayton < Frank. Independence
    (AIC 0) is returned when every parametric AIC is positive.
    """
    u, v = _prepare_pair(u, v)
    tau = kendall_tau(u, v)
    best = None
    diagnostics = {}
    for family in PARAMETRIC_FAMILIES:
        if family not in families:
            continue
        if family == CLAYTON and tau <= 0.0:
            continue
        try:
            fit = fit_bicop(u, v, family, tau=tau)
        except (FitError, FloatingPointError, ValueError) as exc:
            diagnostics[family] = str(exc)
            continue
        if best is None or fit.aic < best.aic:
            best = fit
    if best is None:
        raise FitError("all copula families failed to converge",
                       diagnostics=diagnostics)
    if best.aic > 0.0:
        return independence_fit(u.size)
    return best
