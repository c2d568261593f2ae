"""Multivariate Gaussian / Student's-t copulas for joint simplification.

Estimation at high dimension goes through pairwise Kendall-tau inversion
rho = sin(pi tau / 2), projection to the nearest positive-definite
correlation matrix (eigenvalue floor 1e-6, rescaled unit diagonal), and
a one-dimensional profile MLE for the Student-t degrees of freedom on
[2.1, 50]. AIC selects between the two families with ties to Gaussian.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from . import kernels as K
from .bicop import EPS_U, kendall_tau
from .errors import InputError, NumericalError

GAUSSIAN = "Gaussian"
STUDENT_T = "StudentT"

EIG_FLOOR = 1e-6
NU_MIN, NU_MAX = 2.1, 50.0


@dataclass(frozen=True)
class JointCopulaFit:
    family: str
    corr: np.ndarray = field(repr=False)
    nu: float | None
    loglik: float
    aic: float
    n_obs: int

    @property
    def dim(self):
        return self.corr.shape[0]

    @property
    def n_params(self):
        m = self.dim
        return m * (m - 1) // 2 + (1 if self.family == STUDENT_T else 0)

    def to_dict(self):
        return {
            "family": self.family,
            "corr": [[float(x) for x in row] for row in self.corr],
            "nu": None if self.nu is None else float(self.nu),
            "loglik": float(self.loglik),
            "aic": float(self.aic),
        }

    @classmethod
    def from_dict(cls, d, n_obs=0):
        return cls(family=d["family"],
                   corr=np.asarray(d["corr"], dtype=np.float64),
                   nu=d["nu"], loglik=d["loglik"], aic=d["aic"], n_obs=n_obs)


def nearest_correlation(a, floor=EIG_FLOOR):
    """Eigenvalue-clipped positive-definite correlation matrix."""
    a = np.asarray(a, dtype=np.float64)
    a = 0.5 * (a + a.T)
    vals, vecs = np.linalg.eigh(a)
    vals = np.maximum(vals, floor)
    r = (vecs * vals) @ vecs.T
    d = np.sqrt(np.diag(r))
    r = r / np.outer(d, d)
    r = 0.5 * (r + r.T)
    np.fill_diagonal(r, 1.0)
    return r


def tau_correlation(u):
    """Pairwise Kendall-tau-inverted correlation matrix, PD-projected."""
    u = np.asarray(u, dtype=np.float64)
    m = u.shape[1]
    r = np.eye(m)
    for i in range(m):
        for j in range(i + 1, m):
            rho = math.sin(0.5 * math.pi * kendall_tau(u[:, i], u[:, j]))
            r[i, j] = r[j, i] = rho
    return nearest_correlation(r)


def _gauss_scores(u):
    return special.ndtri(np.clip(u, EPS_U, 1.0 - EPS_U))


def gaussian_logpdf(corr, u):
    """Per-row log-density of the Gaussian copula."""
    z = _gauss_scores(u)
    chol = np.linalg.cholesky(corr)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    w = np.linalg.solve(chol, z.T).T
    quad = np.sum(w * w, axis=1) - np.sum(z * z, axis=1)
    return -0.5 * logdet - 0.5 * quad


def student_t_logpdf(corr, nu, u):
    """Per-row log-density of the Student-t copula."""
    uc = np.clip(u, EPS_U, 1.0 - EPS_U)
    z = K.t_ppf(uc.ravel(), nu).reshape(uc.shape)
    m = corr.shape[0]
    chol = np.linalg.cholesky(corr)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    w = np.linalg.solve(chol, z.T).T
    quad = np.sum(w * w, axis=1)
    c = (special.gammaln((nu + m) / 2.0) + (m - 1.0) * special.gammaln(nu / 2.0)
         - m * special.gammaln((nu + 1.0) / 2.0))
    per_margin = np.sum(-0.5 * (nu + 1.0) * np.log1p(z * z / nu), axis=1)
    return (c - 0.5 * logdet
            - 0.5 * (nu + m) * np.log1p(quad / nu) - per_margin)


def joint_logpdf(fit, u):
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    if fit.family == GAUSSIAN:
        return gaussian_logpdf(fit.corr, u)
    return student_t_logpdf(fit.corr, fit.nu, u)


def fit_joint(u):
    """Fit both joint families and keep the minimal-AIC one (ties to Gaussian)."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2 or u.shape[1] < 2:
        raise InputError("joint copula needs >= 2 columns")
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise InputError("joint copula data must lie strictly inside (0, 1)")
    n, m = u.shape
    try:
        corr = tau_correlation(u)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"correlation projection failed: {exc}") from exc

    ll_gauss = float(np.sum(gaussian_logpdf(corr, u)))
    k_gauss = m * (m - 1) // 2
    aic_gauss = 2.0 * k_gauss - 2.0 * ll_gauss

    def nll(log_nu):
        return -float(np.sum(student_t_logpdf(corr, math.exp(log_nu), u)))

    res = optimize.minimize_scalar(nll, bounds=(math.log(NU_MIN), math.log(NU_MAX)),
                                   method="bounded", options={"xatol": 1e-3})
    nu = float(math.exp(res.x))
    ll_t = -float(res.fun)
    aic_t = 2.0 * (k_gauss + 1) - 2.0 * ll_t

    if aic_t < aic_gauss:
        return JointCopulaFit(family=STUDENT_T, corr=corr, nu=nu,
                              loglik=ll_t, aic=aic_t, n_obs=n)
    return JointCopulaFit(family=GAUSSIAN, corr=corr, nu=None,
                          loglik=ll_gauss, aic=aic_gauss, n_obs=n)


def simulate_joint(fit, n_samples, rng):
    """Draw uniforms from the fitted joint copula (normal draws first,
    then the chi-square mixing draws for Student-t)."""
    chol = np.linalg.cholesky(fit.corr)
    z = rng.standard_normal((n_samples, fit.dim)) @ chol.T
    if fit.family == GAUSSIAN:
        u = special.ndtr(z)
    else:
        g = rng.chisquare(fit.nu, n_samples) / fit.nu
        u = special.stdtr(fit.nu, z / np.sqrt(g)[:, None])
    return np.clip(u, EPS_U, 1.0 - EPS_U)
